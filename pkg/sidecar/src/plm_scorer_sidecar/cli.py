from __future__ import annotations

import logging
import sys

import click

from .scorer import MaskedLMScorer, SidecarConfig
from .server import serve_http, serve_stdio


@click.command()
@click.option("--model", required=True, help="Model id or local checkpoint path.")
@click.option("--device", default="cpu", show_default=True)
@click.option("--max-len", type=int, default=128, show_default=True, help="Scored-token budget per request.")
@click.option("--batch-size", type=int, default=16, show_default=True, help="Masked positions per forward pass.")
@click.option("--option-delimiter", default=None, help="Score only tokens after this delimiter's last occurrence.")
@click.option("--http", "http_port", type=int, default=None, help="Serve HTTP on this port instead of stdio.")
def main(model, device, max_len, batch_size, option_delimiter, http_port) -> None:
    """Serve masked-LM pseudo-log-likelihood scoring over stdio or HTTP."""
    logging.basicConfig(level=logging.INFO, stream=sys.stderr)
    config = SidecarConfig(
        model=model,
        device=device,
        max_len=max_len,
        batch_size=batch_size,
        option_delimiter=option_delimiter,
    )
    scorer = MaskedLMScorer(config)
    logging.getLogger(__name__).info("serving model %s on %s", model, "http" if http_port else "stdio")
    if http_port is not None:
        serve_http(scorer, http_port).serve_forever()
    else:
        serve_stdio(scorer)


if __name__ == "__main__":
    main()
