"""Serve the scorer over the line-JSON protocol on stdio or HTTP.

    -> {"id": str, "text": str, "max_len": int}
    <- {"id": str, "tokens": [str], "logprobs": [float], "truncated"?: true}
    <- {"id": str, "error": str}

Requests are handled one at a time (position batching happens inside the
scorer); a failure of any single request becomes an error response for that
id and the process keeps serving. Only protocol lines go to stdout; logs go
to stderr.
"""
from __future__ import annotations

import json
import logging
import sys
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .scorer import MaskedLMScorer

log = logging.getLogger(__name__)


def handle_request(scorer: MaskedLMScorer, row: dict) -> dict:
    request_id = str(row.get("id", ""))
    try:
        text = row["text"]
        max_len = int(row["max_len"]) if "max_len" in row else None
        scored = scorer.score(text, max_len=max_len)
    except Exception as exc:  # noqa: BLE001 - every failure answers this id
        return {"id": request_id, "error": f"{type(exc).__name__}: {exc}"}
    response = {
        "id": request_id,
        "tokens": list(scored.tokens),
        "logprobs": list(scored.logprobs),
    }
    if scored.truncated:
        response["truncated"] = True
    return response


def serve_stdio(scorer: MaskedLMScorer) -> None:
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            log.warning("unparseable request line: %s", exc)
            print(json.dumps({"id": "", "error": f"bad request json: {exc}"}), flush=True)
            continue
        print(json.dumps(handle_request(scorer, row)), flush=True)


def serve_http(scorer: MaskedLMScorer, port: int, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self) -> None:  # noqa: N802 - http.server API
            if self.path.rstrip("/") != "/score":
                self.send_error(404)
                return
            length = int(self.headers.get("Content-Length", 0))
            try:
                row = json.loads(self.rfile.read(length))
            except json.JSONDecodeError as exc:
                body = {"id": "", "error": f"bad request json: {exc}"}
            else:
                body = handle_request(scorer, row)
            payload = json.dumps(body).encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def log_message(self, fmt: str, *args) -> None:
            log.debug(fmt, *args)

    return ThreadingHTTPServer((host, port), Handler)
