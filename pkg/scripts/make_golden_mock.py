#!/usr/bin/env python3
"""Generate the golden file for the mock scorer.

Implements the documented formula standalone (FNV-1a 64 over UTF-8 token
bytes; logprob = -(1 + (hash mod 1000)/1000)) so the checked-in expectations
are independent of the package. Run once; the output is committed.
"""
from __future__ import annotations

import json
import os

WORDS = [
    "bar", "casino", "drink", "relax", "PersonX", "PersonY", "record",
    "prize", "accept", "letter", "football", "game", "rest", "sport",
    "entertainment", "place", "概念", "événement", "niño", "café",
]


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def logprob(token: str) -> float:
    return -(1.0 + (fnv1a64(token.encode("utf-8")) % 1000) / 1000.0)


def main() -> None:
    texts = []
    for i in range(100):
        n_tokens = 1 + (i % 7)
        tokens = [WORDS[(i * (k + 3) + k * k) % len(WORDS)] for k in range(n_tokens)]
        texts.append(" ".join(tokens))

    out_path = os.path.join(os.path.dirname(__file__), "..", "tests", "data", "mock_golden.jsonl")
    os.makedirs(os.path.dirname(out_path), exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        for text in texts:
            tokens = text.split()
            fh.write(
                json.dumps(
                    {"text": text, "tokens": tokens, "logprobs": [logprob(t) for t in tokens]},
                    ensure_ascii=False,
                )
                + "\n"
            )
    print(f"wrote {len(texts)} golden rows to {os.path.normpath(out_path)}")


if __name__ == "__main__":
    main()
