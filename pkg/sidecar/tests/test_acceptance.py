"""Sidecar acceptance: protocol golden file, distribution sanity, and the
full synth -> score -> predict pipeline through the primary CLI.

Run with ``pytest tests/test_acceptance.py -v -s``. The distribution check
uses CONCEPT_FORGE_SIDECAR_MODEL when set (a public checkpoint); otherwise
the locally built one (this sandbox cannot reach a model hub).
"""
from __future__ import annotations

import json
import os
import subprocess
import sys
from pathlib import Path

from plm_scorer_sidecar import MaskedLMScorer, SidecarConfig

from .test_protocol import check_response_shape, run_stdio_session

DATA = Path(__file__).parent / "data"


def report(criterion: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"{status}: {criterion}{suffix}")
    assert ok, f"{criterion}{suffix}"


def test_golden_file_protocol_conformance(tiny_checkpoint):
    requests = (DATA / "golden_requests.jsonl").read_text("utf-8").splitlines()
    request_ids = [json.loads(line)["id"] for line in requests]
    first = run_stdio_session(tiny_checkpoint, requests)
    second = run_stdio_session(tiny_checkpoint, requests)
    ok = len(first) == len(requests)
    ok = ok and [row["id"] for row in first] == request_ids
    for row in first:
        check_response_shape(row)
    errors = [row["id"] for row in first if "error" in row]
    ok = ok and errors == ["g07", "g08"]  # the two empty-text requests
    truncated = [row["id"] for row in first if row.get("truncated")]
    ok = ok and truncated == ["g06"]
    ok = ok and first == second
    report(
        "golden-file protocol conformance",
        ok,
        f"{len(first)} responses, errors {errors}, truncated {truncated}, two runs identical",
    )


def test_vocabulary_probabilities_sum_to_one(tiny_checkpoint):
    model = os.environ.get("CONCEPT_FORGE_SIDECAR_MODEL", tiny_checkpoint)
    which = "public checkpoint" if "CONCEPT_FORGE_SIDECAR_MODEL" in os.environ else "local checkpoint"
    scorer = MaskedLMScorer(SidecarConfig(model=model, batch_size=8))
    text = "personx arrives at the bar to take a rest and eat food"
    sums = [scorer.vocab_probability_sum(text, position) for position in range(10)]
    ok = all(abs(s - 1.0) <= 1e-4 for s in sums)
    report(
        "per-position vocabulary probabilities sum to 1 +/- 1e-4",
        ok,
        f"10 positions on {which}, max deviation {max(abs(s - 1.0) for s in sums):.2e}",
    )


def test_full_pipeline_synth_score_predict(tiny_checkpoint, tmp_path):
    # The primary is driven purely through its CLI and file formats.
    relations = ["xWant", "xNeed", "xEffect"]
    triples = []
    for i in range(60):
        triples.append(
            {
                "head": f"PersonX w{i:03d}a the w{i:03d}b",
                "relation": relations[i % 3],
                "tail": f"opt w{i:03d}c {i}",
            }
        )
    kb_path = tmp_path / "triples.jsonl"
    with open(kb_path, "w", encoding="utf-8") as fh:
        for row in triples:
            fh.write(json.dumps(row) + "\n")

    qa_path = tmp_path / "qa.jsonl"
    synth = subprocess.run(
        ["concept-forge", "synth", "--kb", str(kb_path), "--seed", "7", "--out", str(qa_path)],
        capture_output=True,
        text=True,
        timeout=300,
    )
    assert synth.returncode == 0, synth.stderr
    pairs = [json.loads(line) for line in qa_path.read_text().splitlines()]
    assert len(pairs) >= 50
    fixture_path = tmp_path / "qa50.jsonl"
    with open(fixture_path, "w", encoding="utf-8") as fh:
        for row in pairs[:50]:
            fh.write(json.dumps(row) + "\n")

    scores_path = tmp_path / "scores.jsonl"
    scorer_cmd = f"{sys.executable} -m plm_scorer_sidecar --model {tiny_checkpoint} --batch-size 16"
    score = subprocess.run(
        ["concept-forge", "score", "--qa", str(fixture_path), "--scorer", scorer_cmd,
         "--out", str(scores_path)],
        capture_output=True,
        text=True,
        timeout=600,
    )
    ok = score.returncode == 0
    rows = []
    if ok:
        rows = [json.loads(line) for line in scores_path.read_text().splitlines()]
        ok = len(rows) == 50
        ok = ok and all(len(r["option_scores"]) == 3 and isinstance(r["pred"], int) for r in rows)
        ok = ok and all(s >= 0.0 for r in rows for s in r["option_scores"])
    report(
        "full pipeline synth -> score -> predict over the wire protocol",
        ok,
        f"{len(rows)} pairs scored without protocol errors" if ok else score.stderr[-300:],
    )
