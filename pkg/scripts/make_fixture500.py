#!/usr/bin/env python3
"""Generate the 500-row statistics fixture and its expected counts.

The corpus is written first, then the expectations are recomputed by
scanning the emitted JSONL with standalone logic, so the checked-in
expected_counts.json does not depend on the package under test. Run once;
outputs are committed under tests/data/fixture500/.
"""
from __future__ import annotations

import json
import os

import numpy as np

RELATIONS = [
    "xEffect", "oEffect", "xWant", "oWant", "xReact",
    "oReact", "xNeed", "xAttr", "xIntent",
]
THRESHOLD = 0.9


def build(out_dir: str) -> None:
    rng = np.random.default_rng(500500)
    words = [f"n{i:03d}" for i in range(400)]
    concepts = [f"class {i:03d}" for i in range(120)]

    triples = []
    for i in range(500):
        verb = words[int(rng.integers(0, len(words)))]
        noun = words[int(rng.integers(0, len(words)))]
        triples.append(
            {
                "head": f"PersonX {verb} the {noun}",
                "relation": RELATIONS[int(rng.integers(0, 9))],
                "tail": f"{words[int(rng.integers(0, len(words)))]} {i}",
            }
        )

    concept_rows = []
    for head in dict.fromkeys(t["head"] for t in triples):
        for _ in range(int(rng.integers(0, 4))):
            noun = head.rsplit(" ", 1)[1]
            start = len(head) - len(noun)
            # A third of rows fall below the threshold on purpose.
            plausibility = float(np.round(rng.uniform(0.6, 1.0), 4))
            concept_rows.append(
                {
                    "head": head,
                    "start": start,
                    "end": len(head),
                    "concept": concepts[int(rng.integers(0, len(concepts)))],
                    "plausibility": plausibility,
                }
            )

    by_head: dict[str, list[dict]] = {}
    for row in concept_rows:
        by_head.setdefault(row["head"], []).append(row)
    abstract_rows = []
    for t in triples:
        entries = by_head.get(t["head"], [])
        if not entries or rng.random() < 0.3:
            continue
        entry = entries[int(rng.integers(0, len(entries)))]
        roll = rng.random()
        if roll < 0.3:
            plausibility = 1.0  # annotated plausible
        elif roll < 0.4:
            plausibility = 0.0  # annotated implausible; filtered at load
        else:
            plausibility = float(np.round(rng.uniform(0.6, 1.0), 4))
        abstract_rows.append(
            {
                "source_head": t["head"],
                "relation": t["relation"],
                "tail": t["tail"],
                "start": entry["start"],
                "end": entry["end"],
                "concept": entry["concept"],
                "plausibility": plausibility,
            }
        )

    os.makedirs(out_dir, exist_ok=True)
    for name, rows in [
        ("triples.jsonl", triples),
        ("concepts.jsonl", concept_rows),
        ("abstract.jsonl", abstract_rows),
    ]:
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row) + "\n")

    expected = recount(out_dir)
    with open(os.path.join(out_dir, "expected_counts.json"), "w", encoding="utf-8") as fh:
        json.dump(expected, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(expected, indent=2, sort_keys=True))


def recount(out_dir: str) -> dict:
    """Recompute every expected statistic straight from the files."""

    def rows(name):
        with open(os.path.join(out_dir, name), encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]

    triples = rows("triples.jsonl")
    concept_rows = [r for r in rows("concepts.jsonl") if r["plausibility"] >= THRESHOLD]
    abstract_rows = [r for r in rows("abstract.jsonl") if r["plausibility"] >= THRESHOLD]

    relation_counts = {r: 0 for r in RELATIONS}
    for t in triples:
        relation_counts[t["relation"]] += 1

    def norm(text: str) -> str:
        return " ".join(text.lower().split())

    pairs = {(r["head"], norm(r["concept"])) for r in concept_rows}
    events_with_concepts = {h for h, _ in pairs}
    annotated = sum(1 for r in abstract_rows if r["plausibility"] in (0.0, 1.0))

    return {
        "relation_counts": relation_counts,
        "total_triples": len(triples),
        "unique_events": len({t["head"] for t in triples}),
        "unique_concepts": len({c for _, c in pairs}),
        "abstract_annotated": annotated,
        "abstract_pseudo": len(abstract_rows) - annotated,
        "abstract_total": len(abstract_rows),
        "avg_concepts_per_event": len(pairs) / len(events_with_concepts),
        "concept_lines": len(rows("concepts.jsonl")),
        "concept_filtered": len(rows("concepts.jsonl")) - len(concept_rows),
        "abstract_lines": len(rows("abstract.jsonl")),
        "abstract_filtered": len(rows("abstract.jsonl")) - len(abstract_rows),
    }


if __name__ == "__main__":
    here = os.path.dirname(os.path.abspath(__file__))
    build(os.path.join(here, "..", "tests", "data", "fixture500"))
