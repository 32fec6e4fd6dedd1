"""Expand a knowledge base with its abstract (conceptualized) triples.

Abstract triples arrive already plausibility-filtered. This step deduplicates
them, drops the degenerate ones whose abstract head equals the source head,
and indexes survivors under their source triple so downstream synthesis can
pair each original with its abstractions.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .ingest import KnowledgeBase, abstract_row
from .kb_core import AbstractTriple, Relation, Triple


@dataclass
class AugmentedCorpus:
    """Original triples plus retained abstractions, indexed by source id."""

    originals: list[Triple]
    abstractions: list[AbstractTriple] = field(default_factory=list)
    index: dict[int, list[AbstractTriple]] = field(default_factory=dict)

    def original_by_id(self) -> dict[int, Triple]:
        return {t.id: t for t in self.originals}


def _dedup_key(a: AbstractTriple) -> tuple[str, Relation, str]:
    return (" ".join(a.head_c.lower().split()), a.relation, " ".join(a.tail.lower().split()))


def augment(kb: KnowledgeBase, abstracts: list[AbstractTriple] | None = None) -> AugmentedCorpus:
    """Attach abstractions to their source triples.

    Duplicates on normalized (abstract head, relation, tail) are collapsed to
    the first occurrence, preserving input order among survivors. An
    abstraction whose head text equals its source head (the concept equals
    the instance) is dropped: it adds nothing and would collide with the
    source in constraint sets. A dangling source reference is an error.
    """
    if abstracts is None:
        abstracts = kb.abstracts
    by_id = {t.id: t for t in kb.triples}
    seen: set[tuple[str, Relation, str]] = set()
    corpus = AugmentedCorpus(originals=list(kb.triples))
    for a in abstracts:
        source = by_id.get(a.source_triple_id)
        if source is None:
            raise ValueError(f"abstract triple {a.id}: source triple {a.source_triple_id} not loaded")
        if a.head_c == source.head:
            continue
        key = _dedup_key(a)
        if key in seen:
            continue
        seen.add(key)
        corpus.abstractions.append(a)
        corpus.index.setdefault(a.source_triple_id, []).append(a)
    return corpus


def expansion_report(corpus: AugmentedCorpus) -> dict[str, dict[str, float]]:
    """Per-relation expansion ratio |abstractions| / |originals|, plus a total row."""
    originals = {r.value: 0 for r in Relation}
    abstractions = {r.value: 0 for r in Relation}
    for t in corpus.originals:
        originals[t.relation.value] += 1
    for a in corpus.abstractions:
        abstractions[a.relation.value] += 1

    report: dict[str, dict[str, float]] = {}
    for r in Relation:
        o, a = originals[r.value], abstractions[r.value]
        report[r.value] = {"originals": o, "abstractions": a, "ratio": (a / o) if o else 0.0}
    total_o = len(corpus.originals)
    total_a = len(corpus.abstractions)
    report["total"] = {
        "originals": total_o,
        "abstractions": total_a,
        "ratio": (total_a / total_o) if total_o else 0.0,
    }
    return report


def dump_augmented(corpus: AugmentedCorpus, path: str) -> None:
    """Write the corpus as JSONL with an added origin field per record."""
    by_id = corpus.original_by_id()
    with open(path, "w", encoding="utf-8") as fh:
        for t in corpus.originals:
            row = {"head": t.head, "relation": t.relation.value, "tail": t.tail, "origin": "original"}
            fh.write(json.dumps(row) + "\n")
        for a in corpus.abstractions:
            row = abstract_row(a, by_id[a.source_triple_id])
            row["origin"] = "abstract"
            fh.write(json.dumps(row) + "\n")
