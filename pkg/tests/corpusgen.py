"""Deterministic synthetic corpora for tests.

Heads follow the pattern "PersonX <verb> the <noun>" with words drawn from a
seeded pool, so constraint sets are small and most triples have plenty of
eligible distractors. Concept entries attach to the noun span; abstract
triples always reuse one of their head's own concept entries, mirroring how
retrievals feed the abstraction step.
"""
from __future__ import annotations

import json
import os

import numpy as np

from concept_forge.ingest import KnowledgeBase, dump_concepts, dump_triples
from concept_forge.kb_core import (
    AbstractTriple,
    ConceptEntry,
    Relation,
    Triple,
    substitute_span,
)

RELATIONS = list(Relation)


def synthetic_kb(
    n_triples: int,
    seed: int,
    vocab: int = 4000,
    concept_vocab: int = 1500,
    concept_rate: float = 0.8,
    abstract_rate: float = 0.5,
) -> KnowledgeBase:
    rng = np.random.default_rng(seed)
    words = [f"w{i:04d}" for i in range(vocab)]
    concept_pool = [f"c{i:04d} notion" for i in range(concept_vocab)]

    triples: list[Triple] = []
    for i in range(n_triples):
        verb = words[int(rng.integers(0, vocab))]
        noun = words[int(rng.integers(0, vocab))]
        tail = f"{words[int(rng.integers(0, vocab))]} {words[int(rng.integers(0, vocab))]} {i % 97}"
        triples.append(
            Triple(
                id=i,
                head=f"PersonX {verb} the {noun}",
                relation=RELATIONS[i % len(RELATIONS)],
                tail=tail,
            )
        )

    concepts: list[ConceptEntry] = []
    entries_by_head: dict[str, list[ConceptEntry]] = {}
    for head in dict.fromkeys(t.head for t in triples):
        if rng.random() >= concept_rate:
            continue
        noun = head.rsplit(" ", 1)[1]
        start = len(head) - len(noun)
        for _ in range(int(rng.integers(1, 4))):
            entry = ConceptEntry(
                head=head,
                start=start,
                end=len(head),
                instance_text=noun,
                concept=concept_pool[int(rng.integers(0, concept_vocab))],
                plausibility=float(np.round(0.9 + 0.1 * rng.random(), 6)),
            )
            concepts.append(entry)
            entries_by_head.setdefault(head, []).append(entry)

    abstracts: list[AbstractTriple] = []
    for t in triples:
        entries = entries_by_head.get(t.head)
        if not entries or rng.random() >= abstract_rate:
            continue
        entry = entries[int(rng.integers(0, len(entries)))]
        plaus = 1.0 if rng.random() < 0.4 else float(np.round(0.9 + 0.099 * rng.random(), 6))
        entry = ConceptEntry(entry.head, entry.start, entry.end, entry.instance_text, entry.concept, plaus)
        abstracts.append(
            AbstractTriple(
                id=len(abstracts),
                source_triple_id=t.id,
                concept_entry=entry,
                head_c=substitute_span(t.head, entry.start, entry.end, entry.concept),
                relation=t.relation,
                tail=t.tail,
                plausibility=plaus,
            )
        )

    return KnowledgeBase(triples=triples, concepts=concepts, abstracts=abstracts)


def write_kb(kb: KnowledgeBase, directory: str) -> tuple[str, str, str]:
    triples_path = os.path.join(directory, "triples.jsonl")
    concepts_path = os.path.join(directory, "concepts.jsonl")
    abstract_path = os.path.join(directory, "abstract.jsonl")
    dump_triples(kb.triples, triples_path)
    dump_concepts(kb.concepts, concepts_path)
    by_id = {t.id: t for t in kb.triples}
    with open(abstract_path, "w", encoding="utf-8") as fh:
        for a in kb.abstracts:
            source = by_id[a.source_triple_id]
            fh.write(
                json.dumps(
                    {
                        "source_head": source.head,
                        "relation": a.relation.value,
                        "tail": a.tail,
                        "start": a.concept_entry.start,
                        "end": a.concept_entry.end,
                        "concept": a.concept_entry.concept,
                        "plausibility": a.plausibility,
                    }
                )
                + "\n"
            )
    return triples_path, concepts_path, abstract_path
