from __future__ import annotations

import pytest

from concept_forge.ingest import KnowledgeBase
from concept_forge.kb_core import (
    AbstractTriple,
    ConceptEntry,
    Relation,
    Triple,
    substitute_span,
)


def span_of(head: str, instance: str) -> tuple[int, int]:
    start = head.index(instance)
    return start, start + len(instance)


def entry(head: str, instance: str, concept: str, plausibility: float = 0.95) -> ConceptEntry:
    start, end = span_of(head, instance)
    return ConceptEntry(head, start, end, instance, concept, plausibility)


def abstract_of(a_id: int, source: Triple, e: ConceptEntry, plausibility: float = 0.95) -> AbstractTriple:
    return AbstractTriple(
        id=a_id,
        source_triple_id=source.id,
        concept_entry=e,
        head_c=substitute_span(source.head, e.start, e.end, e.concept),
        relation=source.relation,
        tail=source.tail,
        plausibility=plausibility,
    )


@pytest.fixture
def bar_casino_kb() -> KnowledgeBase:
    """The bar/casino scenario: both heads abstract to "entertainment place",
    so the casino triple may not serve as a distractor for the bar triple."""
    triples = [
        Triple(0, "PersonX arrive at the bar", Relation.X_WANT, "relax himself"),
        Triple(1, "PersonX is at the casino", Relation.X_WANT, "have a drink"),
        Triple(2, "PersonX cooks dinner tonight", Relation.X_WANT, "eat food"),
        Triple(3, "PersonX writes a letter", Relation.X_WANT, "mail it"),
        Triple(4, "PersonX studies math daily", Relation.X_WANT, "pass exams"),
    ]
    concepts = [
        entry(triples[0].head, "bar", "entertainment place"),
        entry(triples[0].head, "bar", "relaxation"),
        entry(triples[1].head, "casino", "entertainment place", 0.93),
    ]
    abstracts = [abstract_of(0, triples[0], concepts[0])]
    return KnowledgeBase(triples=triples, concepts=concepts, abstracts=abstracts)
