"""Load and validate knowledge-base files from disk.

Three JSONL layouts are understood (one record per line, UTF-8):

* triples:   ``{"head": str, "relation": str, "tail": str}``
* concepts:  ``{"head": str, "start": int, "end": int, "concept": str,
  "plausibility": float}``
* abstract:  ``{"source_head": str, "relation": str, "tail": str,
  "start": int, "end": int, "concept": str, "plausibility": float}``

Concept and abstract records are joined to triples on exact head text (plus
relation/tail for abstract rows). Ids are assigned in file order, so loading
identical bytes always yields identical ids. A TSV adapter handles raw
``head<TAB>relation<TAB>tail`` dumps.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .kb_core import (
    AbstractTriple,
    ConceptEntry,
    Relation,
    Triple,
    normalize_concept,
    substitute_span,
)

log = logging.getLogger(__name__)

DEFAULT_PLAUSIBILITY_THRESHOLD = 0.9


class IngestError(ValueError):
    """A malformed or dangling record. Message names file and line."""


@dataclass
class IngestConfig:
    """Paths and filter settings for one ingest run."""

    triples_path: Optional[str] = None
    concepts_path: Optional[str] = None
    abstract_path: Optional[str] = None
    plausibility_threshold: float = DEFAULT_PLAUSIBILITY_THRESHOLD
    strict: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.plausibility_threshold <= 1.0:
            raise ValueError(
                f"plausibility threshold {self.plausibility_threshold} outside [0, 1]"
            )


@dataclass
class IngestReport:
    """Per-file line accounting: lines = parsed + skipped + filtered."""

    lines: int = 0
    parsed: int = 0
    skipped: int = 0
    filtered: int = 0


@dataclass
class KnowledgeBase:
    """An immutable-after-load corpus: triples, concept entries, abstractions."""

    triples: list[Triple] = field(default_factory=list)
    concepts: list[ConceptEntry] = field(default_factory=list)
    abstracts: list[AbstractTriple] = field(default_factory=list)

    def concepts_by_head(self) -> dict[str, list[ConceptEntry]]:
        out: dict[str, list[ConceptEntry]] = {}
        for entry in self.concepts:
            out.setdefault(entry.head, []).append(entry)
        return out

    def triple_ids_by_key(self) -> dict[tuple[str, Relation, str], int]:
        out = {}
        for t in self.triples:
            out[(t.head, t.relation, t.tail)] = t.id
        return out

    def heads(self) -> set[str]:
        return {t.head for t in self.triples}


def _iter_jsonl(path: str):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip():
                yield lineno, line


def _fail_or_skip(strict: bool, report: Optional[IngestReport], message: str) -> None:
    if strict:
        raise IngestError(message)
    if report is not None:
        report.skipped += 1
    log.warning("skipping record: %s", message)


def load_triples(
    path: str,
    strict: bool = True,
    report: Optional[IngestReport] = None,
) -> list[Triple]:
    """Parse a triples JSONL file, assigning ids in file order."""
    triples: list[Triple] = []
    for lineno, line in _iter_jsonl(path):
        if report is not None:
            report.lines += 1
        try:
            row = json.loads(line)
            triple = Triple(
                id=len(triples),
                head=str(row["head"]).strip(),
                relation=Relation.parse(row["relation"]),
                tail=str(row["tail"]).strip(),
            )
        except (KeyError, ValueError, TypeError) as exc:
            _fail_or_skip(strict, report, f"{path}:{lineno}: {exc}")
            continue
        triples.append(triple)
        if report is not None:
            report.parsed += 1
    return triples


def load_triples_tsv(
    path: str,
    strict: bool = True,
    report: Optional[IngestReport] = None,
) -> list[Triple]:
    """Adapter for raw ``head<TAB>relation<TAB>tail`` files."""
    triples: list[Triple] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            if report is not None:
                report.lines += 1
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                _fail_or_skip(strict, report, f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}")
                continue
            try:
                triple = Triple(
                    id=len(triples),
                    head=parts[0].strip(),
                    relation=Relation.parse(parts[1].strip()),
                    tail=parts[2].strip(),
                )
            except ValueError as exc:
                _fail_or_skip(strict, report, f"{path}:{lineno}: {exc}")
                continue
            triples.append(triple)
            if report is not None:
                report.parsed += 1
    return triples


def load_concepts(
    path: str,
    threshold: float = DEFAULT_PLAUSIBILITY_THRESHOLD,
    known_heads: Optional[set[str]] = None,
    strict: bool = True,
    report: Optional[IngestReport] = None,
) -> list[ConceptEntry]:
    """Parse concept entries, keeping only plausibility >= threshold.

    With ``known_heads`` given, an entry whose head is not in the set is a
    dangling reference.
    """
    entries: list[ConceptEntry] = []
    for lineno, line in _iter_jsonl(path):
        if report is not None:
            report.lines += 1
        try:
            row = json.loads(line)
            entry = ConceptEntry.from_span(
                head=str(row["head"]),
                start=int(row["start"]),
                end=int(row["end"]),
                concept=str(row["concept"]),
                plausibility=float(row["plausibility"]),
            )
            if known_heads is not None and entry.head not in known_heads:
                raise IngestError(f"head {entry.head!r} not present in loaded KB")
        except (KeyError, ValueError, TypeError) as exc:
            _fail_or_skip(strict, report, f"{path}:{lineno}: {exc}")
            continue
        if entry.plausibility >= threshold:
            entries.append(entry)
            if report is not None:
                report.parsed += 1
        elif report is not None:
            report.filtered += 1
    return entries


def load_abstract_triples(
    path: str,
    triples: list[Triple],
    threshold: float = DEFAULT_PLAUSIBILITY_THRESHOLD,
    strict: bool = True,
    report: Optional[IngestReport] = None,
) -> list[AbstractTriple]:
    """Parse abstract triples, joining each row to its source triple.

    Rows are joined on exact (source_head, relation, tail); a row without a
    matching source triple is a dangling reference. The abstract head is
    reconstructed by substituting the concept into the source head at the
    given span, which enforces the reconstruction invariant per row. Only
    rows with plausibility >= threshold are kept.
    """
    by_key = {(t.head, t.relation, t.tail): t for t in triples}
    abstracts: list[AbstractTriple] = []
    for lineno, line in _iter_jsonl(path):
        if report is not None:
            report.lines += 1
        try:
            row = json.loads(line)
            relation = Relation.parse(row["relation"])
            key = (str(row["source_head"]), relation, str(row["tail"]))
            source = by_key.get(key)
            if source is None:
                raise IngestError(
                    f"source triple ({key[0]!r}, {relation.value}, {key[2]!r}) "
                    f"not present in loaded KB"
                )
            plausibility = float(row["plausibility"])
            entry = ConceptEntry.from_span(
                head=source.head,
                start=int(row["start"]),
                end=int(row["end"]),
                concept=str(row["concept"]),
                plausibility=plausibility,
            )
            abstract = AbstractTriple(
                id=len(abstracts),
                source_triple_id=source.id,
                concept_entry=entry,
                head_c=substitute_span(source.head, entry.start, entry.end, entry.concept),
                relation=relation,
                tail=source.tail,
                plausibility=plausibility,
            )
        except (KeyError, ValueError, TypeError) as exc:
            _fail_or_skip(strict, report, f"{path}:{lineno}: {exc}")
            continue
        if abstract.plausibility >= threshold:
            abstracts.append(abstract)
            if report is not None:
                report.parsed += 1
        elif report is not None:
            report.filtered += 1
    return abstracts


def load_kb(config: IngestConfig, reports: Optional[dict[str, IngestReport]] = None) -> KnowledgeBase:
    """Load all configured files into one corpus."""
    def _report(name: str) -> Optional[IngestReport]:
        if reports is None:
            return None
        return reports.setdefault(name, IngestReport())

    kb = KnowledgeBase()
    if config.triples_path:
        kb.triples = load_triples(config.triples_path, strict=config.strict, report=_report("triples"))
    if config.concepts_path:
        kb.concepts = load_concepts(
            config.concepts_path,
            threshold=config.plausibility_threshold,
            known_heads={t.head for t in kb.triples} if kb.triples else None,
            strict=config.strict,
            report=_report("concepts"),
        )
    if config.abstract_path:
        kb.abstracts = load_abstract_triples(
            config.abstract_path,
            kb.triples,
            threshold=config.plausibility_threshold,
            strict=config.strict,
            report=_report("abstract"),
        )
    return kb


def dump_triples(triples: Iterable[Triple], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in triples:
            fh.write(json.dumps({"head": t.head, "relation": t.relation.value, "tail": t.tail}) + "\n")


def dump_concepts(entries: Iterable[ConceptEntry], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            fh.write(
                json.dumps(
                    {
                        "head": e.head,
                        "start": e.start,
                        "end": e.end,
                        "concept": e.concept,
                        "plausibility": e.plausibility,
                    }
                )
                + "\n"
            )


def abstract_row(a: AbstractTriple, source: Triple) -> dict:
    return {
        "source_head": source.head,
        "relation": a.relation.value,
        "tail": a.tail,
        "start": a.concept_entry.start,
        "end": a.concept_entry.end,
        "concept": a.concept_entry.concept,
        "plausibility": a.plausibility,
    }


def dump_abstract_triples(abstracts: Iterable[AbstractTriple], triples: list[Triple], path: str) -> None:
    by_id = {t.id: t for t in triples}
    with open(path, "w", encoding="utf-8") as fh:
        for a in abstracts:
            fh.write(json.dumps(abstract_row(a, by_id[a.source_triple_id])) + "\n")


# Annotated rows carry plausibility exactly 1.0 (plausible) or 0.0
# (implausible); fractional scores come from a pseudo-labeling model.
def _is_annotated(plausibility: float) -> bool:
    return plausibility in (0.0, 1.0)


@dataclass
class CorpusStats:
    """Exact corpus counts. Averages are kept unrounded; round at display."""

    relation_counts: dict[str, int]
    total_triples: int
    unique_events: int
    unique_concepts: int
    abstract_annotated: int
    abstract_pseudo: int
    avg_concepts_per_event: float

    @property
    def abstract_total(self) -> int:
        return self.abstract_annotated + self.abstract_pseudo


def stats(kb: KnowledgeBase) -> CorpusStats:
    """Count the loaded corpus.

    ``avg_concepts_per_event`` is distinct (event, concept) pairs divided by
    the number of events that have at least one concept entry.
    """
    relation_counts = {r.value: 0 for r in Relation}
    for t in kb.triples:
        relation_counts[t.relation.value] += 1

    pairs = {(e.head, normalize_concept(e.concept)) for e in kb.concepts}
    concept_events = {head for head, _ in pairs}
    unique_concepts = {concept for _, concept in pairs}

    annotated = sum(1 for a in kb.abstracts if _is_annotated(a.plausibility))

    return CorpusStats(
        relation_counts=relation_counts,
        total_triples=len(kb.triples),
        unique_events=len({t.head for t in kb.triples}),
        unique_concepts=len(unique_concepts),
        abstract_annotated=annotated,
        abstract_pseudo=len(kb.abstracts) - annotated,
        avg_concepts_per_event=(len(pairs) / len(concept_events)) if concept_events else 0.0,
    )
