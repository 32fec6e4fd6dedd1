"""Core domain types for commonsense triples plus the constraint-set algebra.

A knowledge base is a collection of (head event, relation, tail) triples.
Heads can carry conceptualizations: an instance span inside the head text
("bar") abstracted to a concept ("entertainment place"). Replacing the span
with the concept yields an abstract triple whose (relation, tail) half is
inherited unchanged.

Every triple is associated with a constraint set: the keywords of its head
plus the concepts of all its plausible conceptualizations. Two triples may
only serve as question/distractor for each other when their constraint sets
share no member at all.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Iterable, Optional

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)

PERSON_PLACEHOLDERS = frozenset({"personx", "persony", "personz"})


class Relation(Enum):
    """The nine inferential relations between a head event and a tail."""

    X_EFFECT = "xEffect"
    O_EFFECT = "oEffect"
    X_WANT = "xWant"
    O_WANT = "oWant"
    X_REACT = "xReact"
    O_REACT = "oReact"
    X_NEED = "xNeed"
    X_ATTR = "xAttr"
    X_INTENT = "xIntent"

    @classmethod
    def parse(cls, tag: str) -> "Relation":
        try:
            return cls(tag)
        except ValueError:
            known = ", ".join(r.value for r in cls)
            raise ValueError(f"unknown relation {tag!r}; expected one of: {known}") from None


@dataclass(frozen=True)
class Triple:
    """One knowledge-base assertion (head event, relation, tail)."""

    id: int
    head: str
    relation: Relation
    tail: str

    def __post_init__(self) -> None:
        if not self.head.strip():
            raise ValueError(f"triple {self.id}: empty head")
        if not self.tail.strip():
            raise ValueError(f"triple {self.id}: empty tail")


@dataclass(frozen=True)
class ConceptEntry:
    """A plausible conceptualization of one instance span inside a head event.

    ``head`` is the exact head text the entry attaches to (records are joined
    on head text). ``head[start:end]`` is the instance being abstracted.
    """

    head: str
    start: int
    end: int
    instance_text: str
    concept: str
    plausibility: float

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end <= len(self.head)):
            raise ValueError(
                f"span [{self.start}, {self.end}) out of bounds for head of "
                f"length {len(self.head)}"
            )
        if self.head[self.start : self.end] != self.instance_text:
            raise ValueError(
                f"instance text {self.instance_text!r} does not match head span "
                f"{self.head[self.start:self.end]!r}"
            )
        if not 0.0 <= self.plausibility <= 1.0:
            raise ValueError(f"plausibility {self.plausibility} outside [0, 1]")

    @classmethod
    def from_span(cls, head: str, start: int, end: int, concept: str, plausibility: float) -> "ConceptEntry":
        if not (0 <= start < end <= len(head)):
            raise ValueError(f"span [{start}, {end}) out of bounds for head of length {len(head)}")
        return cls(head, start, end, head[start:end], concept, plausibility)


@dataclass(frozen=True)
class AbstractTriple:
    """A triple whose head had one instance span replaced by a concept."""

    id: int
    source_triple_id: int
    concept_entry: ConceptEntry
    head_c: str
    relation: Relation
    tail: str
    plausibility: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.plausibility <= 1.0:
            raise ValueError(f"plausibility {self.plausibility} outside [0, 1]")
        rebuilt = substitute_span(
            self.concept_entry.head,
            self.concept_entry.start,
            self.concept_entry.end,
            self.concept_entry.concept,
        )
        if rebuilt != self.head_c:
            raise ValueError(
                f"abstract triple {self.id}: head {self.head_c!r} does not equal "
                f"source head with concept substituted ({rebuilt!r})"
            )


def substitute_span(head: str, start: int, end: int, replacement: str) -> str:
    """Replace ``head[start:end]`` with ``replacement``, byte-for-byte."""
    return head[:start] + replacement + head[end:]


@dataclass(frozen=True)
class ConstraintSet:
    """Keywords of a head event plus concepts of its conceptualizations.

    Members are normalized (lowercase, non-empty); multi-word concepts stay
    single members. Disjointness of two constraint sets is what licenses one
    triple as a distractor for the other.
    """

    keywords: frozenset[str] = field(default_factory=frozenset)
    concepts: frozenset[str] = field(default_factory=frozenset)

    def union(self) -> frozenset[str]:
        return self.keywords | self.concepts

    def with_concept(self, concept: str) -> "ConstraintSet":
        return ConstraintSet(self.keywords, self.concepts | {normalize_concept(concept)})


_stopwords_cache: Optional[frozenset[str]] = None


def load_stopwords(path: Optional[str] = None) -> frozenset[str]:
    """Load a stopword list: one token per line, UTF-8, ``#`` comments allowed.

    Without ``path`` the packaged versioned list is used (cached).
    """
    global _stopwords_cache
    if path is None:
        if _stopwords_cache is None:
            text = resources.files("concept_forge.data").joinpath("stopwords.txt").read_text("utf-8")
            _stopwords_cache = _parse_stopwords(text)
        return _stopwords_cache
    with open(path, encoding="utf-8") as fh:
        return _parse_stopwords(fh.read())


def _parse_stopwords(text: str) -> frozenset[str]:
    words = set()
    for line in text.splitlines():
        token = line.strip()
        if token and not token.startswith("#"):
            words.add(token.lower())
    return frozenset(words)


def _strip_plural(token: str) -> str:
    # Light s-stemmer: collapses plural/verb -s forms only.
    if token.endswith("ies") and len(token) > 4:
        return token[:-3] + "y"
    if token.endswith("es") and not token.endswith(("aes", "ees", "oes")) and len(token) > 3:
        return token[:-1]
    if token.endswith("s") and not token.endswith(("ss", "us")) and len(token) > 3:
        return token[:-1]
    return token


def extract_keywords(
    head: str,
    stopwords: Optional[frozenset[str]] = None,
    stem: bool = False,
) -> frozenset[str]:
    """Keyword tokens of a head event.

    Lowercased word tokens with stopwords, punctuation, and the
    PersonX/PersonY/PersonZ placeholders removed. ``stem=True`` additionally
    collapses plural -s forms (off by default). Deterministic; an empty
    result is legal.
    """
    if stopwords is None:
        stopwords = load_stopwords()
    out = set()
    for token in _WORD_RE.findall(head.lower()):
        if token in stopwords or token in PERSON_PLACEHOLDERS:
            continue
        if stem:
            token = _strip_plural(token)
            if not token or token in stopwords:
                continue
        out.add(token)
    return frozenset(out)


def normalize_concept(concept: str) -> str:
    """Lowercase and collapse whitespace; multi-word concepts stay one unit."""
    return " ".join(concept.lower().split())


def build_constraint(
    triple: Triple,
    concepts: Iterable[ConceptEntry],
    stopwords: Optional[frozenset[str]] = None,
    stem: bool = False,
) -> ConstraintSet:
    """Constraint set of a triple: head keywords plus its concept texts.

    All entries must reference this triple's head (joined on exact head text).
    """
    concept_texts = set()
    for entry in concepts:
        if entry.head != triple.head:
            raise ValueError(
                f"concept entry for head {entry.head!r} does not reference "
                f"triple {triple.id} head {triple.head!r}"
            )
        normalized = normalize_concept(entry.concept)
        if normalized:
            concept_texts.add(normalized)
    return ConstraintSet(
        keywords=extract_keywords(triple.head, stopwords=stopwords, stem=stem),
        concepts=frozenset(concept_texts),
    )


def disjoint(a: ConstraintSet, b: ConstraintSet) -> bool:
    """True iff the two constraint sets share no keyword or concept."""
    return (
        a.keywords.isdisjoint(b.keywords)
        and a.keywords.isdisjoint(b.concepts)
        and a.concepts.isdisjoint(b.keywords)
        and a.concepts.isdisjoint(b.concepts)
    )
