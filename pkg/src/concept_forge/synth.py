"""Turn triples into multiple-choice QA pairs with constrained distractors.

Each original triple becomes a question (via a per-relation template) whose
gold answer is its tail. Two distractor tails are sampled uniformly from
other triples of the same relation whose constraint sets share nothing with
the question's. Abstract triples become additional questions that reuse
their source's gold answer and distractors verbatim, with the conceptualized
head in the question text.

Distractor candidates always come from the original triples; an inverted
index over constraint-set members makes the disjointness filter cheap at
corpus scale. Every random choice draws from a generator seeded by
(global seed, pair identity), so output is independent of processing order
and thread count.
"""
from __future__ import annotations

import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Iterator, Mapping, Optional, Union

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .augment import AugmentedCorpus
from .kb_core import (
    AbstractTriple,
    ConceptEntry,
    ConstraintSet,
    Relation,
    Triple,
    build_constraint,
)

log = logging.getLogger(__name__)

NUM_OPTIONS = 3
REJECTION_CAP = 200

# Kind codes keep original-pair and abstract-pair RNG streams apart.
_RNG_KIND_ORIGINAL = 0
_RNG_KIND_ABSTRACT = 1


class SkippedTriple(Exception):
    """Raised when a triple has fewer than two usable distractor candidates."""


class TemplateError(KeyError):
    """No template configured for a relation."""


@dataclass(frozen=True)
class Templates:
    """Per-relation question and statement templates."""

    questions: Mapping[str, str]
    statements: Mapping[str, str]

    @classmethod
    def load(cls, path: Optional[str] = None) -> "Templates":
        if path is None:
            data = resources.files("concept_forge.data").joinpath("templates.toml").read_bytes()
            raw = tomllib.loads(data.decode("utf-8"))
        else:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        return cls(questions=dict(raw.get("questions", {})), statements=dict(raw.get("statements", {})))

    def question_for(self, relation: Relation) -> str:
        try:
            return self.questions[relation.value]
        except KeyError:
            raise TemplateError(f"no question template for relation {relation.value}") from None

    def statement_for(self, relation: Relation) -> str:
        try:
            return self.statements[relation.value]
        except KeyError:
            raise TemplateError(f"no statement template for relation {relation.value}") from None


_default_templates: Optional[Templates] = None


def default_templates() -> Templates:
    global _default_templates
    if _default_templates is None:
        _default_templates = Templates.load()
    return _default_templates


def subject_of(head: str) -> str:
    """The acting person of a head event: its first word."""
    parts = head.split()
    return parts[0] if parts else head


def verbalize(
    head: str,
    relation: Relation,
    templates: Optional[Templates] = None,
    subject: Optional[str] = None,
) -> str:
    """Render (head, relation) as a question via the relation's template."""
    templates = templates or default_templates()
    return templates.question_for(relation).format(head=head, subject=subject or subject_of(head))


@dataclass(frozen=True)
class QAPair:
    id: str
    question: str
    options: tuple[str, ...]
    gold_index: int
    source_id: int
    distractor_source_ids: tuple[int, ...]
    origin: str  # "original" | "abstract"

    def __post_init__(self) -> None:
        if not 0 <= self.gold_index < len(self.options):
            raise ValueError(f"gold index {self.gold_index} outside option range")
        ids = set(self.distractor_source_ids)
        if len(ids) != len(self.distractor_source_ids):
            raise ValueError("distractor source ids must be pairwise distinct")
        if self.origin == "original" and self.source_id in ids:
            raise ValueError("a distractor may not come from the question's own triple")

    @property
    def gold_text(self) -> str:
        return self.options[self.gold_index]


@dataclass
class ConstraintIndex:
    """Inverted index over original triples for distractor filtering.

    postings maps every constraint-set member (keyword or concept) to the
    sorted ids of the original triples carrying it; relation_buckets group
    original triple ids per relation; constraint_cache keeps each triple's
    constraint set for membership tests during sampling.
    """

    postings: dict[str, list[int]] = field(default_factory=dict)
    relation_buckets: dict[Relation, list[int]] = field(default_factory=dict)
    constraint_cache: dict[int, ConstraintSet] = field(default_factory=dict)
    keyword_only: bool = False
    _unions: dict[int, frozenset[str]] = field(default_factory=dict)
    _tails: dict[int, str] = field(default_factory=dict)

    def union_for(self, triple_id: int) -> frozenset[str]:
        return self._unions[triple_id]

    def normalized_tail(self, triple_id: int) -> str:
        return self._tails[triple_id]


def build_index(
    triples: Union[AugmentedCorpus, list[Triple]],
    concepts: Optional[Iterable[ConceptEntry]] = None,
    keyword_only: bool = False,
) -> ConstraintIndex:
    """Index the original triples by their constraint-set members.

    Only originals are indexed: distractors are always drawn from the
    original knowledge base. ``keyword_only`` drops the concept half of
    every constraint set (the weaker, keyword-overlap-only regime).
    """
    if isinstance(triples, AugmentedCorpus):
        triples = triples.originals
    by_head: dict[str, list[ConceptEntry]] = {}
    for entry in concepts or ():
        by_head.setdefault(entry.head, []).append(entry)

    index = ConstraintIndex(keyword_only=keyword_only)
    postings: dict[str, list[int]] = {}
    for t in triples:
        constraint = build_constraint(t, by_head.get(t.head, ()))
        if keyword_only:
            constraint = ConstraintSet(constraint.keywords, frozenset())
        index.constraint_cache[t.id] = constraint
        union = constraint.union()
        index._unions[t.id] = union
        index._tails[t.id] = _normalize_tail(t.tail)
        index.relation_buckets.setdefault(t.relation, []).append(t.id)
        for member in union:
            postings.setdefault(member, []).append(t.id)
    for ids in postings.values():
        ids.sort()
    for ids in index.relation_buckets.values():
        ids.sort()
    index.postings = postings
    return index


def _normalize_tail(tail: str) -> str:
    return " ".join(tail.casefold().split())


def query_constraint(q: Union[Triple, AbstractTriple], index: ConstraintIndex) -> ConstraintSet:
    """Constraint set of a question triple.

    An abstract triple inherits its source's constraint set plus its own
    concept (dropped again under keyword-only indexing).
    """
    if isinstance(q, AbstractTriple):
        base = index.constraint_cache[q.source_triple_id]
        if index.keyword_only:
            return base
        return base.with_concept(q.concept_entry.concept)
    return index.constraint_cache[q.id]


def _source_id(q: Union[Triple, AbstractTriple]) -> int:
    return q.source_triple_id if isinstance(q, AbstractTriple) else q.id


def eligible_distractors(q: Union[Triple, AbstractTriple], index: ConstraintIndex) -> set[int]:
    """All same-relation original triples constraint-disjoint from ``q``.

    Computed as the relation bucket minus the union of posting lists of
    ``q``'s constraint members, minus ``q``'s own source triple.
    """
    constraint = query_constraint(q, index)
    bucket = index.relation_buckets.get(q.relation, [])
    blocked: set[int] = {_source_id(q)}
    for member in constraint.union():
        blocked.update(index.postings.get(member, ()))
    return {tid for tid in bucket if tid not in blocked}


def _sample_with_rng(
    q: Triple,
    index: ConstraintIndex,
    rng: np.random.Generator,
) -> tuple[int, int]:
    """Draw two distractor ids uniformly without replacement.

    Rejection-samples the relation bucket against the cached constraint
    sets (cheap when few candidates are blocked), then falls back to
    materializing the eligible set exactly. Candidates whose tail text
    equals the gold tail are rejected as surface-identical answers.
    """
    bucket = index.relation_buckets.get(q.relation, [])
    q_union = index.union_for(q.id)
    gold_tail = index.normalized_tail(q.id)

    def usable(tid: int) -> bool:
        if tid == q.id:
            return False
        if index.normalized_tail(tid) == gold_tail:
            return False
        return not (index.union_for(tid) & q_union)

    picked: list[int] = []
    if len(bucket) > 3:
        for _ in range(REJECTION_CAP):
            tid = bucket[int(rng.integers(0, len(bucket)))]
            if tid not in picked and usable(tid):
                picked.append(tid)
                if len(picked) == 2:
                    return picked[0], picked[1]

    eligible = sorted(tid for tid in eligible_distractors(q, index) if index.normalized_tail(tid) != gold_tail)
    remaining = [tid for tid in eligible if tid not in picked]
    if len(picked) + len(remaining) < 2:
        raise SkippedTriple(f"triple {q.id}: fewer than 2 eligible distractors")
    while len(picked) < 2:
        choice = remaining.pop(int(rng.integers(0, len(remaining))))
        picked.append(choice)
    return picked[0], picked[1]


def _derived_rng(seed: int, kind: int, ident: int) -> np.random.Generator:
    return np.random.default_rng([seed, kind, ident])


def sample_distractors(q: Triple, index: ConstraintIndex, rng_seed: int) -> tuple[int, int]:
    """Sample two distractors for ``q`` from its own derived RNG stream."""
    return _sample_with_rng(q, index, _derived_rng(rng_seed, _RNG_KIND_ORIGINAL, q.id))


def _shuffled_options(
    gold_tail: str,
    distractor_tails: tuple[str, str],
    rng: np.random.Generator,
) -> tuple[tuple[str, ...], int]:
    base = (gold_tail,) + distractor_tails
    perm = rng.permutation(NUM_OPTIONS)
    options = tuple(base[i] for i in perm)
    gold_index = int(np.where(perm == 0)[0][0])
    return options, gold_index


def _pairs_for_original(
    t: Triple,
    corpus: AugmentedCorpus,
    index: ConstraintIndex,
    seed: int,
    templates: Templates,
    by_id: dict[int, Triple],
    include_abstract: bool,
) -> list[QAPair]:
    rng = _derived_rng(seed, _RNG_KIND_ORIGINAL, t.id)
    d1, d2 = _sample_with_rng(t, index, rng)
    distractor_tails = (by_id[d1].tail, by_id[d2].tail)
    options, gold_index = _shuffled_options(t.tail, distractor_tails, rng)
    pairs = [
        QAPair(
            id=f"orig-{t.id}",
            question=verbalize(t.head, t.relation, templates),
            options=options,
            gold_index=gold_index,
            source_id=t.id,
            distractor_source_ids=(d1, d2),
            origin="original",
        )
    ]
    if include_abstract:
        subject = subject_of(t.head)
        for a in corpus.index.get(t.id, ()):
            a_rng = _derived_rng(seed, _RNG_KIND_ABSTRACT, a.id)
            a_options, a_gold = _shuffled_options(t.tail, distractor_tails, a_rng)
            pairs.append(
                QAPair(
                    id=f"abs-{a.id}",
                    question=verbalize(a.head_c, a.relation, templates, subject=subject),
                    options=a_options,
                    gold_index=a_gold,
                    source_id=a.id,
                    distractor_source_ids=(d1, d2),
                    origin="abstract",
                )
            )
    return pairs


def synthesize(
    corpus: AugmentedCorpus,
    index: ConstraintIndex,
    seed: int,
    templates: Optional[Templates] = None,
    include_abstract: bool = True,
    threads: int = 1,
    skip_log: Optional[list[int]] = None,
) -> Iterator[QAPair]:
    """Yield QA pairs for every original triple and its abstractions.

    A triple without two eligible distractors is skipped together with its
    abstract siblings (recorded in ``skip_log`` when given). Output order
    and content depend only on (corpus, templates, seed), never on
    ``threads``.
    """
    templates = templates or default_templates()
    by_id = corpus.original_by_id()

    def worker(t: Triple) -> list[QAPair]:
        try:
            return _pairs_for_original(t, corpus, index, seed, templates, by_id, include_abstract)
        except SkippedTriple:
            log.debug("skipping triple %d: fewer than 2 eligible distractors", t.id)
            if skip_log is not None:
                skip_log.append(t.id)
            return []

    if threads <= 1:
        for t in corpus.originals:
            yield from worker(t)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for pairs in pool.map(worker, corpus.originals, chunksize=64):
                yield from pairs


def verify_fairness(
    pairs: Iterable[QAPair],
    corpus: AugmentedCorpus,
    index: ConstraintIndex,
) -> list[str]:
    """Post-hoc sweep of the sampling invariants over emitted pairs.

    Checks, for every pair, that each distractor's constraint set is
    disjoint from the question's and that relations match. Returns
    violation descriptions (empty means the output is fair).
    """
    abstract_by_id = {a.id: a for a in corpus.abstractions}
    original_by_id = corpus.original_by_id()
    violations: list[str] = []
    for pair in pairs:
        if pair.origin == "abstract":
            q: Union[Triple, AbstractTriple] = abstract_by_id[pair.source_id]
        else:
            q = original_by_id[pair.source_id]
        q_union = query_constraint(q, index).union()
        for did in pair.distractor_source_ids:
            d = original_by_id[did]
            if d.relation != q.relation:
                violations.append(f"{pair.id}: distractor {did} has relation {d.relation.value}")
            overlap = index.union_for(did) & q_union
            if overlap:
                violations.append(f"{pair.id}: distractor {did} shares {sorted(overlap)!r}")
    return violations


