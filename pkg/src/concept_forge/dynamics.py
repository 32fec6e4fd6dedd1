"""Per-question training dynamics over saved checkpoints.

For one question with m option scores S_1..S_m (gold index j) at each of n
checkpoints, the per-checkpoint certainty term is

    sigma( sum_d (S_d - S_j) / (m - 1) )

where sigma is the logistic sigmoid and the d = j term contributes zero.
Confidence is the mean of these terms over checkpoints; variability is
their population standard deviation (denominator n).

Scores are negative log-likelihoods, so a positive gap (S_d - S_j) means
the gold option scored *lower* (better under the argmin prediction rule);
higher confidence therefore means a stronger preference for gold.

Questions are mapped onto the data-map categories: high variability is
ambiguous; otherwise high confidence is easy-to-learn and low confidence
hard-to-learn.
"""
from __future__ import annotations

import csv
import json
import math
import statistics
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

Category = Literal["easy", "ambiguous", "hard"]


@dataclass(frozen=True)
class CheckpointScores:
    """Option scores for one question at one checkpoint."""

    checkpoint: int
    qa_id: str
    option_scores: tuple[float, ...]
    gold_index: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "option_scores", tuple(float(s) for s in self.option_scores))
        if len(self.option_scores) < 2:
            raise ValueError(f"{self.qa_id}: need at least 2 option scores")
        if not 0 <= self.gold_index < len(self.option_scores):
            raise ValueError(f"{self.qa_id}: gold index {self.gold_index} outside option range")


@dataclass(frozen=True)
class DynamicsRecord:
    qa_id: str
    confidence: float
    variability: float
    category: Category

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if not 0.0 <= self.variability <= 0.5:
            raise ValueError(f"variability {self.variability} outside [0, 0.5]")


@dataclass(frozen=True)
class CategoryThresholds:
    """Cutoffs for the easy/ambiguous/hard map; the paper adopts the
    categories without numeric values, so these are configurable."""

    conf_hi: float = 0.7
    conf_lo: float = 0.3
    var_hi: float = 0.25


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _checkpoint_terms(records: Sequence[CheckpointScores]) -> list[float]:
    if not records:
        raise ValueError("need scores from at least one checkpoint")
    m = len(records[0].option_scores)
    gold = records[0].gold_index
    terms = []
    for rec in records:
        if len(rec.option_scores) != m or rec.gold_index != gold:
            raise ValueError(
                f"{rec.qa_id}: inconsistent option count or gold index across checkpoints"
            )
        s_gold = rec.option_scores[rec.gold_index]
        # The d = gold term is included as printed; it is identically zero.
        gap_sum = sum(s - s_gold for s in rec.option_scores)
        terms.append(_sigmoid(gap_sum / (m - 1)))
    return terms


def confidence(records: Sequence[CheckpointScores]) -> float:
    """Mean per-checkpoint certainty term."""
    terms = _checkpoint_terms(records)
    return sum(terms) / len(terms)


def variability(records: Sequence[CheckpointScores]) -> float:
    """Population standard deviation (denominator n) of the certainty terms."""
    terms = _checkpoint_terms(records)
    mean = sum(terms) / len(terms)
    return math.sqrt(sum((t - mean) ** 2 for t in terms) / len(terms))


def categorize(
    conf: float,
    var: float,
    thresholds: CategoryThresholds = CategoryThresholds(),
) -> Category:
    """Map one (confidence, variability) point onto the data-map categories.

    Ambiguous wins when variability is at or above the cutoff; otherwise
    high confidence is easy and low confidence hard. The middle band
    (conf_lo < confidence < conf_hi) defaults to easy.
    """
    if var >= thresholds.var_hi:
        return "ambiguous"
    if conf >= thresholds.conf_hi:
        return "easy"
    if conf <= thresholds.conf_lo:
        return "hard"
    return "easy"


def compute_dynamics(
    by_qa: dict[str, list[CheckpointScores]],
    thresholds: CategoryThresholds = CategoryThresholds(),
) -> list[DynamicsRecord]:
    """One DynamicsRecord per question, in sorted qa id order."""
    out = []
    for qa_id in sorted(by_qa):
        records = sorted(by_qa[qa_id], key=lambda r: r.checkpoint)
        terms = _checkpoint_terms(records)
        conf = sum(terms) / len(terms)
        var = math.sqrt(sum((t - conf) ** 2 for t in terms) / len(terms))
        out.append(DynamicsRecord(qa_id=qa_id, confidence=conf, variability=var, category=categorize(conf, var, thresholds)))
    return out


def load_checkpoint_scores(paths: Iterable[str]) -> dict[str, list[CheckpointScores]]:
    """Read checkpoint-tagged score records from JSONL files.

    Each record needs qa_id, option_scores, gold, and a checkpoint index
    (an untagged file counts as checkpoint 0).
    """
    by_qa: dict[str, list[CheckpointScores]] = {}
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                row = json.loads(line)
                try:
                    rec = CheckpointScores(
                        checkpoint=int(row.get("checkpoint", 0)),
                        qa_id=str(row["qa_id"]),
                        option_scores=tuple(float(s) for s in row["option_scores"]),
                        gold_index=int(row["gold"]),
                    )
                except (KeyError, ValueError, TypeError) as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from None
                by_qa.setdefault(rec.qa_id, []).append(rec)
    return by_qa


def write_dynamics_csv(records: Iterable[DynamicsRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["qa_id", "confidence", "variability", "category"])
        for rec in records:
            writer.writerow([rec.qa_id, f"{rec.confidence:.10g}", f"{rec.variability:.10g}", rec.category])


def read_dynamics_csv(path: str) -> list[DynamicsRecord]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(
                DynamicsRecord(
                    qa_id=row["qa_id"],
                    confidence=float(row["confidence"]),
                    variability=float(row["variability"]),
                    category=row["category"],  # type: ignore[arg-type]
                )
            )
    return out


@dataclass(frozen=True)
class DynamicsDelta:
    qa_id: str
    confidence_a: float
    confidence_b: float
    confidence_delta: float
    variability_a: float
    variability_b: float
    variability_delta: float


@dataclass(frozen=True)
class DynamicsSummary:
    deltas: tuple[DynamicsDelta, ...]
    median_confidence_a: float
    median_confidence_b: float
    median_confidence_delta: float
    median_variability_a: float
    median_variability_b: float
    median_variability_delta: float


def dynamics_summary(
    run_a: Sequence[DynamicsRecord],
    run_b: Sequence[DynamicsRecord],
) -> DynamicsSummary:
    """Pair two runs question-by-question: deltas (b - a) plus medians.

    Both runs must cover exactly the same question ids.
    """
    a_by_id = {r.qa_id: r for r in run_a}
    b_by_id = {r.qa_id: r for r in run_b}
    if set(a_by_id) != set(b_by_id):
        only_a = sorted(set(a_by_id) - set(b_by_id))[:5]
        only_b = sorted(set(b_by_id) - set(a_by_id))[:5]
        raise ValueError(f"runs cover different questions (only in a: {only_a}, only in b: {only_b})")
    deltas = []
    for qa_id in sorted(a_by_id):
        a, b = a_by_id[qa_id], b_by_id[qa_id]
        deltas.append(
            DynamicsDelta(
                qa_id=qa_id,
                confidence_a=a.confidence,
                confidence_b=b.confidence,
                confidence_delta=b.confidence - a.confidence,
                variability_a=a.variability,
                variability_b=b.variability,
                variability_delta=b.variability - a.variability,
            )
        )
    return DynamicsSummary(
        deltas=tuple(deltas),
        median_confidence_a=statistics.median(d.confidence_a for d in deltas),
        median_confidence_b=statistics.median(d.confidence_b for d in deltas),
        median_confidence_delta=statistics.median(d.confidence_delta for d in deltas),
        median_variability_a=statistics.median(d.variability_a for d in deltas),
        median_variability_b=statistics.median(d.variability_b for d in deltas),
        median_variability_delta=statistics.median(d.variability_delta for d in deltas),
    )


def write_summary_csv(summary: DynamicsSummary, path: str) -> None:
    """Per-question delta rows plus one __median__ footer row."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "qa_id",
                "confidence_a",
                "confidence_b",
                "confidence_delta",
                "variability_a",
                "variability_b",
                "variability_delta",
            ]
        )
        for d in summary.deltas:
            writer.writerow(
                [
                    d.qa_id,
                    f"{d.confidence_a:.10g}",
                    f"{d.confidence_b:.10g}",
                    f"{d.confidence_delta:.10g}",
                    f"{d.variability_a:.10g}",
                    f"{d.variability_b:.10g}",
                    f"{d.variability_delta:.10g}",
                ]
            )
        writer.writerow(
            [
                "__median__",
                f"{summary.median_confidence_a:.10g}",
                f"{summary.median_confidence_b:.10g}",
                f"{summary.median_confidence_delta:.10g}",
                f"{summary.median_variability_a:.10g}",
                f"{summary.median_variability_b:.10g}",
                f"{summary.median_variability_delta:.10g}",
            ]
        )
