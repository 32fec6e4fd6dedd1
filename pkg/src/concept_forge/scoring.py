"""Sequence scores, marginal ranking loss, and the argmin prediction rule.

A sentence with per-token masked log-probabilities logP(t_1)..logP(t_n)
gets the score

    S = -(1/n) * sum_i logP(t_i)

so lower means more plausible. Prediction over a list of option scores takes
the argmin. The ranking loss over option scores S_1..S_m with gold index y
and margin eta comes in two sign variants:

* ``as_printed``:             mean over i != y of max(0, eta - S_y + S_i)
* ``prediction_consistent``:  mean over i != y of max(0, eta + S_y - S_i)

The first form rewards a *higher* gold score, which contradicts the argmin
prediction rule for negative-log-likelihood scores; the second substitutes
the sign so that training pushes the gold score *below* the distractors.
Both divide by m. The default is the prediction-consistent form; the printed
form stays available for fidelity checks.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional, Sequence

from .kb_core import Relation
from .synth import Templates, default_templates, subject_of

LossSign = Literal["as_printed", "prediction_consistent"]

DEFAULT_MARGIN = 1.0


@dataclass(frozen=True)
class TokenLogProbs:
    """Per-token masked log-probabilities for one sentence."""

    tokens: tuple[str, ...]
    logprobs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "logprobs", tuple(float(lp) for lp in self.logprobs))
        if len(self.tokens) != len(self.logprobs):
            raise ValueError(
                f"{len(self.tokens)} tokens but {len(self.logprobs)} logprobs"
            )
        for lp in self.logprobs:
            if lp > 0:
                raise ValueError(f"logprob {lp} > 0 is not a log-probability")


@dataclass(frozen=True)
class SequenceScore:
    """Negative mean token log-probability; non-negative, lower is better."""

    value: float

    def __post_init__(self) -> None:
        if self.value < 0:
            raise ValueError(f"sequence score {self.value} < 0")


@dataclass(frozen=True)
class RankingLossParams:
    margin: float = DEFAULT_MARGIN
    gold_index: int = 0
    loss_sign: LossSign = "prediction_consistent"

    def __post_init__(self) -> None:
        if self.margin <= 0:
            raise ValueError(f"margin {self.margin} must be > 0")


def mlm_score(tlp: TokenLogProbs) -> SequenceScore:
    """Score a sentence: negative mean of its token log-probabilities."""
    n = len(tlp.logprobs)
    if n == 0:
        raise ValueError("cannot score an empty token list")
    return SequenceScore(-sum(tlp.logprobs) / n)


def _values(scores: Sequence[SequenceScore | float]) -> list[float]:
    return [s.value if isinstance(s, SequenceScore) else float(s) for s in scores]


def ranking_loss(scores: Sequence[SequenceScore | float], params: RankingLossParams) -> float:
    """Hinge loss over gold/distractor score gaps, averaged over all m options.

    With S_y the gold score, each non-gold option i contributes
    max(0, margin - S_y + S_i) under ``as_printed`` and
    max(0, margin + S_y - S_i) under ``prediction_consistent``.
    """
    values = _values(scores)
    m = len(values)
    if m < 2:
        raise ValueError(f"ranking loss needs at least 2 options, got {m}")
    if not 0 <= params.gold_index < m:
        raise ValueError(f"gold index {params.gold_index} outside option range")
    s_y = values[params.gold_index]
    total = 0.0
    for i, s_i in enumerate(values):
        if i == params.gold_index:
            continue
        if params.loss_sign == "as_printed":
            total += max(0.0, params.margin - s_y + s_i)
        else:
            total += max(0.0, params.margin + s_y - s_i)
    return total / m


def predict(scores: Sequence[SequenceScore | float]) -> int:
    """Index of the lowest score; ties break to the lowest index."""
    values = _values(scores)
    if not values:
        raise ValueError("cannot predict over an empty score list")
    best = 0
    for i in range(1, len(values)):
        if values[i] < values[best]:
            best = i
    return best


def concat_for_scoring(
    context: Optional[str],
    head: str,
    relation: Relation,
    option: str,
    templates: Optional[Templates] = None,
    subject: Optional[str] = None,
) -> str:
    """Render head, relation connective, and option as one statement.

    The optional context is prepended with a space. Identical inputs always
    produce identical text.
    """
    templates = templates or default_templates()
    statement = templates.statement_for(relation).format(
        head=head, subject=subject or subject_of(head), tail=option
    )
    if context and context.strip():
        return f"{context.strip()} {statement}"
    return statement
