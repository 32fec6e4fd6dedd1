"""Scikit-learn style wrappers around the pipeline stages.

These follow the estimator contract (``get_params``/``set_params``, fitted
attributes with trailing underscores) so the stages compose with sklearn
pipelines and model-selection tooling:

* ``QASynthesizer``   fit on a knowledge base (builds the constraint index),
  transform it into QA pairs.
* ``DynamicsMapper``  transform checkpoint score logs into per-question
  confidence/variability/category records.
* ``ZeroShotEvaluator`` predict answer indices for benchmark items through
  a scorer transport; ``score`` returns accuracy against gold labels.
"""
from __future__ import annotations

from typing import Optional, Sequence, Union

from sklearn.base import BaseEstimator, TransformerMixin

from .augment import AugmentedCorpus, augment
from .dynamics import CategoryThresholds, CheckpointScores, DynamicsRecord, compute_dynamics
from .evaluation import EvalItem, EvalResult, evaluate
from .ingest import KnowledgeBase
from .scorer_bridge import Transport, make_transport
from .synth import ConstraintIndex, QAPair, Templates, build_index, synthesize


def check_knowledge_base(X) -> KnowledgeBase:
    if isinstance(X, KnowledgeBase):
        return X
    raise TypeError(f"expected a KnowledgeBase, got {type(X).__name__}")


def check_checkpoint_scores(X) -> dict[str, list[CheckpointScores]]:
    if isinstance(X, dict):
        return X
    if isinstance(X, (list, tuple)):
        by_qa: dict[str, list[CheckpointScores]] = {}
        for rec in X:
            if not isinstance(rec, CheckpointScores):
                raise TypeError(f"expected CheckpointScores, got {type(rec).__name__}")
            by_qa.setdefault(rec.qa_id, []).append(rec)
        return by_qa
    raise TypeError(f"expected checkpoint scores, got {type(X).__name__}")


class QASynthesizer(BaseEstimator, TransformerMixin):
    """Knowledge base in, multiple-choice QA pairs out.

    ``fit`` augments the corpus with its abstract triples and builds the
    inverted constraint index over the originals; ``transform`` samples
    distractors and emits QA pairs. Output is a pure function of the corpus
    bytes, the templates, and ``seed``.
    """

    def __init__(
        self,
        seed: int = 0,
        keyword_only: bool = False,
        include_abstract: bool = True,
        templates_path: Optional[str] = None,
        threads: int = 1,
    ):
        self.seed = seed
        self.keyword_only = keyword_only
        self.include_abstract = include_abstract
        self.templates_path = templates_path
        self.threads = threads

    def fit(self, X: KnowledgeBase, y=None) -> "QASynthesizer":
        kb = check_knowledge_base(X)
        self.corpus_: AugmentedCorpus = augment(kb)
        self.index_: ConstraintIndex = build_index(
            self.corpus_, kb.concepts, keyword_only=self.keyword_only
        )
        self.templates_ = Templates.load(self.templates_path)
        return self

    def transform(self, X: KnowledgeBase) -> list[QAPair]:
        """Synthesize QA pairs for ``X``, drawing distractors from the
        fitted corpus's constraint index."""
        if not hasattr(self, "index_"):
            raise ValueError("QASynthesizer is not fitted; call fit first")
        kb = check_knowledge_base(X)
        corpus = augment(kb)
        self.skipped_ = []
        return list(
            synthesize(
                corpus,
                self.index_,
                seed=self.seed,
                templates=self.templates_,
                include_abstract=self.include_abstract,
                threads=self.threads,
                skip_log=self.skipped_,
            )
        )


class DynamicsMapper(BaseEstimator, TransformerMixin):
    """Checkpoint score logs in, per-question dynamics records out."""

    def __init__(self, conf_hi: float = 0.7, conf_lo: float = 0.3, var_hi: float = 0.25):
        self.conf_hi = conf_hi
        self.conf_lo = conf_lo
        self.var_hi = var_hi

    def fit(self, X=None, y=None) -> "DynamicsMapper":
        return self

    def transform(
        self, X: Union[dict[str, list[CheckpointScores]], Sequence[CheckpointScores]]
    ) -> list[DynamicsRecord]:
        by_qa = check_checkpoint_scores(X)
        thresholds = CategoryThresholds(conf_hi=self.conf_hi, conf_lo=self.conf_lo, var_hi=self.var_hi)
        return compute_dynamics(by_qa, thresholds)


class ZeroShotEvaluator(BaseEstimator):
    """Answer benchmark items by scoring each choice and taking the argmin."""

    def __init__(
        self,
        scorer: str = "mock",
        prompt_template: str = "{context} {question} {choice}",
        max_workers: int = 4,
    ):
        self.scorer = scorer
        self.prompt_template = prompt_template
        self.max_workers = max_workers

    def fit(self, X=None, y=None) -> "ZeroShotEvaluator":
        self.transport_: Transport = make_transport(self.scorer)
        return self

    def _evaluate(self, items: Sequence[EvalItem]) -> EvalResult:
        if not hasattr(self, "transport_"):
            self.fit()
        return evaluate(
            items,
            self.transport_,
            prompt_template=self.prompt_template,
            max_workers=self.max_workers,
        )

    def predict(self, X: Sequence[EvalItem]) -> list[int]:
        return [r.pred for r in self._evaluate(X).results]

    def score(self, X: Sequence[EvalItem], y: Optional[Sequence[int]] = None) -> float:
        """Accuracy against ``y`` or, when ``y`` is None, the items' gold labels."""
        result = self._evaluate(X)
        if y is None:
            return result.accuracy
        preds = [r.pred for r in result.results]
        if len(y) != len(preds):
            raise ValueError(f"{len(y)} labels for {len(preds)} items")
        return sum(1 for p, g in zip(preds, y) if p == g) / len(preds) if preds else 0.0
