"""Zero-shot evaluation over the five multiple-choice benchmarks.

Adapters parse each benchmark's public validation-split layout into a common
item shape; every choice is rendered to one statement, scored through the
scorer bridge, and the lowest-scoring choice is the prediction.

Field mappings (native validation files, one JSON object per line):

* anli:  obs1 (context), obs2 (ending), hyp1/hyp2 (choices); gold from a
  "label" field or a labels file of 1/2 lines.
* csqa:  question.stem, question.choices[].label/text (A..E); gold from
  "answerKey".
* piqa:  goal (context), sol1/sol2 (choices); gold from a "label" field or
  a labels file of 0/1 lines.
* siqa:  context, question, answerA/answerB/answerC; gold from a "label"
  field or a labels file of 1/2/3 lines.
* wg:    sentence with a "_" blank (the choice fills it), option1/option2;
  gold from "answer" (1/2).
"""
from __future__ import annotations

import json
import statistics
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .scorer_bridge import Transport, score_text
from .scoring import mlm_score, predict

DEFAULT_MAX_WORKERS = 4


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    expected_items: int
    choices_per_item: int
    adapter: str
    prompt_template: str


# Validation-split shapes: (items, choices per item).
BENCHMARKS: dict[str, BenchmarkSpec] = {
    "anli": BenchmarkSpec("anli", 1532, 2, adapter="anli", prompt_template="{context} {choice} {question}"),
    "csqa": BenchmarkSpec("csqa", 1221, 5, adapter="csqa", prompt_template="{question} {choice}"),
    "piqa": BenchmarkSpec("piqa", 1838, 2, adapter="piqa", prompt_template="{context} {choice}"),
    "siqa": BenchmarkSpec("siqa", 1954, 3, adapter="siqa", prompt_template="{context} {question} {choice}"),
    "wg": BenchmarkSpec("wg", 1267, 2, adapter="wg", prompt_template="{question_filled}"),
}


@dataclass
class EvalItem:
    id: str
    question: str
    choices: list[str]
    context: Optional[str] = None
    gold: Optional[int] = None
    similarity: Optional[float] = None


def render_prompt(item: EvalItem, choice: str, template: str) -> str:
    """Fill a prompt template; {question_filled} replaces the "_" blank."""
    text = template.format(
        context=item.context or "",
        question=item.question,
        choice=choice,
        question_filled=item.question.replace("_", choice),
    )
    return " ".join(text.split())


def _read_jsonl(path: str) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows


def _read_labels(path: Optional[str]) -> Optional[list[str]]:
    if path is None:
        return None
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def _adapt_anli(rows: list[dict], labels: Optional[list[str]]) -> list[EvalItem]:
    items = []
    for i, row in enumerate(rows):
        label = row.get("label") if labels is None else labels[i]
        items.append(
            EvalItem(
                id=str(row.get("story_id", i)),
                context=row["obs1"],
                question=row["obs2"],
                choices=[row["hyp1"], row["hyp2"]],
                gold=int(label) - 1 if label is not None else None,
            )
        )
    return items


def _adapt_csqa(rows: list[dict], labels: Optional[list[str]]) -> list[EvalItem]:
    items = []
    for i, row in enumerate(rows):
        q = row["question"]
        choices = sorted(q["choices"], key=lambda c: c["label"])
        key = row.get("answerKey") if labels is None else labels[i]
        gold = None
        if key:
            gold = next(idx for idx, c in enumerate(choices) if c["label"] == key)
        items.append(
            EvalItem(
                id=str(row.get("id", i)),
                question=q["stem"],
                choices=[c["text"] for c in choices],
                gold=gold,
            )
        )
    return items


def _adapt_piqa(rows: list[dict], labels: Optional[list[str]]) -> list[EvalItem]:
    items = []
    for i, row in enumerate(rows):
        label = row.get("label") if labels is None else labels[i]
        items.append(
            EvalItem(
                id=str(row.get("id", i)),
                context=row["goal"],
                question="",
                choices=[row["sol1"], row["sol2"]],
                gold=int(label) if label is not None else None,
            )
        )
    return items


def _adapt_siqa(rows: list[dict], labels: Optional[list[str]]) -> list[EvalItem]:
    items = []
    for i, row in enumerate(rows):
        label = row.get("label") if labels is None else labels[i]
        items.append(
            EvalItem(
                id=str(row.get("id", i)),
                context=row["context"],
                question=row["question"],
                choices=[row["answerA"], row["answerB"], row["answerC"]],
                gold=int(label) - 1 if label is not None else None,
            )
        )
    return items


def _adapt_wg(rows: list[dict], labels: Optional[list[str]]) -> list[EvalItem]:
    items = []
    for i, row in enumerate(rows):
        answer = row.get("answer") if labels is None else labels[i]
        items.append(
            EvalItem(
                id=str(row.get("qID", i)),
                question=row["sentence"],
                choices=[row["option1"], row["option2"]],
                gold=int(answer) - 1 if answer not in (None, "") else None,
            )
        )
    return items


_ADAPTERS: dict[str, Callable[[list[dict], Optional[list[str]]], list[EvalItem]]] = {
    "anli": _adapt_anli,
    "csqa": _adapt_csqa,
    "piqa": _adapt_piqa,
    "siqa": _adapt_siqa,
    "wg": _adapt_wg,
}


def load_benchmark(spec: BenchmarkSpec, path: str, labels_path: Optional[str] = None) -> list[EvalItem]:
    """Parse a benchmark file; warn (not fail) when counts don't match the spec."""
    rows = _read_jsonl(path)
    labels = _read_labels(labels_path)
    if labels is not None and len(labels) != len(rows):
        raise ValueError(f"{labels_path}: {len(labels)} labels for {len(rows)} rows")
    items = _ADAPTERS[spec.adapter](rows, labels)
    if len(items) != spec.expected_items:
        warnings.warn(
            f"{spec.name}: expected {spec.expected_items} items, found {len(items)}",
            stacklevel=2,
        )
    for item in items:
        if len(item.choices) != spec.choices_per_item:
            warnings.warn(
                f"{spec.name}: item {item.id} has {len(item.choices)} choices, "
                f"expected {spec.choices_per_item}",
                stacklevel=2,
            )
    return items


def attach_similarity(items: Sequence[EvalItem], path: str) -> None:
    """Attach precomputed per-item similarity scores from a sidecar JSONL."""
    scores = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                row = json.loads(line)
                scores[str(row["id"])] = float(row["similarity"])
    for item in items:
        if item.id in scores:
            item.similarity = scores[item.id]


@dataclass(frozen=True)
class ItemResult:
    id: str
    scores: tuple[float, ...]
    pred: int
    gold: Optional[int]


@dataclass
class EvalResult:
    results: list[ItemResult] = field(default_factory=list)
    correct: int = 0
    with_gold: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.with_gold if self.with_gold else 0.0


def evaluate(
    items: Sequence[EvalItem],
    transport: Transport,
    prompt_template: str,
    max_workers: int = DEFAULT_MAX_WORKERS,
    on_result: Optional[Callable[[ItemResult], None]] = None,
) -> EvalResult:
    """Score every choice of every item and take the argmin as prediction.

    Items are scored with bounded parallelism; results are assembled in item
    order regardless of completion order. A scorer failure (after the
    bridge's retries) aborts, after flushing results computed so far through
    ``on_result``.
    """

    def score_item(item: EvalItem) -> ItemResult:
        scores = tuple(
            mlm_score(score_text(render_prompt(item, choice, prompt_template), transport)).value
            for choice in item.choices
        )
        return ItemResult(id=item.id, scores=scores, pred=predict(scores), gold=item.gold)

    out = EvalResult()
    if max_workers <= 1:
        pending = map(score_item, items)
    else:
        pool = ThreadPoolExecutor(max_workers=max_workers)
        pending = pool.map(score_item, items)
    try:
        for result in pending:
            out.results.append(result)
            if result.gold is not None:
                out.with_gold += 1
                if result.pred == result.gold:
                    out.correct += 1
            if on_result is not None:
                on_result(result)
    finally:
        if max_workers > 1:
            pool.shutdown(wait=False, cancel_futures=True)
    return out


def split_by_similarity(
    items: Sequence[EvalItem], quantile: float = 0.5
) -> tuple[list[EvalItem], list[EvalItem]]:
    """Split on precomputed similarity at a quantile cutoff (default median):
    below the cutoff is the difficult half, at-or-above the easy half."""
    missing = [item.id for item in items if item.similarity is None]
    if missing:
        raise ValueError(f"items without similarity scores: {missing[:5]}")
    if not 0.0 < quantile < 1.0:
        raise ValueError(f"quantile {quantile} outside (0, 1)")
    values = sorted(item.similarity for item in items)
    if quantile == 0.5:
        cutoff = statistics.median(values)
    else:
        cutoff = statistics.quantiles(values, n=100, method="inclusive")[
            max(0, min(98, round(quantile * 100) - 1))
        ]
    easy = [item for item in items if item.similarity >= cutoff]
    difficult = [item for item in items if item.similarity < cutoff]
    return easy, difficult


def split_accuracy(result: EvalResult, easy: Sequence[EvalItem], difficult: Sequence[EvalItem]) -> dict[str, float]:
    """Per-split accuracy of an evaluation run."""
    by_id = {r.id: r for r in result.results}

    def acc(subset: Sequence[EvalItem]) -> float:
        scored = [by_id[i.id] for i in subset if i.id in by_id and by_id[i.id].gold is not None]
        if not scored:
            return 0.0
        return sum(1 for r in scored if r.pred == r.gold) / len(scored)

    return {"easy": acc(easy), "difficult": acc(difficult)}


def write_results(results: Iterable[ItemResult], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(
                json.dumps(
                    {"id": r.id, "scores": list(r.scores), "pred": r.pred, "gold": r.gold}
                )
                + "\n"
            )
