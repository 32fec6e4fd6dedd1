from __future__ import annotations

import json

import numpy as np
import pytest

from concept_forge.evaluation import (
    BENCHMARKS,
    EvalItem,
    attach_similarity,
    evaluate,
    load_benchmark,
    render_prompt,
    split_accuracy,
    split_by_similarity,
    write_results,
)
from concept_forge.scorer_bridge import MockTransport, TransportError
from concept_forge.scoring import TokenLogProbs


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return str(path)


def anli_rows(n):
    return [
        {
            "story_id": f"s{i}",
            "obs1": f"Obs one {i}.",
            "obs2": f"Obs two {i}.",
            "hyp1": f"first hypothesis {i}",
            "hyp2": f"second hypothesis {i}",
            "label": (i % 2) + 1,
        }
        for i in range(n)
    ]


class RiggedTransport(MockTransport):
    """Scores texts containing any favored marker near zero, others high."""

    def __init__(self, favored: set[str], invert: bool = False):
        def scorer(text: str) -> TokenLogProbs:
            hit = any(marker in text for marker in favored)
            if invert:
                hit = not hit
            lp = -0.01 if hit else -5.0
            tokens = tuple(text.split())
            return TokenLogProbs(tokens=tokens, logprobs=tuple(lp for _ in tokens))

        super().__init__(scorer)


class TestAdapters:
    def test_anli(self, tmp_path):
        path = write_jsonl(tmp_path / "anli.jsonl", anli_rows(4))
        with pytest.warns(UserWarning, match="expected 1532"):
            items = load_benchmark(BENCHMARKS["anli"], path)
        assert len(items) == 4
        assert items[0].context == "Obs one 0."
        assert items[0].choices == ["first hypothesis 0", "second hypothesis 0"]
        assert items[0].gold == 0

    def test_anli_labels_file(self, tmp_path):
        rows = anli_rows(2)
        for row in rows:
            del row["label"]
        path = write_jsonl(tmp_path / "anli.jsonl", rows)
        labels = tmp_path / "labels.lst"
        labels.write_text("2\n1\n", encoding="utf-8")
        with pytest.warns(UserWarning):
            items = load_benchmark(BENCHMARKS["anli"], path, str(labels))
        assert [i.gold for i in items] == [1, 0]

    def test_csqa(self, tmp_path):
        rows = [
            {
                "id": "q1",
                "answerKey": "C",
                "question": {
                    "stem": "Where do drinks go?",
                    "choices": [
                        {"label": label, "text": f"choice {label}"}
                        for label in ["A", "B", "C", "D", "E"]
                    ],
                },
            }
        ]
        path = write_jsonl(tmp_path / "csqa.jsonl", rows)
        with pytest.warns(UserWarning):
            items = load_benchmark(BENCHMARKS["csqa"], path)
        assert items[0].gold == 2
        assert len(items[0].choices) == 5

    def test_piqa(self, tmp_path):
        rows = [{"goal": "Open a jar", "sol1": "twist the lid", "sol2": "smash it", "label": 0}]
        path = write_jsonl(tmp_path / "piqa.jsonl", rows)
        with pytest.warns(UserWarning):
            items = load_benchmark(BENCHMARKS["piqa"], path)
        assert items[0].context == "Open a jar"
        assert items[0].gold == 0

    def test_siqa(self, tmp_path):
        rows = [
            {
                "context": "Robin voted.",
                "question": "What does Robin want?",
                "answerA": "go home",
                "answerB": "attend a rally",
                "answerC": "sleep",
                "label": "2",
            }
        ]
        path = write_jsonl(tmp_path / "siqa.jsonl", rows)
        with pytest.warns(UserWarning):
            items = load_benchmark(BENCHMARKS["siqa"], path)
        assert items[0].gold == 1

    def test_wg(self, tmp_path):
        rows = [
            {
                "qID": "w1",
                "sentence": "The trophy did not fit because _ was too large.",
                "option1": "the trophy",
                "option2": "the suitcase",
                "answer": "1",
            }
        ]
        path = write_jsonl(tmp_path / "wg.jsonl", rows)
        with pytest.warns(UserWarning):
            items = load_benchmark(BENCHMARKS["wg"], path)
        assert items[0].gold == 0
        text = render_prompt(items[0], items[0].choices[0], BENCHMARKS["wg"].prompt_template)
        assert text == "The trophy did not fit because the trophy was too large."

    def test_truncation_warning_names_counts(self, tmp_path):
        path = write_jsonl(tmp_path / "anli.jsonl", anli_rows(3))
        with pytest.warns(UserWarning, match="expected 1532 items, found 3"):
            load_benchmark(BENCHMARKS["anli"], path)

    def test_benchmark_shapes_registry(self):
        shapes = {
            (spec.expected_items, spec.choices_per_item) for spec in BENCHMARKS.values()
        }
        assert shapes == {(1532, 2), (1221, 5), (1838, 2), (1954, 3), (1267, 2)}


def items_with_marker(n, choices=2):
    items = []
    for i in range(n):
        gold = i % choices
        opts = [f"plain answer {i} {j}" for j in range(choices)]
        opts[gold] = f"goldmark answer {i}"
        items.append(EvalItem(id=f"i{i}", question=f"Question {i}?", choices=opts, gold=gold))
    return items


class TestEvaluate:
    def test_rigged_scorer_gives_perfect_accuracy(self):
        items = items_with_marker(50)
        result = evaluate(items, RiggedTransport({"goldmark"}), "{question} {choice}")
        assert result.accuracy == 1.0

    def test_anti_rigged_scorer_gives_zero(self):
        items = items_with_marker(50)
        result = evaluate(items, RiggedTransport({"goldmark"}, invert=True), "{question} {choice}")
        assert result.accuracy == 0.0

    def test_uniform_mock_near_half_on_two_choice(self):
        rng = np.random.default_rng(2024)
        items = []
        for i in range(1000):
            gold = int(rng.integers(0, 2))
            opts = [f"opt {rng.integers(0, 10**9):09d}" for _ in range(2)]
            items.append(EvalItem(id=f"i{i}", question=f"q {i}", choices=opts, gold=gold))
        result = evaluate(items, MockTransport(), "{question} {choice}")
        assert 0.45 <= result.accuracy <= 0.55

    def test_parallel_matches_serial(self):
        items = items_with_marker(40, choices=3)
        serial = evaluate(items, MockTransport(), "{question} {choice}", max_workers=1)
        parallel = evaluate(items, MockTransport(), "{question} {choice}", max_workers=8)
        assert serial.results == parallel.results

    def test_scorer_failure_aborts_with_partial_log(self):
        items = items_with_marker(10)

        class DoomedTransport(MockTransport):
            def __init__(self):
                super().__init__()
                self.count = 0

            def request(self, req):
                self.count += 1
                if self.count > 6:
                    raise TransportError("gone")
                return super().request(req)

        flushed = []
        with pytest.raises(TransportError):
            evaluate(
                items,
                DoomedTransport(),
                "{question} {choice}",
                max_workers=1,
                on_result=flushed.append,
            )
        assert 0 < len(flushed) < 10

    def test_items_without_gold_are_scored_but_unjudged(self):
        items = items_with_marker(4)
        items[0].gold = None
        result = evaluate(items, RiggedTransport({"goldmark"}), "{question} {choice}")
        assert result.with_gold == 3
        assert len(result.results) == 4

    def test_write_results_schema(self, tmp_path):
        items = items_with_marker(3)
        result = evaluate(items, RiggedTransport({"goldmark"}), "{question} {choice}")
        out = tmp_path / "results.jsonl"
        write_results(result.results, str(out))
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert set(rows[0]) == {"id", "scores", "pred", "gold"}
        assert rows[0]["pred"] == rows[0]["gold"]


class TestSimilaritySplit:
    def mk(self, sims):
        return [
            EvalItem(id=f"i{k}", question="q", choices=["a", "b"], gold=0, similarity=s)
            for k, s in enumerate(sims)
        ]

    def test_median_split(self):
        easy, difficult = split_by_similarity(self.mk([0.1, 0.2, 0.8, 0.9]))
        assert sorted(i.similarity for i in difficult) == [0.1, 0.2]
        assert sorted(i.similarity for i in easy) == [0.8, 0.9]

    def test_all_equal_goes_easy(self):
        easy, difficult = split_by_similarity(self.mk([0.5, 0.5, 0.5]))
        assert len(easy) == 3
        assert difficult == []

    def test_partition_is_exact(self):
        rng = np.random.default_rng(7)
        items = self.mk(list(rng.uniform(0, 1, 101)))
        easy, difficult = split_by_similarity(items)
        assert len(easy) + len(difficult) == len(items)
        assert {i.id for i in easy}.isdisjoint({i.id for i in difficult})

    def test_other_quantile(self):
        items = self.mk([k / 10 for k in range(10)])
        easy, difficult = split_by_similarity(items, quantile=0.25)
        assert len(difficult) < len(easy)
        assert max(i.similarity for i in difficult) < min(i.similarity for i in easy)

    def test_missing_similarity_is_an_error(self):
        items = self.mk([0.5, 0.6])
        items[1].similarity = None
        with pytest.raises(ValueError, match="without similarity"):
            split_by_similarity(items)

    def test_attach_similarity(self, tmp_path):
        items = self.mk([0.0, 0.0])
        for item in items:
            item.similarity = None
        path = write_jsonl(
            tmp_path / "sim.jsonl",
            [{"id": "i0", "similarity": 0.25}, {"id": "i1", "similarity": 0.75}],
        )
        attach_similarity(items, path)
        assert [i.similarity for i in items] == [0.25, 0.75]

    def test_split_accuracy_shape(self):
        items = items_with_marker(20)
        for k, item in enumerate(items):
            item.similarity = k / 20
        result = evaluate(items, RiggedTransport({"goldmark"}), "{question} {choice}")
        easy, difficult = split_by_similarity(items)
        per_split = split_accuracy(result, easy, difficult)
        assert per_split == {"easy": 1.0, "difficult": 1.0}
