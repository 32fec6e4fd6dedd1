"""Command-line pipeline: ingest, stats, augment, synth, score, eval, dynamics.

Every run that writes an artifact also writes ``<artifact>.manifest.json``
recording the subcommand, tool version, seed, a hash of all flag values, and
digests of input and output files, so any output can be reproduced from the
manifest alone. Seeded subcommands are bit-reproducible for any thread
count. Exit codes: 0 success, 1 validation warnings under ``--strict``,
2 errors.
"""
from __future__ import annotations

import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from dataclasses import asdict, dataclass, field
from typing import Optional

import click

from . import __version__
from .augment import augment as augment_corpus
from .augment import dump_augmented, expansion_report
from .dynamics import (
    CategoryThresholds,
    compute_dynamics,
    dynamics_summary,
    load_checkpoint_scores,
    read_dynamics_csv,
    write_dynamics_csv,
    write_summary_csv,
)
from .evaluation import (
    BENCHMARKS,
    attach_similarity,
    evaluate,
    load_benchmark,
    split_accuracy,
    split_by_similarity,
)
from .ingest import IngestConfig, IngestReport, KnowledgeBase, load_kb, load_triples_tsv, stats as corpus_stats
from .scorer_bridge import BridgeError, make_transport, score_text
from .scoring import mlm_score, predict
from .synth import Templates, build_index, synthesize


@dataclass
class RunManifest:
    subcommand: str
    tool_version: str
    config_hash: str
    inputs: dict[str, str]
    outputs: dict[str, str]
    seed: Optional[int] = None
    started_at: str = ""
    finished_at: str = ""


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _config_hash(params: dict) -> str:
    return hashlib.sha256(json.dumps(params, sort_keys=True, default=str).encode("utf-8")).hexdigest()


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


def write_manifest(
    out_path: str,
    subcommand: str,
    params: dict,
    inputs: list[str],
    outputs: list[str],
    seed: Optional[int],
    started_at: str,
) -> None:
    manifest = RunManifest(
        subcommand=subcommand,
        tool_version=__version__,
        config_hash=_config_hash(params),
        inputs={p: _sha256(p) for p in inputs if p and os.path.exists(p)},
        outputs={p: _sha256(p) for p in outputs if p and os.path.exists(p)},
        seed=seed,
        started_at=started_at,
        finished_at=_utcnow(),
    )
    with open(out_path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(asdict(manifest), fh, indent=2)
        fh.write("\n")


@dataclass
class _Warnings:
    messages: list[str] = field(default_factory=list)

    def add(self, message: str) -> None:
        self.messages.append(message)
        click.echo(f"warning: {message}", err=True)

    def exit_code(self, strict: bool) -> int:
        return 1 if (strict and self.messages) else 0


def _load_corpus(
    kb_path: str,
    concepts_path: Optional[str],
    abstract_path: Optional[str],
    threshold: float,
    fmt: str,
    warnings: _Warnings,
) -> tuple[KnowledgeBase, dict[str, IngestReport]]:
    reports: dict[str, IngestReport] = {}
    if fmt == "tsv":
        report = IngestReport()
        kb = KnowledgeBase(triples=load_triples_tsv(kb_path, strict=False, report=report))
        reports["triples"] = report
        config = IngestConfig(
            concepts_path=concepts_path,
            abstract_path=abstract_path,
            plausibility_threshold=threshold,
            strict=False,
        )
        rest = load_kb(config, reports)
        kb.concepts, kb.abstracts = rest.concepts, rest.abstracts
    else:
        config = IngestConfig(
            triples_path=kb_path,
            concepts_path=concepts_path,
            abstract_path=abstract_path,
            plausibility_threshold=threshold,
            strict=False,
        )
        kb = load_kb(config, reports)
    for name, report in reports.items():
        if report.skipped:
            warnings.add(f"{name}: skipped {report.skipped} malformed record(s)")
    return kb, reports


_kb_options = [
    click.option("--kb", "kb_path", required=True, type=click.Path(exists=True), help="Triples file."),
    click.option("--concepts", "concepts_path", type=click.Path(exists=True), help="Concept entries file."),
    click.option("--abstract", "abstract_path", type=click.Path(exists=True), help="Abstract triples file."),
    click.option("--threshold", type=float, default=0.9, show_default=True, help="Plausibility cutoff (inclusive)."),
    click.option("--format", "fmt", type=click.Choice(["jsonl", "tsv"]), default="jsonl", show_default=True),
]


def _with_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn

    return wrap


@click.group()
@click.version_option(__version__)
def cli() -> None:
    """Conceptualization-augmented KB expansion and QA synthesis."""


@cli.command()
@_with_options(_kb_options)
@click.option("--strict", is_flag=True, help="Exit 1 when validation warnings occur.")
def ingest(kb_path, concepts_path, abstract_path, threshold, fmt, strict) -> int:
    """Parse and validate a corpus, reporting per-file line accounting."""
    warnings = _Warnings()
    kb, reports = _load_corpus(kb_path, concepts_path, abstract_path, threshold, fmt, warnings)
    for name, report in sorted(reports.items()):
        click.echo(
            f"{name}: {report.lines} lines, {report.parsed} parsed, "
            f"{report.skipped} skipped, {report.filtered} filtered"
        )
    click.echo(f"loaded {len(kb.triples)} triples, {len(kb.concepts)} concept entries, {len(kb.abstracts)} abstract triples")
    return warnings.exit_code(strict)


@cli.command()
@_with_options(_kb_options)
def stats(kb_path, concepts_path, abstract_path, threshold, fmt) -> int:
    """Corpus statistics table."""
    warnings = _Warnings()
    kb, _ = _load_corpus(kb_path, concepts_path, abstract_path, threshold, fmt, warnings)
    s = corpus_stats(kb)
    for relation, count in s.relation_counts.items():
        click.echo(f"{relation:<10} {count}")
    click.echo(f"{'total':<10} {s.total_triples}")
    click.echo(f"unique events       {s.unique_events}")
    click.echo(f"unique concepts     {s.unique_concepts}")
    click.echo(f"abstract annotated  {s.abstract_annotated}")
    click.echo(f"abstract pseudo     {s.abstract_pseudo}")
    click.echo(f"abstract total      {s.abstract_total}")
    click.echo(f"avg concepts/event  {s.avg_concepts_per_event:.2f}")
    return 0


@cli.command()
@_with_options(_kb_options)
@click.option("--out", "out_path", required=True, type=click.Path(), help="Augmented corpus JSONL.")
def augment(kb_path, concepts_path, abstract_path, threshold, fmt, out_path) -> int:
    """Expand the KB with its abstract triples; write both with origin tags."""
    started = _utcnow()
    warnings = _Warnings()
    kb, _ = _load_corpus(kb_path, concepts_path, abstract_path, threshold, fmt, warnings)
    corpus = augment_corpus(kb)
    dump_augmented(corpus, out_path)
    report = expansion_report(corpus)
    for relation, row in report.items():
        click.echo(f"{relation:<10} originals={row['originals']:<8.0f} abstractions={row['abstractions']:<8.0f} ratio={row['ratio']:.2f}")
    write_manifest(
        out_path,
        "augment",
        {"kb": kb_path, "concepts": concepts_path, "abstract": abstract_path, "threshold": threshold},
        [kb_path, concepts_path or "", abstract_path or ""],
        [out_path],
        None,
        started,
    )
    return 0


@cli.command()
@_with_options(_kb_options)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(), help="QA pairs JSONL.")
@click.option("--no-augment", is_flag=True, help="Synthesize only original triples (concepts still constrain sampling).")
@click.option("--keyword-only", is_flag=True, help="Drop the concept half of constraints (keyword overlap only).")
@click.option("--templates", "templates_path", type=click.Path(exists=True), help="Templates TOML override.")
@click.option("--threads", type=int, default=None, help="Worker threads (default: available cores).")
def synth(
    kb_path, concepts_path, abstract_path, threshold, fmt, seed, out_path, no_augment, keyword_only, templates_path, threads
) -> int:
    """Synthesize multiple-choice QA pairs with constrained distractors."""
    started = _utcnow()
    warnings = _Warnings()
    kb, _ = _load_corpus(kb_path, concepts_path, abstract_path, threshold, fmt, warnings)
    corpus = augment_corpus(kb)
    index = build_index(corpus, kb.concepts, keyword_only=keyword_only)
    templates = Templates.load(templates_path)
    threads = threads or os.cpu_count() or 1
    skipped: list[int] = []
    count = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for pair in synthesize(
            corpus,
            index,
            seed=seed,
            templates=templates,
            include_abstract=not no_augment,
            threads=threads,
            skip_log=skipped,
        ):
            fh.write(
                json.dumps(
                    {
                        "id": pair.id,
                        "question": pair.question,
                        "options": list(pair.options),
                        "gold": pair.gold_index,
                        "source_id": str(pair.source_id),
                        "distractor_ids": [str(d) for d in pair.distractor_source_ids],
                        "origin": pair.origin,
                    }
                )
                + "\n"
            )
            count += 1
    click.echo(f"wrote {count} QA pairs to {out_path} ({len(skipped)} triples skipped)")
    write_manifest(
        out_path,
        "synth",
        {
            "kb": kb_path,
            "concepts": concepts_path,
            "abstract": abstract_path,
            "threshold": threshold,
            "no_augment": no_augment,
            "keyword_only": keyword_only,
            "templates": templates_path,
        },
        [kb_path, concepts_path or "", abstract_path or "", templates_path or ""],
        [out_path],
        seed,
        started,
    )
    return 0


def _scorer_option(fn):
    return click.option(
        "--scorer",
        default=lambda: os.environ.get("SCORER_URL"),
        help="'mock', an http(s) URL, or a scorer command (default: $SCORER_URL).",
    )(fn)


@cli.command()
@click.option("--qa", "qa_path", required=True, type=click.Path(exists=True), help="QA pairs JSONL.")
@_scorer_option
@click.option("--out", "out_path", required=True, type=click.Path(), help="Scores JSONL.")
@click.option("--checkpoint", type=int, default=None, help="Checkpoint index to tag records with.")
@click.option("--max-len", type=int, default=128, show_default=True)
def score(qa_path, scorer, out_path, checkpoint, max_len) -> int:
    """Score every option of every QA pair (question and option joined by a space)."""
    if not scorer:
        raise click.UsageError("no scorer given: pass --scorer or set SCORER_URL")
    started = _utcnow()
    transport = make_transport(scorer)
    count = 0
    try:
        with open(qa_path, encoding="utf-8") as qa_fh, open(out_path, "w", encoding="utf-8") as out_fh:
            for line in qa_fh:
                if not line.strip():
                    continue
                row = json.loads(line)
                scores = [
                    mlm_score(score_text(f"{row['question']} {option}", transport, max_len=max_len)).value
                    for option in row["options"]
                ]
                record = {
                    "qa_id": row["id"],
                    "option_scores": scores,
                    "pred": predict(scores),
                    "gold": row["gold"],
                }
                if checkpoint is not None:
                    record["checkpoint"] = checkpoint
                out_fh.write(json.dumps(record) + "\n")
                count += 1
    finally:
        transport.close()
    click.echo(f"scored {count} QA pairs to {out_path}")
    write_manifest(
        out_path,
        "score",
        {"qa": qa_path, "scorer": scorer, "checkpoint": checkpoint, "max_len": max_len},
        [qa_path],
        [out_path],
        None,
        started,
    )
    return 0


@cli.command(name="eval")
@click.option("--bench", required=True, type=click.Choice(sorted(BENCHMARKS)), help="Benchmark name.")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True), help="Validation-split file.")
@click.option("--labels", "labels_path", type=click.Path(exists=True), help="Separate labels file.")
@_scorer_option
@click.option("--out", "out_path", required=True, type=click.Path(), help="Per-item results JSONL.")
@click.option("--similarity", "similarity_path", type=click.Path(exists=True), help="Precomputed similarity JSONL for the easy/difficult split.")
@click.option("--template", "template_override", default=None, help="Prompt template override.")
@click.option("--max-workers", type=int, default=4, show_default=True)
@click.option("--strict", is_flag=True, help="Exit 1 when validation warnings occur.")
def eval_cmd(bench, data_path, labels_path, scorer, out_path, similarity_path, template_override, max_workers, strict) -> int:
    """Evaluate a benchmark with the configured scorer; report accuracy."""
    if not scorer:
        raise click.UsageError("no scorer given: pass --scorer or set SCORER_URL")
    started = _utcnow()
    cli_warnings = _Warnings()
    spec = BENCHMARKS[bench]
    import warnings as pywarnings

    with pywarnings.catch_warnings(record=True) as caught:
        pywarnings.simplefilter("always")
        items = load_benchmark(spec, data_path, labels_path)
    for w in caught:
        cli_warnings.add(str(w.message))
    if similarity_path:
        attach_similarity(items, similarity_path)
    transport = make_transport(scorer)
    template = template_override or spec.prompt_template
    try:
        with open(out_path, "w", encoding="utf-8") as fh:
            result = evaluate(
                items,
                transport,
                prompt_template=template,
                max_workers=max_workers,
                on_result=lambda r: fh.write(
                    json.dumps({"id": r.id, "scores": list(r.scores), "pred": r.pred, "gold": r.gold}) + "\n"
                ),
            )
    except BridgeError as exc:
        click.echo(f"error: scorer failed after retries: {exc} (partial log in {out_path})", err=True)
        return 2
    finally:
        transport.close()
    click.echo(f"accuracy {result.accuracy:.4f} ({result.correct}/{result.with_gold})")
    if similarity_path:
        easy, difficult = split_by_similarity(items)
        per_split = split_accuracy(result, easy, difficult)
        click.echo(f"easy accuracy {per_split['easy']:.4f} (n={len(easy)})")
        click.echo(f"difficult accuracy {per_split['difficult']:.4f} (n={len(difficult)})")
    write_manifest(
        out_path,
        "eval",
        {
            "bench": bench,
            "data": data_path,
            "labels": labels_path,
            "scorer": scorer,
            "similarity": similarity_path,
            "template": template,
            "max_workers": max_workers,
        },
        [data_path, labels_path or "", similarity_path or ""],
        [out_path],
        None,
        started,
    )
    return cli_warnings.exit_code(strict)


@cli.command()
@click.option("--scores", "score_paths", multiple=True, type=click.Path(exists=True), help="Checkpoint-tagged score JSONL (repeatable).")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--conf-hi", type=float, default=0.7, show_default=True)
@click.option("--conf-lo", type=float, default=0.3, show_default=True)
@click.option("--var-hi", type=float, default=0.25, show_default=True)
@click.option("--compare", nargs=2, type=click.Path(exists=True), default=None, help="Two dynamics CSVs to diff instead of aggregating scores.")
def dynamics(score_paths, out_path, conf_hi, conf_lo, var_hi, compare) -> int:
    """Aggregate checkpoint scores into a dynamics map, or diff two maps."""
    started = _utcnow()
    if compare:
        run_a = read_dynamics_csv(compare[0])
        run_b = read_dynamics_csv(compare[1])
        summary = dynamics_summary(run_a, run_b)
        write_summary_csv(summary, out_path)
        click.echo(
            f"median confidence delta {summary.median_confidence_delta:+.4f}, "
            f"median variability delta {summary.median_variability_delta:+.4f}"
        )
        inputs = list(compare)
        params = {"compare": list(compare)}
    else:
        if not score_paths:
            raise click.UsageError("pass --scores at least once, or --compare")
        by_qa = load_checkpoint_scores(score_paths)
        records = compute_dynamics(by_qa, CategoryThresholds(conf_hi=conf_hi, conf_lo=conf_lo, var_hi=var_hi))
        write_dynamics_csv(records, out_path)
        counts = {"easy": 0, "ambiguous": 0, "hard": 0}
        for rec in records:
            counts[rec.category] += 1
        click.echo(f"{len(records)} questions: {counts['easy']} easy, {counts['ambiguous']} ambiguous, {counts['hard']} hard")
        inputs = list(score_paths)
        params = {"scores": list(score_paths), "conf_hi": conf_hi, "conf_lo": conf_lo, "var_hi": var_hi}
    write_manifest(out_path, "dynamics", params, inputs, [out_path], None, started)
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    """Run the CLI; returns the process exit code."""
    try:
        rc = cli.main(args=argv, standalone_mode=False)
        return rc if isinstance(rc, int) else 0
    except click.UsageError as exc:
        exc.show()
        return 2
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 2
    except Exception as exc:  # noqa: BLE001 - single CLI boundary
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
