"""Command-line entry point.

Subcommands mirror the experiment workflow: validate, split, stats,
export-training, generate, evaluate, report, agree, serve. Every
artifact-producing subcommand writes a manifest (resolved config, input
hashes, rule versions) next to its outputs so runs can be replayed exactly.

Exit status: 0 success, 1 data/backend error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from .adapters import HttpSummarizer, HttpTracker, PromptedSummarizer, PromptedTracker
from .agreement import ScorePair, correlate_reports, iaa_stats
from .corpus import (
    ARTICLES_FILENAME,
    INSTANCES_FILENAME,
    AspectCode,
    CorpusError,
    compute_stats,
    load_dataset,
    render_instances_file,
    render_articles_file,
    render_summarizer_export,
    render_tracker_export,
    build_summarizer_training_set,
    build_tracker_training_set,
    split_dataset,
)
from .gateway import (
    BackendSpec,
    CachedJudge,
    GatewayError,
    MockDecomposer,
    MockJudge,
    ModelGateway,
    PromptedDecomposer,
    PromptedJudge,
    build_backend,
    load_backend_config,
)
from .gateway.judging import HttpNliJudge
from .metrics import (
    METRIC_KEYS,
    InstanceReport,
    MetricRatio,
    aggregate,
    evaluate_run,
    render_report_table,
)
from .pipelines import (
    DEFAULT_THRESHOLD,
    RUNS_FILENAME,
    MockSummarizer,
    MockTracker,
    PipelineError,
    load_runs_file,
    mock_generation_handler,
    render_runs_file,
    run_ete,
    run_fewshot,
    run_over_instances,
    run_stt,
    run_tts,
    write_run_manifest,
)
from .service.storage import open_store
from .service.workflow import RATING_METRICS, WorkflowError

MOCK_SPEC = BackendSpec(name="mock", kind="mock")


def _load_specs(path: str | None) -> dict[str, BackendSpec]:
    specs = load_backend_config(path) if path else {}
    specs.setdefault("mock", MOCK_SPEC)
    return specs


def _spec(specs: dict[str, BackendSpec], name: str) -> BackendSpec:
    if name not in specs:
        raise GatewayError(f"backend {name!r} not found in configuration")
    return specs[name]


def _resolve_tracker(specs, name):
    spec = _spec(specs, name)
    if spec.kind == "mock":
        return MockTracker()
    if spec.kind == "chat-completion-api":
        return PromptedTracker(ModelGateway([build_backend(spec)]), name)
    return HttpTracker(spec)


def _resolve_summarizer(specs, name, style):
    spec = _spec(specs, name)
    if spec.kind == "mock":
        return MockSummarizer()
    if spec.kind == "chat-completion-api":
        return PromptedSummarizer(ModelGateway([build_backend(spec)]), name, style=style)
    return HttpSummarizer(spec)


def _resolve_model_completer(specs, name):
    spec = _spec(specs, name)
    handler = mock_generation_handler if spec.kind == "mock" else None
    gateway = ModelGateway([build_backend(spec, handler=handler)])
    return gateway.completer(name), gateway


def _resolve_judge(specs, name, cache_path=None):
    spec = _spec(specs, name)
    if spec.kind == "mock":
        table_path = spec.options.get("table")
        judge = MockJudge.from_file(table_path, name=name) if table_path else MockJudge(name=name)
    elif spec.kind == "local-http":
        judge = HttpNliJudge(spec)
    else:
        judge = PromptedJudge(ModelGateway([build_backend(spec)]), name)
    return CachedJudge(judge, path=cache_path)


def _resolve_decomposer(specs, name):
    spec = _spec(specs, name)
    if spec.kind == "mock":
        table_path = spec.options.get("table")
        return MockDecomposer.from_file(table_path, name=name) if table_path else MockDecomposer(name=name)
    return PromptedDecomposer(ModelGateway([build_backend(spec)]), name)


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    articles, instances = load_dataset(args.dataset)
    positives = sum(1 for i in instances if not i.reference.is_negative)
    print(
        f"ok: {len(articles)} articles, {len(instances)} instances "
        f"({positives} positive, {len(instances) - positives} negative)"
    )
    return 0


def cmd_split(args) -> int:
    articles, instances = load_dataset(args.dataset)
    train, test = split_dataset(instances, args.ratio, args.seed)
    by_pmid = {a.pmid: a for a in articles}
    out = Path(args.out)
    for name, part in (("train", train), ("test", test)):
        part_dir = out / name
        part_dir.mkdir(parents=True, exist_ok=True)
        pmids = {i.pmid for i in part}
        (part_dir / ARTICLES_FILENAME).write_text(
            render_articles_file([by_pmid[p] for p in sorted(pmids)]), encoding="utf-8"
        )
        (part_dir / INSTANCES_FILENAME).write_text(render_instances_file(part), encoding="utf-8")
    write_run_manifest(
        out,
        config={"subcommand": "split", "ratio": args.ratio, "seed": args.seed},
        input_paths={
            "articles": Path(args.dataset) / ARTICLES_FILENAME,
            "instances": Path(args.dataset) / INSTANCES_FILENAME,
        },
        elapsed_s=0.0,
    )
    print(f"split {len(instances)} instances into {len(train)} train / {len(test)} test")
    return 0


def cmd_stats(args) -> int:
    articles, instances = load_dataset(args.dataset)
    stats = compute_stats(articles, instances)
    print(json.dumps(stats.to_json(), indent=2, sort_keys=True))
    return 0


def cmd_export_training(args) -> int:
    articles, instances = load_dataset(args.dataset)
    if args.kind == "tracker":
        pairs = build_tracker_training_set(articles, instances)
        text = render_tracker_export(pairs)
        count = len(pairs)
    else:
        records = build_summarizer_training_set(articles, instances, include_full_context=args.full_context)
        text = render_summarizer_export(records)
        count = len(records)
    Path(args.out).write_text(text, encoding="utf-8")
    print(f"wrote {count} {args.kind} records to {args.out}")
    return 0


def cmd_generate(args) -> int:
    started = time.perf_counter()
    articles, instances = load_dataset(args.dataset)
    by_pmid = {a.pmid: a for a in articles}
    specs = _load_specs(args.backends)

    backend_names: list[str] = []
    if args.pipeline in ("tts", "tts-full"):
        tracker = _resolve_tracker(specs, args.tracker)
        summarizer = _resolve_summarizer(specs, args.summarizer, style="tts")
        backend_names = [args.tracker, args.summarizer]

        def runner(article, aspect):
            return run_tts(
                article,
                aspect,
                tracker,
                summarizer,
                with_full_context=args.pipeline == "tts-full",
                threshold=args.threshold,
            )

    elif args.pipeline == "stt":
        tracker = _resolve_tracker(specs, args.tracker)
        summarizer = _resolve_summarizer(specs, args.summarizer, style="stt")
        backend_names = [args.summarizer, args.tracker]

        def runner(article, aspect):
            return run_stt(article, aspect, summarizer, tracker, threshold=args.threshold)

    elif args.pipeline == "ete":
        complete, _ = _resolve_model_completer(specs, args.model)
        backend_names = [args.model]

        def runner(article, aspect):
            return run_ete(article, aspect, complete, backend_name=args.model)

    else:  # fewshot
        complete, _ = _resolve_model_completer(specs, args.model)
        backend_names = [args.model]

        def runner(article, aspect):
            return run_fewshot(article, aspect, complete, backend_name=args.model)

    runs, errors = run_over_instances(instances, by_pmid, runner, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / RUNS_FILENAME).write_text(render_runs_file(runs, errors), encoding="utf-8")
    write_run_manifest(
        out,
        config={
            "subcommand": "generate",
            "pipeline": args.pipeline,
            "backends": backend_names,
            "threshold": args.threshold,
            "seed": args.seed,
            "jobs": args.jobs,
        },
        input_paths={
            "articles": Path(args.dataset) / ARTICLES_FILENAME,
            "instances": Path(args.dataset) / INSTANCES_FILENAME,
        },
        elapsed_s=time.perf_counter() - started,
    )
    print(f"{args.pipeline}: {len(runs)} outputs, {len(errors)} errors -> {out / RUNS_FILENAME}")
    return 0 if not errors else 1


def _write_reports(out: Path, reports: list[InstanceReport], mode: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with (out / "instance_reports.jsonl").open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"format": "instance-reports", "version": 1}, sort_keys=True) + "\n")
        for report in reports:
            fh.write(json.dumps(report.as_json(), ensure_ascii=False, sort_keys=True) + "\n")
    summary = aggregate(reports, mode=mode)
    (out / "report.json").write_text(
        json.dumps(summary.as_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    table = render_report_table(summary)
    (out / "report.txt").write_text(table + "\n", encoding="utf-8")
    print(table)


def cmd_evaluate(args) -> int:
    started = time.perf_counter()
    articles, instances = load_dataset(args.dataset)
    run_path = Path(args.run)
    if run_path.is_dir():
        run_path = run_path / RUNS_FILENAME
    outputs = load_runs_file(run_path)
    specs = _load_specs(args.backends)
    judge = _resolve_judge(specs, args.judge, cache_path=args.judge_cache)
    decomposer = _resolve_decomposer(specs, args.decomposer)
    reports = evaluate_run(
        instances, outputs, {a.pmid: a for a in articles}, judge, decomposer, jobs=args.jobs
    )
    if not reports:
        print("no evaluable instances: run file does not overlap the dataset", file=sys.stderr)
        return 1
    out = Path(args.out)
    _write_reports(out, reports, args.mode)
    write_run_manifest(
        out,
        config={
            "subcommand": "evaluate",
            "judge": args.judge,
            "decomposer": args.decomposer,
            "mode": args.mode,
        },
        input_paths={
            "run": run_path,
            "articles": Path(args.dataset) / ARTICLES_FILENAME,
            "instances": Path(args.dataset) / INSTANCES_FILENAME,
        },
        elapsed_s=time.perf_counter() - started,
    )
    return 0


def load_instance_reports(path: str | Path) -> list[InstanceReport]:
    """Rebuild instance reports (metric ratios and flags) from a report file."""
    reports = []
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    for line in lines[1:]:
        if not line.strip():
            continue
        rec = json.loads(line)
        ratios = {}
        for key in METRIC_KEYS:
            entry = rec["metrics"][key]
            num, den = entry["numerator"], entry["denominator"]
            if den:
                ratios[key] = MetricRatio.of(num, den)
            else:
                value_num, value_den = entry["value"].split("/")
                ratios[key] = MetricRatio.degenerate(Fraction(int(value_num), int(value_den)))
        reports.append(
            InstanceReport(
                pmid=rec["pmid"],
                aspect=AspectCode(rec["aspect"]),
                clr=ratios["clr"],
                cir=ratios["cir"],
                clp=ratios["clp"],
                cip=ratios["cip"],
                ref_subclaims=tuple(rec.get("ref_subclaims", ())),
                gen_subclaims=tuple(rec.get("gen_subclaims", ())),
                flags=tuple(rec.get("flags", ())),
            )
        )
    return reports


def cmd_report(args) -> int:
    reports = load_instance_reports(args.instances)
    if not reports:
        print("empty report file", file=sys.stderr)
        return 1
    summary = aggregate(reports, mode=args.mode)
    if args.json:
        print(json.dumps(summary.as_json(), indent=2, sort_keys=True))
    else:
        print(render_report_table(summary))
    return 0


def cmd_agree(args) -> int:
    produced = False
    payload: dict = {}
    if args.ratings:
        text = Path(args.ratings).read_text(encoding="utf-8").strip()
        if text.startswith("["):  # the service's ratings dump is a JSON array
            records = json.loads(text)
        else:
            records = [json.loads(line) for line in text.splitlines() if line.strip()]
        by_instance: dict[str, list[dict]] = {}
        for rec in records:
            if "instance_id" in rec:
                by_instance.setdefault(rec["instance_id"], []).append(rec)
        pooled: list[ScorePair] = []
        per_metric: dict[str, list[ScorePair]] = {metric: [] for metric in RATING_METRICS}
        for instance_id, recs in sorted(by_instance.items()):
            if len(recs) != 2:
                continue
            for metric in RATING_METRICS:
                pair = ScorePair(f"{instance_id}:{metric}", recs[0][metric], recs[1][metric])
                pooled.append(pair)
                per_metric[metric].append(pair)
        if not pooled:
            print("no complete rating pairs found", file=sys.stderr)
            return 1
        payload["iaa"] = {
            "pooled": iaa_stats(pooled).as_json(),
            "per_metric": {m: iaa_stats(p).as_json() for m, p in per_metric.items() if p},
            "pairs": len(pooled),
        }
        produced = True
    if args.auto and args.human:
        summary = correlate_reports(
            load_instance_reports(args.auto), load_instance_reports(args.human)
        )
        payload["correlation"] = summary.as_json()
        produced = True
    if not produced:
        print("nothing to do: pass --ratings and/or both --auto and --human", file=sys.stderr)
        return 2
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    articles, instances = load_dataset(args.dataset)
    store = open_store(args.storage, args.storage_dir)
    admin_token = args.admin_token or os.environ.get("ANNOTATION_ADMIN_TOKEN")
    if not admin_token:
        print("set --admin-token or ANNOTATION_ADMIN_TOKEN", file=sys.stderr)
        return 2

    outputs = load_runs_file(args.run) if args.run else None
    subclaims = None
    if args.eval_report:
        subclaims = {}
        for report in load_instance_reports(args.eval_report):
            subclaims[f"{report.pmid}:{report.aspect.value}"] = {
                "ref": list(report.ref_subclaims),
                "gen": list(report.gen_subclaims),
            }

    app = create_app(
        store,
        articles,
        instances,
        admin_token=admin_token,
        revision_policy=args.revision_policy,
        outputs=outputs,
        subclaims=subclaims,
    )
    if args.ui:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=args.ui, html=True), name="ui")
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sumcite", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="load and validate a dataset directory")
    p.add_argument("--dataset", required=True)
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("split", help="deterministic train/test split by article")
    p.add_argument("--dataset", required=True)
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_split)

    p = sub.add_parser("stats", help="corpus statistics")
    p.add_argument("--dataset", required=True)
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("export-training", help="emit tracker or summarizer training records")
    p.add_argument("--dataset", required=True)
    p.add_argument("--kind", choices=("tracker", "summarizer"), required=True)
    p.add_argument("--full-context", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_export_training)

    p = sub.add_parser("generate", help="run a generation pipeline over a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--pipeline", choices=("tts", "tts-full", "stt", "ete", "fewshot"), required=True)
    p.add_argument("--backends", help="backend configuration file")
    p.add_argument("--tracker", default="mock")
    p.add_argument("--summarizer", default="mock")
    p.add_argument("--model", default="mock")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("evaluate", help="score a pipeline run against references")
    p.add_argument("--run", required=True, help="run directory or runs.jsonl file")
    p.add_argument("--dataset", required=True)
    p.add_argument("--backends")
    p.add_argument("--judge", default="mock")
    p.add_argument("--decomposer", default="mock")
    p.add_argument("--judge-cache", help="persist entailment verdicts to this file")
    p.add_argument("--mode", choices=("macro", "micro"), default="macro")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("report", help="render a stored evaluation")
    p.add_argument("--instances", required=True, help="instance_reports.jsonl path")
    p.add_argument("--mode", choices=("macro", "micro"), default="macro")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_report)

    p = sub.add_parser("agree", help="inter-annotator agreement and correlations")
    p.add_argument("--ratings", help="ratings JSONL (two annotators per instance)")
    p.add_argument("--auto", help="automatic instance_reports.jsonl")
    p.add_argument("--human", help="human instance_reports.jsonl")
    p.set_defaults(handler=cmd_agree)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--dataset", required=True)
    p.add_argument("--storage", choices=("file", "sqlite"), default="file")
    p.add_argument("--storage-dir", default="annotation-store")
    p.add_argument("--admin-token")
    p.add_argument("--revision-policy", choices=("original", "any"), default="original")
    p.add_argument("--run", help="attach pipeline outputs under evaluation")
    p.add_argument("--eval-report", help="attach subclaims from instance_reports.jsonl")
    p.add_argument("--ui", help="directory of built frontend assets to serve")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (CorpusError, GatewayError, PipelineError, WorkflowError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
