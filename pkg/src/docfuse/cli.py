"""Operator command line: validate / ingest / search / eval / ablate / serve.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corpus import load_corpus, load_queries_file, validate_corpus
from .embeddings import merge_embedding_files, write_embeddings
from .errors import DocfuseError, MissingFile, ParseError
from .evaluation import ablation_run, evaluate, write_report
from .pipelines import PipelineConfig, load_run_file, run_batch
from .verification import make_verifier


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems instead of exiting with code 2."""

    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="docfuse", description="Multi-granularity document retrieval engine")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("validate", help="check a corpus directory against the data model")
    p.add_argument("--corpus", required=True, help="corpus directory (holds manifest.json)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("ingest", help="merge embedding files and write one binary store")
    p.add_argument("--embeddings", required=True, nargs="+", help="JSONL or FDR1 input files")
    p.add_argument("--out", required=True, help="output FDR1 store path")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("search", help="run a batch of queries through a pipeline")
    p.add_argument("--corpus", required=True)
    p.add_argument("--store", required=True, nargs="+", help="embedding files (JSONL or FDR1)")
    p.add_argument("--config", required=True, help="pipeline config JSON")
    p.add_argument("--queries", required=True, help="queries JSONL (run order follows this file)")
    p.add_argument("--verifier", default=None, help="verifier URL or mock:FIXTURE.jsonl")
    p.add_argument("--out", required=True, help="output run file (JSONL)")
    p.add_argument("--workers", type=int, default=1, help="concurrent queries (default 1)")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("eval", help="score a run file against corpus ground truth")
    p.add_argument("--run", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", default=None, help="optional report JSON path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="run and score several pipeline variants")
    p.add_argument("--corpus", required=True)
    p.add_argument("--store", required=True, nargs="+")
    p.add_argument("--variants", required=True, help="JSON list of {name, config}")
    p.add_argument("--verifier", default=None)
    p.add_argument("--out", required=True, help="output CSV (variant,score)")
    p.add_argument("--trend-out", default=None, help="optional trend-series CSV for plotting")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("serve", help="start the HTTP search service")
    p.add_argument("--config", required=True, help="service config JSON")
    p.set_defaults(func=cmd_serve)

    return parser


def cmd_validate(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    issues = validate_corpus(corpus)
    for issue in issues:
        print(f"{issue.kind}: {issue.item_id}: {issue.message}", file=sys.stderr)
    print(f"{len(issues)} issues")
    return 0 if not issues else 2


def cmd_ingest(args: argparse.Namespace) -> int:
    store = merge_embedding_files(args.embeddings)
    records = store.records()
    write_embeddings(records, args.out, format="binary")
    print(f"wrote {len(records)} records across {len(store.channels())} channels to {args.out}")
    return 0


def cmd_search(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    store = merge_embedding_files(args.store, normalize=True)
    config = PipelineConfig.from_file(args.config)
    queries = load_queries_file(args.queries)
    verifier = make_verifier(args.verifier) if args.verifier else None
    entries = run_batch(
        queries, corpus, store, config, verifier, out_path=args.out, max_workers=args.workers
    )
    failed = sum(1 for e in entries if e.error is not None)
    print(f"ran {len(entries)} queries ({failed} with errors) -> {args.out}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    entries = load_run_file(args.run)
    corpus = load_corpus(args.corpus)
    report = evaluate(entries, {q.id: q for q in corpus.queries})
    for k in sorted(report.aggregate):
        print(f"recall@{k}: {report.aggregate[k]:.4f}")
    print(f"final_score: {report.final_score:.4f}")
    if args.out:
        write_report(report, args.out)
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    store = merge_embedding_files(args.store, normalize=True)
    verifier = make_verifier(args.verifier) if args.verifier else None

    vpath = Path(args.variants)
    if not vpath.is_file():
        raise MissingFile(f"missing variants file: {vpath}")
    try:
        doc = json.loads(vpath.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{vpath}: invalid JSON: {exc.msg}") from None
    raw_variants = doc.get("variants") if isinstance(doc, dict) else doc
    if not isinstance(raw_variants, list) or not raw_variants:
        raise ParseError(f"{vpath}: expected a nonempty list of variants")
    variants = []
    for i, item in enumerate(raw_variants):
        if not isinstance(item, dict) or "name" not in item or "config" not in item:
            raise ParseError(f"{vpath}: variant {i} must have 'name' and 'config'")
        variants.append((str(item["name"]), PipelineConfig.from_json(item["config"])))

    table = ablation_run(
        variants, list(corpus.queries), corpus, store, verifier, max_workers=args.workers
    )
    Path(args.out).write_text(table.to_csv(), encoding="utf-8")
    if args.trend_out:
        Path(args.trend_out).write_text(table.trend_csv(), encoding="utf-8")
    for name, score in table.rows:
        print(f"{name}: {score:.4f}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import load_service

    app, host, port = load_service(args.config)
    uvicorn.run(app, host=host, port=port, log_level="info")
    return 0


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except DocfuseError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
