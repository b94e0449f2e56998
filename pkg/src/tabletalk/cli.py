"""Command-line interface.

Machine-readable JSON goes to stdout; progress and summaries go to stderr.
Exit codes: 0 success, 1 handled failure (a JSON payload is still printed),
2 usage errors (argparse).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from typing import Optional

from . import chart as chartmod
from . import evalkit, pipeline, translate
from .config import load_config
from .dataprofile import ingest_csv, render_ddl
from .errors import PipelineError


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True, indent=2))


def _fail(exc: PipelineError) -> int:
    _emit({"error": exc.payload()})
    return 1


def _read_file(path: str) -> bytes:
    with open(path, "rb") as handle:
        return handle.read()


def _load_dataset(path: str):
    return ingest_csv(_read_file(path), os.path.basename(path))


def _cmd_profile(args: argparse.Namespace) -> int:
    try:
        dataset = _load_dataset(args.file)
    except FileNotFoundError:
        return _fail(PipelineError(f"no such file: {args.file}",
                                   code="FILE_NOT_FOUND"))
    except PipelineError as exc:
        return _fail(exc)
    profile = dataset.profile
    _emit({"profile": profile.to_dict(), "ddl": render_ddl(profile)})
    print(f"{profile.table_name}: {profile.row_count} rows, "
          f"{profile.column_count} columns", file=sys.stderr)
    return 0


def _cmd_ask(args: argparse.Namespace) -> int:
    try:
        dataset = _load_dataset(args.file)
    except FileNotFoundError:
        return _fail(PipelineError(f"no such file: {args.file}",
                                   code="FILE_NOT_FOUND"))
    except PipelineError as exc:
        return _fail(exc)

    completer = None
    if not args.offline:
        llm = load_config().llm
        if os.environ.get(llm.api_key_env):
            completer = translate.http_completer(llm)
    response = pipeline.run_pipeline(
        dataset,
        args.question,
        chart_hint=args.chart,
        offline=args.offline,
        completer=completer,
    )
    _emit(response.to_dict())

    if response.ok and args.out and response.chart \
            and response.chart.get("spec") is not None:
        os.makedirs(args.out, exist_ok=True)
        stem = os.path.splitext(os.path.basename(args.file))[0]
        spec = response.chart["spec"]
        spec_path = os.path.join(args.out, f"{stem}.vl.json")
        with open(spec_path, "w", encoding="utf-8") as handle:
            json.dump(spec, handle, sort_keys=True, indent=2)
        html_path = os.path.join(args.out, f"{stem}.html")
        chart_spec = chartmod.ChartSpec(
            chart=response.chart["chart"],
            title=spec.get("title", args.question), spec=spec)
        with open(html_path, "w", encoding="utf-8") as handle:
            handle.write(chartmod.chart_html(chart_spec))
        print(f"wrote {spec_path} and {html_path}", file=sys.stderr)

    if response.ok:
        chart_name = (response.chart or {}).get("chart") or "none"
        rows = len((response.result or {}).get("rows", []))
        print(f"sql: {response.sql}", file=sys.stderr)
        print(f"rows: {rows}, chart: {chart_name}", file=sys.stderr)
        return 0
    print(f"query failed: {(response.error or {}).get('code')}",
          file=sys.stderr)
    return 1


def _cmd_eval(args: argparse.Namespace) -> int:
    try:
        text = _read_file(args.pairs).decode("utf-8")
    except FileNotFoundError:
        return _fail(PipelineError(f"no such file: {args.pairs}",
                                   code="FILE_NOT_FOUND"))
    except UnicodeDecodeError:
        return _fail(PipelineError("pair file is not valid UTF-8",
                                   code="NOT_UTF8"))
    try:
        pairs = evalkit.load_pairs(text)
        summary = evalkit.run_eval_suite(pairs, bleu_threshold=args.threshold)
    except evalkit.EvalError as exc:
        return _fail(exc)
    _emit(summary.to_dict())
    print(evalkit.render_summary(summary), file=sys.stderr)
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    try:
        config = load_config(args.config)
    except PipelineError as exc:
        return _fail(exc)
    if args.port is not None:
        config = dataclasses.replace(config, port=args.port)
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="t2i",
        description="Ask questions of a CSV: SQL, chart spec, and insights.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_profile = sub.add_parser("profile", help="profile a CSV file")
    p_profile.add_argument("file")
    p_profile.set_defaults(func=_cmd_profile)

    p_ask = sub.add_parser("ask", help="answer a question about a CSV file")
    p_ask.add_argument("file")
    p_ask.add_argument("question")
    p_ask.add_argument("--chart", choices=chartmod.CHART_TYPES, default=None,
                       help="force a chart type instead of auto-selection")
    p_ask.add_argument("--offline", action="store_true",
                       help="use the deterministic rule translator")
    p_ask.add_argument("--out", default=None,
                       help="directory for the chart spec and HTML files")
    p_ask.set_defaults(func=_cmd_ask)

    p_eval = sub.add_parser("eval", help="score a JSONL file of SQL pairs")
    p_eval.add_argument("pairs")
    p_eval.add_argument("--threshold", type=float,
                        default=evalkit.BLEU_MATCH_THRESHOLD)
    p_eval.set_defaults(func=_cmd_eval)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--port", type=int, default=None)
    p_serve.add_argument("--config", default=None,
                         help="path to a TOML config file")
    p_serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
