"""Command line entry point: ``rangelab run | verify | graphs list | report``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import load_config
from .errors import RangelabError, ResourceLimitError
from .graphs import CATALOG
from .parallel import WORKERS_ENV
from .report import merge_reports

log = logging.getLogger("rangelab")


def _error(exc: RangelabError) -> int:
    print(json.dumps({"error": exc.category, "message": str(exc)}), file=sys.stderr)
    return exc.exit_code


def cmd_run(args) -> int:
    from .runner import run_config

    cfg = load_config(args.config, seed_override=args.seed)
    report = run_config(cfg)
    outdir = Path(args.out) if args.out else Path(cfg.get("output.dir", Path("rangelab-out")))
    formats = cfg.get("output.formats") or ["csv", "json"]
    written = report.write(outdir, prefix=cfg.get("output.prefix", ""), formats=formats)
    for p in written:
        print(p)
    return 0


def cmd_verify(args) -> int:
    from .verify import verify_suite

    only = [int(s) for s in args.only.split(",")] if args.only else None
    results = verify_suite(args.profile, only=only, fault=args.inject_fault)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed ({args.profile} profile)")
    if failed:
        print("failed: " + ", ".join(str(r.number) for r in failed), file=sys.stderr)
        return 1
    return 0


def cmd_graphs(args) -> int:
    width = max(len(k) for k in CATALOG)
    for kind, desc in CATALOG.items():
        print(f"{kind:<{width}}  {desc}")
    return 0


def cmd_report(args) -> int:
    print(merge_reports(args.indir, args.out))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rangelab", description="Range of random walks on graphs: exact kernels and seeded Monte Carlo.",
                                epilog=f"Set {WORKERS_ENV} to override the worker count.")
    p.add_argument("--version", action="version", version=f"rangelab {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute an experiment config")
    run.add_argument("config")
    run.add_argument("--seed", type=int, help="override run.seed")
    run.add_argument("--out", help="output directory (overrides output.dir)")
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="run the verification suite")
    ver.add_argument("--profile", choices=("quick", "full"), default="quick")
    ver.add_argument("--only", help="comma-separated criterion numbers")
    ver.add_argument("--inject-fault", choices=("neighbor-order",), help=argparse.SUPPRESS)
    ver.set_defaults(func=cmd_verify)

    gr = sub.add_parser("graphs", help="graph catalog")
    gsub = gr.add_subparsers(dest="graphs_command", required=True)
    gl = gsub.add_parser("list", help="list the built-in graph kinds")
    gl.set_defaults(func=cmd_graphs)

    rep = sub.add_parser("report", help="merge run reports from a directory")
    rep.add_argument("--in", dest="indir", required=True)
    rep.add_argument("--out", required=True)
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if exc.code in (0, None) else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except RangelabError as exc:
        return _error(exc)
    except MemoryError:
        return _error(ResourceLimitError("out of memory"))


if __name__ == "__main__":
    sys.exit(main())
