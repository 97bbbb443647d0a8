"""Command line front end: ``sasfield <operation> --config FILE``.

Exit codes: 0 success, 2 config error, 3 resource error, 4 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import ConfigError, SasFieldError
from .experiment import (
    OPERATIONS,
    ResultTable,
    companion_paths,
    default_jobs,
    load_config,
    report,
    run,
    summary_csv,
    with_overrides,
    write_report,
)

log = logging.getLogger("sasfield")


def _add_common(p):
    p.add_argument("--config", help="experiment config file (key = value lines)")
    p.add_argument("--out", help="output path for the CSV result table or report")
    p.add_argument("--seed", type=int, help="root seed, overrides run.seed")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: available cores)")
    p.add_argument("--verbose", action="store_true", help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sasfield", description="Stationary SaS random field laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for op in OPERATIONS:
        _add_common(sub.add_parser(op, help=f"run the {op} operation"))
    rep = sub.add_parser("report", help="summarise a CSV result table")
    rep.add_argument("table", nargs="?", help="result table CSV (default: run.output of --config)")
    _add_common(rep)
    return parser


def _do_report(args) -> int:
    path = args.table
    if path is None and args.config:
        path = load_config(args.config).run.output or None
    if path is None:
        raise ConfigError("report needs a result table path or a config with run.output")
    table = ResultTable.read(path)
    text, summary = report(table)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        _, scsv = companion_paths(args.out)
        scsv.write_text(summary_csv(summary), encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")
    return 0


def _do_run(args) -> int:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = with_overrides(load_config(args.config), operation=args.command, seed=args.seed, output=args.out)
    jobs = args.jobs if args.jobs is not None else default_jobs()
    if jobs < 1:
        raise ConfigError("--jobs must be positive")
    log.info("running %s with %d replication(s) on %d job(s)", cfg.run.operation, cfg.run.replications, jobs)
    table = run(cfg, jobs=jobs)
    out = cfg.run.output
    if out:
        table.write(out)
        txt, scsv = write_report(table, out)
        log.info("wrote %s, %s and %s", out, txt, scsv)
    else:
        sys.stdout.write(table.to_csv())
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        if args.command == "report":
            return _do_report(args)
        return _do_run(args)
    except SasFieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
