"""Command line entry point: ``run``, ``summarize`` and ``oracle-check``."""

from __future__ import annotations

import argparse
import sys

from . import harness


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="base seed (overrides the config)")
    p.add_argument("--trials", type=int, help="trials per sweep point (overrides the config)")
    p.add_argument("--out", help="output CSV path (overrides the config)")


def _load(args) -> harness.ExperimentConfig:
    cfg = harness.load_config(args.config)
    return harness.with_overrides(cfg, seed=args.seed, trials=args.trials, out=args.out)


def cmd_run(args) -> int:
    cfg = _load(args)
    records = harness.run_sweep(cfg)
    harness.write_records(records, cfg.output_path)
    failed = sum(1 for r in records if r.error)
    ok = [r for r in records if not r.error]
    if ok:
        harness.write_summary(harness.summarize(ok), harness.summary_path(cfg.output_path))
    print(f"wrote {len(records)} records to {cfg.output_path} ({failed} failed)")
    return 0


def cmd_summarize(args) -> int:
    rows = harness.summarize(harness.read_records(args.csv))
    out = args.out or harness.summary_path(args.csv)
    harness.write_summary(rows, out)
    for r in rows:
        print(f"{r.sweep_axis}={r.sweep_value:g}  {r.scheme:<13} "
              f"ee={r.ee_mean:.6g} +- {r.ee_stderr:.2g}  (n={r.n})")
    return 0


def cmd_oracle_check(args) -> int:
    cfg = _load(args)
    gaps = harness.oracle_gaps(cfg)
    harness.write_oracle_gaps(gaps, cfg.output_path)
    good = sum(g.ratio >= harness.ORACLE_RATIO for g in gaps)
    share = good / len(gaps)
    passed = share >= harness.ORACLE_PASS_SHARE
    print(f"{good}/{len(gaps)} seeds within {harness.ORACLE_RATIO:.0%} of the oracle "
          f"(need {harness.ORACLE_PASS_SHARE:.0%}): {'PASS' if passed else 'FAIL'}")
    return 0 if passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radc-ee", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a sweep and write per-trial and summary CSVs")
    p.add_argument("config")
    _add_overrides(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("summarize", help="mean and standard error of EE per sweep point and scheme")
    p.add_argument("csv")
    p.add_argument("--out", help="summary CSV path (default: <csv>_summary.csv)")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("oracle-check", help="compare JBQA with exhaustive search on small instances")
    p.add_argument("config")
    _add_overrides(p)
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"radc-ee {args.command}: error: {exc}", file=sys.stderr)
        return 2
