"""Run the four sweep configs and print EE tables (bits/s/Hz/W).

    python scripts/run_sweeps.py                # all four, config trial counts
    python scripts/run_sweeps.py snr --trials 100
"""

import argparse
from pathlib import Path

from radc_ee import harness

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
SWEEPS = ("snr", "rf_chains", "antennas", "avg_bits")


def table(rows):
    schemes = list(dict.fromkeys(r.scheme for r in rows))
    values = sorted({r.sweep_value for r in rows})
    cell = {(r.sweep_value, r.scheme): r for r in rows}
    print(f"{rows[0].sweep_axis:>12} " + "".join(f"{s:>24}" for s in schemes))
    for v in values:
        line = f"{v:>12g} "
        for s in schemes:
            r = cell[(v, s)]
            line += f"{r.ee_mean:>14.5g} +- {r.ee_stderr:<7.2g}"
        print(line)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("sweeps", nargs="*", default=SWEEPS, choices=SWEEPS)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()
    for name in args.sweeps:
        cfg = harness.with_overrides(harness.load_config(CONFIGS / f"{name}.cfg"), seed=args.seed, trials=args.trials)
        records = harness.run_sweep(cfg)
        harness.write_records(records, cfg.output_path)
        rows = harness.summarize(records)
        harness.write_summary(rows, harness.summary_path(cfg.output_path))
        print(f"\n{name}: {len(records)} trials -> {cfg.output_path}")
        table(rows)


if __name__ == "__main__":
    main()
