"""EE of JBQA with the two bit-rounding rules, across the average bit budget.

"smallest" always takes the smallest feasible threshold (most ceilings);
"best" keeps whichever feasible threshold gives the highest EE after the
continuous blocks are re-optimised.
"""

import argparse

import numpy as np

from radc_ee.pdd import SolverOptions, solve
from radc_ee.scenario import PRESETS, gen_channel


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=30)
    args = ap.parse_args()
    base = PRESETS["desk"]
    print(f"{'avg_bits':>8} {'smallest':>10} {'best':>10}")
    for avg in range(1, 7):
        cfg = base.with_(avg_bits=float(avg))
        ee = {"smallest": [], "best": []}
        for seed in range(args.trials):
            H = gen_channel(cfg, seed).H
            for rule in ee:
                _, diag = solve(cfg, H, SolverOptions(rounding=rule))
                ee[rule].append(diag.eta / np.log(2))
        print(f"{avg:>8} {np.mean(ee['smallest']):>10.5f} {np.mean(ee['best']):>10.5f}")


if __name__ == "__main__":
    main()
