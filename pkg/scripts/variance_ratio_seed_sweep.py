"""How often the fig-distribution variance-ratio conditions hold across seeds.

For each seed and dimension n, runs the fig-distribution experiment and
records whether ratio(high) > ratio(low) >= 1 and ratio(high) >= 2 ratio(low).

    python3 scripts/variance_ratio_seed_sweep.py --seeds 100 --n 16 32 64
"""

from __future__ import annotations

import argparse

import numpy as np

from varpo.cli import run_fig_distribution
from varpo.config import build_config


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--n", type=int, nargs="+", default=[16, 32, 64])
    ap.add_argument("--trials", type=int, default=1000)
    args = ap.parse_args()
    for n in args.n:
        order = margin = 0
        ratios = []
        for seed in range(args.seeds):
            cfg = build_config("fig-distribution", seed=seed, trials=args.trials, overrides={"n": n})
            rep, _ = run_fig_distribution(cfg)
            hi, lo = rep.value("high_variance_ratio"), rep.value("low_variance_ratio")
            ratios.append((hi, lo))
            order += hi > lo >= 1
            margin += hi >= 2 * lo
        med = np.median(np.array(ratios), axis=0)
        print(f"n={n:3d}: ordering {order}/{args.seeds}, 2x margin {margin}/{args.seeds}, "
              f"median ratios high={med[0]:.2f} low={med[1]:.2f}")


if __name__ == "__main__":
    main()
