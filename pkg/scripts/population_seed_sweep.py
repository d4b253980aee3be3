"""Population study over many master seeds.

Reports, per seed, the F statistic, the Welch t statistic and whether the
variance ratio is nonincreasing over the reward-range sweep. Prints the
fraction of seeds with F above a fixed critical value and with no Welch
rejection.

    python3 scripts/population_seed_sweep.py --seeds 20 [--sweep]
"""

from __future__ import annotations

import argparse

import numpy as np

from varpo.cli import population_study
from varpo.config import build_config


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--f-threshold", type=float, default=1.616)
    ap.add_argument("--sweep", action="store_true", help="also check range-sweep monotonicity")
    args = ap.parse_args()
    p = build_config("rlhf-sim").params
    f_ok = t_ok = mono_ok = 0
    for seed in range(args.seeds):
        main_study = population_study(p, seed, p["range_max"])
        f, t = main_study.f_test, main_study.welch
        f_ok += f.statistic > args.f_threshold
        t_ok += not t.reject_null
        line = f"seed {seed:2d}  F={f.statistic:7.3f}  t={t.statistic:6.3f}  t_crit={t.critical_value:.3f}"
        if args.sweep:
            ratios = []
            for r in p["ranges"]:
                s = main_study if r == p["range_max"] else population_study(p, seed, r)
                ratios.append(s.var_vanilla / s.var_va)
            mono = all(b <= a for a, b in zip(ratios, ratios[1:]))
            mono_ok += mono
            line += "  sweep " + " ".join(f"{x:.2f}" for x in ratios) + ("" if mono else "  (not monotone)")
        print(line, flush=True)
    n = args.seeds
    print(f"F > {args.f_threshold}: {f_ok}/{n}   Welch not rejected: {t_ok}/{n}")
    if args.sweep:
        print(f"sweep monotone: {mono_ok}/{n}")


if __name__ == "__main__":
    main()
