"""Run every experiment with its default configuration.

Writes ``<outdir>/<experiment>.csv`` (plus histogram files where the
experiment produces them) and prints each experiment's acceptance checks.

    python3 scripts/run_all.py [--outdir results] [--seed 0]
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from varpo.cli import main
from varpo.config import EXPERIMENTS


def run() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--outdir", default="results")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    os.makedirs(args.outdir, exist_ok=True)
    worst = 0
    for name in EXPERIMENTS:
        start = time.perf_counter()
        out = os.path.join(args.outdir, f"{name}.csv")
        print(f"== {name}", file=sys.stderr, flush=True)
        code = main([name, "--seed", str(args.seed), "--out", out, "--check"])
        print(f"   exit {code} in {time.perf_counter() - start:.1f}s -> {out}", file=sys.stderr, flush=True)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(run())
