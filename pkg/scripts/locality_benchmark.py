"""Mean consecutive distance of hilbert, morton and lex orderings over seeded
uniform clouds.

    python scripts/locality_benchmark.py --seeds 20 --n 1024 --csv locality.csv
"""
import argparse
import csv
import sys
import time

import numpy as np

from hilbertp2p.cloud_core import SCHEMES
from hilbertp2p.hilbert_codec import CurveConfig
from hilbertp2p.metrics import compare_orderings


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--n", type=int, default=1024)
    ap.add_argument("--dims", type=int, choices=(2, 3), default=2)
    ap.add_argument("--order", type=int, default=10)
    ap.add_argument("--csv", help="per-seed rows")
    args = ap.parse_args(argv)

    cfg = CurveConfig(args.dims, args.order)
    rows = []
    start = time.perf_counter()
    for seed in range(args.seeds):
        pc = np.random.default_rng(seed).uniform(size=(args.n, args.dims))
        r = compare_orderings(pc, cfg)
        rows.append([seed] + [r.mean_distance[s] for s in SCHEMES])
    elapsed = time.perf_counter() - start

    table = np.array([r[1:] for r in rows])
    print(f"{args.seeds} clouds, n={args.n}, d={args.dims}, order={args.order}, {elapsed:.2f}s")
    for k, s in enumerate(SCHEMES):
        print(f"  {s:8s} mean {table[:, k].mean():.5f}  min {table[:, k].min():.5f}  max {table[:, k].max():.5f}")
    wins = int(np.sum(table[:, 0] < table[:, 2]))
    print(f"  hilbert < lex on {wins}/{args.seeds} seeds")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["seed", *SCHEMES])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
