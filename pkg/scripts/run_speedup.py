"""Runtime versus worker count on a synthetic linear-Gaussian dataset.

Writes one CSV row per (workers, batching) setting with the mean wall time,
CI-test count, speedup over one worker and peak resident memory.

    python scripts/run_speedup.py --p 300 --degree 3 --n 500 --workers 1,2,4 --out speedup.csv
"""

import argparse
import csv
import os
import sys

from parapc.cli import BENCH_COLUMNS, run_bench


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=300)
    ap.add_argument("--degree", type=float, default=3.0)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--workers", default="1,2,4")
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--batch-size", type=int, default=64, help="batch size for the memory-efficient rows")
    ap.add_argument("--out", default="-")
    args = ap.parse_args(argv)

    workers = [int(w) for w in args.workers.split(",")]
    rows = run_bench(args.p, args.degree, args.n, args.seeds, workers, args.alpha)
    rows += run_bench(args.p, args.degree, args.n, args.seeds, workers, args.alpha,
                      mem_efficient=True, batch_size=args.batch_size)

    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if fh is not sys.stdout:
        fh.close()
    print(f"# {os.cpu_count()} logical cores visible", file=sys.stderr)


if __name__ == "__main__":
    main()
