"""Tamper detection vs tampering rate for several alphabets, around t/n = (1-1/q)(1-delta).

    python3 scripts/threshold_sweep.py --n 64 --qs 2,16,4096 --trials 1000 > sweep.csv
"""
import argparse
import csv
import sys

import numpy as np

from tamperlock.experiments import SWEEP_COLUMNS, sweep_threshold


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--qs", default="2,16,4096")
    ap.add_argument("--delta", type=float, default=0.5)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    out = csv.DictWriter(sys.stdout, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    out.writeheader()
    alphas = [round(a, 4) for a in np.arange(0.05, 1.0, 0.05)]
    for q in (int(v) for v in args.qs.split(",")):
        out.writerows(sweep_threshold(args.n, q, args.delta, alphas, args.trials, args.seed))


if __name__ == "__main__":
    main()
