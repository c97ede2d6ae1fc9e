"""Detection after BP at mild and heavy noise across row weights and BP priors.

Shows why one parameter set cannot both detect 10%-noise codewords and stay
silent at 48%: lowering the prior or the row weight raises mild-noise
detection, but BP then starts manufacturing parity checks on noise.

    python3 scripts/bp_tradeoff.py --trials 200 > tradeoff.csv
"""
import argparse
import csv
import sys

from tamperlock.attack import AttackScenario, run_scenario
from tamperlock.ldpc import PrcKey, default_rows, detection_scores, prc_encode_many, bsc
from tamperlock.core import trial_rng


def raw_detection(key, flip, trials, seed):
    rng = trial_rng(seed, 2)
    x = prc_encode_many(key, trials, rng)
    return float((detection_scores(key, bsc(x, flip, rng)) >= key.detect_threshold).mean())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=512)
    ap.add_argument("--weights", default="3,4,6")
    ap.add_argument("--priors", default="0.05,0.10,0.15")
    ap.add_argument("--mild", type=float, default=0.10)
    ap.add_argument("--heavy", type=float, default=0.4807)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["row_weight", "bp_prior", "mild_raw", "mild_bp", "heavy_raw", "heavy_bp", "mild_post_err", "heavy_post_err"])
    for w in (int(v) for v in args.weights.split(",")):
        key = PrcKey.generate(args.n, default_rows(args.n), w, seed=(args.seed, w))
        mild_raw = raw_detection(key, args.mild, args.trials, args.seed)
        heavy_raw = raw_detection(key, args.heavy, args.trials, args.seed)
        for prior in (float(v) for v in args.priors.split(",")):
            mild = run_scenario(AttackScenario("mild", args.mild), key, args.trials, args.seed, bp_prior=prior)
            heavy = run_scenario(AttackScenario("heavy", args.heavy), key, args.trials, args.seed, bp_prior=prior)
            out.writerow([w, prior, f"{mild_raw:.3f}", f"{mild.detection_rate:.3f}", f"{heavy_raw:.3f}",
                          f"{heavy.detection_rate:.3f}", f"{mild.mean_post_bp_error:.4f}", f"{heavy.mean_post_bp_error:.4f}"])
            sys.stdout.flush()


if __name__ == "__main__":
    main()
