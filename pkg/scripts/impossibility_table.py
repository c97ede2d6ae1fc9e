"""Exact label masses of uniform words for small Hamming codes, with both Chernoff bounds.

    python3 scripts/impossibility_table.py > table.csv
"""
import csv
import sys

from tamperlock.experiments import verify_impossibility
from tamperlock.hamming import (
    HammingCode,
    exact_nonvalid_probability,
    impossibility_bound,
    soundness_bound,
)

CASES = [(8, 2), (12, 2), (8, 3), (6, 4), (10, 4), (4, 16), (5, 16)]
DELTAS = [0.1, 0.3, 0.5, 0.7, 0.9]


def main():
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["n", "q", "delta", "p_valid", "p_invalid", "p_tampered", "soundness_error", "tamper_miss",
                  "exact_nonvalid", "soundness_bound", "impossibility_bound"])
    for n, q in CASES:
        for delta in DELTAS:
            rep = verify_impossibility(HammingCode.build(n, q, delta), exact=True, seed=0)
            assert rep.partition_holds and rep.dilemma_holds
            out.writerow([n, q, delta, f"{float(rep.p_valid_uniform):.6g}", f"{float(rep.p_invalid_uniform):.6g}",
                          f"{float(rep.p_tampered_uniform):.6g}", f"{float(rep.soundness_error):.6g}",
                          f"{float(rep.tamper_miss):.6g}", f"{exact_nonvalid_probability(n, q, delta):.6g}",
                          f"{soundness_bound(n, q, delta):.6g}", f"{impossibility_bound(n, q, delta):.6g}"])


if __name__ == "__main__":
    main()
