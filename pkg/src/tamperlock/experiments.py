"""Monte Carlo and exact-enumeration experiments behind the CLI."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .attack import wilson_interval
from .channels import TamperChannel, full_resample_words
from .core import DecodeOutcome, MessagelessCode, all_words, make_rng, uniform_words
from .hamming import HammingCode, exact_nonvalid_probability, soundness_bound
from .multimsg import tamper_detection_trials
from .prf import PrfWrappedCode

EXACT_STATE_LIMIT = 2**20


@dataclass(frozen=True)
class ConflictReport:
    """Label masses of a uniformly random word (equivalently, a fully resampled codeword).

    In exact mode the masses are Fractions, so the partition identity is
    checked without rounding.
    """

    p_valid_uniform: Fraction | float
    p_invalid_uniform: Fraction | float
    p_tampered_uniform: Fraction | float
    exact: bool
    states: int

    @property
    def conflict_margin(self):
        return self.p_invalid_uniform + self.p_tampered_uniform - 1

    @property
    def soundness_claim_rate(self):
        return self.p_invalid_uniform

    @property
    def tamper_claim_rate(self):
        return self.p_tampered_uniform

    @property
    def soundness_error(self):
        return 1 - self.p_invalid_uniform

    @property
    def tamper_miss(self):
        return 1 - self.p_tampered_uniform

    @property
    def partition_holds(self) -> bool:
        total = self.p_valid_uniform + self.p_invalid_uniform + self.p_tampered_uniform
        if self.exact:
            return total == 1 and self.conflict_margin <= 0
        return math.isclose(float(total), 1.0) and self.conflict_margin <= 1e-12

    @property
    def dilemma_holds(self) -> bool:
        """At least one of soundness error and full-resample tamper miss is >= 1/2."""
        return max(self.soundness_error, self.tamper_miss) >= Fraction(1, 2)


def verify_impossibility(code: MessagelessCode, key=None, exact: bool = True, samples: int = 10**5, seed=0) -> ConflictReport:
    rng = make_rng(seed)
    key = code.kgen(rng) if key is None else key
    if exact:
        states = code.q**code.n
        if states > EXACT_STATE_LIMIT:
            raise ValueError(f"q^n = {states} exceeds the exact-mode limit {EXACT_STATE_LIMIT}")
        labels = code.dec_many(key, all_words(code.n, code.q))
        mass = [Fraction(int(np.count_nonzero(labels == int(o))), states) for o in DecodeOutcome]
        return ConflictReport(*mass, exact=True, states=states)
    honest = np.asarray(code.enc(key, rng).symbols, dtype=np.uint64)
    words = full_resample_words(np.tile(honest, (samples, 1)), code.q, rng)
    labels = code.dec_many(key, words)
    mass = [np.count_nonzero(labels == int(o)) / samples for o in DecodeOutcome]
    return ConflictReport(*mass, exact=False, states=samples)


@dataclass(frozen=True)
class RateEstimate:
    hits: int
    trials: int

    @property
    def rate(self) -> float:
        return self.hits / self.trials if self.trials else float("nan")

    @property
    def interval(self) -> tuple[float, float]:
        return wilson_interval(self.hits, self.trials)


def soundness_mc(code: MessagelessCode, trials: int, seed=0, key=None, pi: int = 0) -> RateEstimate:
    """Count uniform words that decode to anything but ``invalid``."""
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = make_rng(seed)
    key = code.kgen(rng) if key is None else key
    words = uniform_words(code.n, code.q, trials, rng)
    if isinstance(code, PrfWrappedCode):
        labels = code.dec_many(key, words, pi=pi)
    else:
        labels = code.dec_many(key, words)
    return RateEstimate(int(np.count_nonzero(labels != int(DecodeOutcome.INVALID))), trials)


def tamper_detect_mc(code: MessagelessCode, channel: TamperChannel, trials: int, seed=0, key=None) -> RateEstimate:
    """Changed words labelled ``tampered``; unchanged outputs are dropped from the count."""
    res = tamper_detection_trials(code, channel, trials, seed, key)
    return RateEstimate(res.counted - res.failures, res.counted)


SWEEP_COLUMNS = (
    "n", "q", "delta", "alpha", "budget", "trials",
    "worst_detect", "worst_lo", "worst_hi",
    "ind_beta", "ind_detect", "ind_lo", "ind_hi",
    "soundness", "snd_lo", "snd_hi", "seed",
)


def sweep_threshold(n: int, q: int, delta: float, alphas, trials: int, seed: int) -> list[dict]:
    """Tamper detection under exact-budget and calibrated independent tampering, plus soundness, per alpha."""
    code = HammingCode.build(n, q, delta)
    key = code.kgen(make_rng((seed, 0)))
    snd = soundness_mc(code, trials, (seed, 1), key)
    s_lo, s_hi = wilson_interval(snd.trials - snd.hits, snd.trials)
    rows = []
    for i, alpha in enumerate(alphas):
        if not 0 < alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
        budget = math.floor(alpha * n)
        worst = tamper_detect_mc(code, TamperChannel("worst", budget=budget), trials, (seed, 2, i), key)
        beta = min(1.0, alpha / (1 - 1 / q))
        ind = tamper_detect_mc(code, TamperChannel("ind", beta=beta), trials, (seed, 3, i), key)
        w_lo, w_hi = worst.interval if worst.trials else (1.0, 1.0)
        i_lo, i_hi = ind.interval if ind.trials else (1.0, 1.0)
        rows.append({
            "n": str(n), "q": str(q), "delta": f"{delta:g}", "alpha": f"{alpha:.6g}",
            "budget": str(budget), "trials": str(trials),
            "worst_detect": f"{worst.rate if worst.trials else 1.0:.6f}",
            "worst_lo": f"{w_lo:.6f}", "worst_hi": f"{w_hi:.6f}",
            "ind_beta": f"{beta:.6g}",
            "ind_detect": f"{ind.rate if ind.trials else 1.0:.6f}",
            "ind_lo": f"{i_lo:.6f}", "ind_hi": f"{i_hi:.6f}",
            "soundness": f"{1 - snd.rate:.6f}", "snd_lo": f"{s_lo:.6f}", "snd_hi": f"{s_hi:.6f}",
            "seed": str(seed),
        })
    return rows


def hamming_soundness_summary(code: HammingCode, est: RateEstimate) -> dict:
    p = code.params
    lo, hi = est.interval
    return {
        "nonvalid_rate": est.rate,
        "rate_lo": lo,
        "rate_hi": hi,
        "soundness_bound": soundness_bound(p.n, p.q, p.delta),
        "exact_nonvalid": exact_nonvalid_probability(p.n, p.q, p.delta),
    }
