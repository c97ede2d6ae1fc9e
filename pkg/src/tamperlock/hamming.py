"""Secret key as codeword, labels by Hamming distance to the key.

The decoder threshold ``t = n(1-1/q)(1-delta)`` is compared exactly: since the
distance is an integer, ``dist <= t`` iff ``dist <= floor(t)``, and ``floor(t)``
is computed in rational arithmetic from the binary value of ``delta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import stats

from .core import (
    Codeword,
    DecodeOutcome,
    MessagelessCode,
    SecurityParams,
    make_rng,
    uniform_codeword,
    write_secret,
)

KEY_MAGIC = "TAMPERLOCK-HK v1"


def _check(n, q, delta, *, open_delta=True):
    if n < 1 or q < 2:
        raise ValueError("need n >= 1 and q >= 2")
    lo_ok = delta > 0 if open_delta else delta >= 0
    if not (lo_ok and delta < 1):
        raise ValueError(f"delta out of range: {delta}")


def threshold(n: int, q: int, delta: float) -> float:
    _check(n, q, delta)
    return n * (1 - 1 / q) * (1 - delta)


def exact_threshold(n: int, q: int, delta: float) -> Fraction:
    _check(n, q, delta)
    return Fraction(n * (q - 1), q) * (1 - Fraction(delta))


def soundness_bound(n: int, q: int, delta: float) -> float:
    """Chernoff bound exp(-delta^2 n / (2q)) on a uniform word escaping ``invalid``."""
    _check(n, q, delta, open_delta=False)
    return math.exp(-(delta**2) * n / (2 * q))


def impossibility_bound(n: int, q: int, delta: float) -> float:
    """exp(-delta^2 n (1-1/q) / 3): chance full resampling changes more than (1+delta)n(1-1/q) symbols."""
    _check(n, q, delta, open_delta=False)
    return math.exp(-(delta**2) * n * (1 - 1 / q) / 3)


def exact_nonvalid_probability(n: int, q: int, delta: float) -> float:
    """P[uniform word decodes to something other than invalid] = P[Bin(n, 1-1/q) <= floor t]."""
    t_floor = math.floor(exact_threshold(n, q, delta))
    return float(stats.binom.cdf(t_floor, n, 1 - 1 / q))


def exact_resample_excess_probability(n: int, q: int, delta: float) -> float:
    """P[Bin(n, 1-1/q) > (1+delta) n (1-1/q)], the event impossibility_bound controls."""
    limit = Fraction(n * (q - 1), q) * (1 + Fraction(delta))
    return float(stats.binom.sf(math.floor(limit), n, 1 - 1 / q))


@dataclass(frozen=True)
class HammingCodeKey:
    sk: Codeword
    params: SecurityParams

    @property
    def t(self) -> float:
        return threshold(self.params.n, self.params.q, self.params.delta)

    @property
    def t_floor(self) -> int:
        return math.floor(exact_threshold(self.params.n, self.params.q, self.params.delta))


class HammingCode(MessagelessCode):
    """kgen samples sk uniformly; enc returns sk; dec thresholds dist(gamma, sk)."""

    deterministic = True

    def __init__(self, params: SecurityParams):
        self.params = params
        self.n, self.q = params.n, params.q

    @classmethod
    def build(cls, n: int, q: int | None = None, delta: float = 0.5) -> HammingCode:
        """``q`` defaults to n**2, the smallest polynomial alphabet the soundness proof targets."""
        return cls(SecurityParams(n=n, q=n * n if q is None else q, delta=delta))

    def __repr__(self):
        p = self.params
        return f"HammingCode(n={p.n}, q={p.q}, delta={p.delta})"

    def kgen(self, seed=None) -> HammingCodeKey:
        return HammingCodeKey(uniform_codeword(self.n, self.q, make_rng(seed)), self.params)

    def enc(self, key: HammingCodeKey, seed=None) -> Codeword:
        return Codeword(key.sk.symbols.copy(), key.sk.q)

    def dec(self, key: HammingCodeKey, gamma: Codeword) -> DecodeOutcome:
        self._check_word(gamma)
        dist = int(np.count_nonzero(gamma.symbols != key.sk.symbols))
        if dist == 0:
            return DecodeOutcome.VALID
        if dist <= key.t_floor:
            return DecodeOutcome.TAMPERED
        return DecodeOutcome.INVALID

    def dec_many(self, key: HammingCodeKey, words: np.ndarray) -> np.ndarray:
        words = np.asarray(words)
        if words.ndim != 2 or words.shape[1] != self.n:
            raise ValueError(f"expected shape (k, {self.n}), got {words.shape}")
        dist = np.count_nonzero(words != key.sk.symbols, axis=1)
        labels = np.full(dist.shape, int(DecodeOutcome.INVALID), dtype=np.int8)
        labels[dist <= key.t_floor] = int(DecodeOutcome.TAMPERED)
        labels[dist == 0] = int(DecodeOutcome.VALID)
        return labels


def save_key(key: HammingCodeKey, path) -> None:
    """Write a key file readable only by the owner (the key is the honest codeword)."""
    p = key.params
    text = f"{KEY_MAGIC} n={p.n} q={p.q} delta={p.delta!r}\n{key.sk.to_text()}\n"
    write_secret(path, text)


def load_key(path) -> HammingCodeKey:
    header, body = Path(path).read_text().splitlines()[:2]
    if not header.startswith(KEY_MAGIC + " "):
        raise ValueError(f"not a {KEY_MAGIC} key file")
    fields = dict(item.split("=", 1) for item in header[len(KEY_MAGIC) + 1 :].split())
    params = SecurityParams(n=int(fields["n"]), q=int(fields["q"]), delta=float(fields["delta"]))
    sk = Codeword.from_text(body, params.q)
    if sk.n != params.n:
        raise ValueError("key length does not match header")
    return HammingCodeKey(sk, params)
