"""Length-preserving tampering channels.

Every channel has a scalar form acting on a :class:`Codeword` and a batch form
(``*_words``) acting on a (k, n) array, which the Monte Carlo harnesses use.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import Codeword, DimensionError, hamming_distance, make_rng

STRATEGIES = ("random_positions", "prefix", "adversarial_callback")


def resample_words(words: np.ndarray, q: int, beta: float, rng) -> np.ndarray:
    """Each entry independently replaced, w.p. beta, by a uniform symbol (possibly the same one)."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    rng = make_rng(rng)
    words = np.asarray(words, dtype=np.uint64)
    fresh = rng.integers(0, q, size=words.shape, dtype=np.uint64)
    if beta >= 1.0:
        return fresh
    hit = rng.random(words.shape) < beta
    return np.where(hit, fresh, words)


def independent_resample(gamma: Codeword, beta: float, seed=None) -> Codeword:
    return Codeword(resample_words(gamma.symbols[None, :], gamma.q, beta, seed)[0], gamma.q)


def full_resample(gamma: Codeword, seed=None) -> Codeword:
    """Every position resampled uniformly: the output is uniform on Σⁿ whatever the input."""
    return independent_resample(gamma, 1.0, seed)


def full_resample_words(words: np.ndarray, q: int, rng) -> np.ndarray:
    return resample_words(words, q, 1.0, rng)


def _shift_symbols(values: np.ndarray, q: int, rng) -> np.ndarray:
    """Replace each value by a uniformly chosen *different* symbol."""
    offset = rng.integers(1, q, size=values.shape, dtype=np.uint64)
    return (values.astype(np.uint64) + offset) % np.uint64(q)


def worst_case_flip(
    gamma: Codeword,
    budget: int,
    strategy: str = "random_positions",
    seed=None,
    callback: Callable | None = None,
) -> Codeword:
    """Change exactly ``budget`` positions to symbols different from the original.

    ``adversarial_callback`` hands ``(gamma, budget, rng)`` to ``callback``,
    which returns the tampered word; it must still differ in exactly
    ``budget`` positions, which is checked.
    """
    n, q = gamma.n, gamma.q
    if not 0 <= budget <= n:
        raise ValueError(f"budget must lie in [0, {n}], got {budget}")
    rng = make_rng(seed)
    if strategy == "adversarial_callback":
        if callback is None:
            raise ValueError("adversarial_callback strategy needs a callback")
        out = callback(gamma, budget, rng)
        if not isinstance(out, Codeword):
            out = Codeword(np.asarray(out), q)
        if out.n != n or hamming_distance(out, gamma) != budget:
            raise ValueError("callback must change exactly `budget` positions")
        return out
    if strategy == "random_positions":
        pos = rng.choice(n, size=budget, replace=False)
    elif strategy == "prefix":
        pos = np.arange(budget)
    else:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    out = gamma.symbols.astype(np.uint64)
    out[pos] = _shift_symbols(out[pos], q, rng)
    return Codeword(out, q)


def worst_case_flip_words(words: np.ndarray, q: int, budget: int, rng) -> np.ndarray:
    """Batch random-positions flip: each row gets exactly ``budget`` changed positions."""
    rng = make_rng(rng)
    words = np.array(words, dtype=np.uint64)
    k, n = words.shape
    if not 0 <= budget <= n:
        raise ValueError(f"budget must lie in [0, {n}], got {budget}")
    if budget == 0:
        return words
    pos = np.argsort(rng.random((k, n)), axis=1)[:, :budget]
    rows = np.arange(k)[:, None]
    words[rows, pos] = _shift_symbols(words[rows, pos], q, rng)
    return words


def realized_change_fraction(original: Codeword, tampered: Codeword) -> float:
    return hamming_distance(original, tampered) / original.n


@dataclass(frozen=True)
class TamperChannel:
    """A named channel family member: ``ind``, ``full``, ``worst`` or ``const``."""

    kind: str
    beta: float = 0.0
    budget: int = 0
    strategy: str = "random_positions"
    target: Codeword | None = None
    callback: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("ind", "full", "worst", "const"):
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if self.kind == "const" and self.target is None:
            raise ValueError("constant channel needs a target")

    def declared_alpha(self, n: int, q: int) -> float:
        """Expected (ind/full) or exact (worst) change fraction; const has no fixed budget."""
        if self.kind == "ind":
            return self.beta * (1 - 1 / q)
        if self.kind == "full":
            return 1 - 1 / q
        if self.kind == "worst":
            return self.budget / n
        return float("nan")

    def __call__(self, gamma: Codeword, seed=None) -> Codeword:
        if self.kind == "ind":
            return independent_resample(gamma, self.beta, seed)
        if self.kind == "full":
            return full_resample(gamma, seed)
        if self.kind == "worst":
            return worst_case_flip(gamma, self.budget, self.strategy, seed, self.callback)
        if self.target.n != gamma.n:
            raise DimensionError("constant channel must be length-preserving")
        return self.target

    def apply_words(self, words: np.ndarray, q: int, rng) -> np.ndarray:
        if self.kind == "ind":
            return resample_words(words, q, self.beta, rng)
        if self.kind == "full":
            return full_resample_words(words, q, rng)
        if self.kind == "worst" and self.strategy == "random_positions":
            return worst_case_flip_words(words, q, self.budget, rng)
        if self.kind == "const":
            return np.broadcast_to(self.target.symbols.astype(np.uint64), np.shape(words)).copy()
        rng = make_rng(rng)
        return np.stack([self(Codeword(w, q), rng).symbols for w in np.asarray(words)])

    def spec(self) -> str:
        if self.kind == "ind":
            return f"ind:beta={self.beta:g}"
        if self.kind == "full":
            return "full"
        if self.kind == "worst":
            return f"worst:budget={self.budget}:strategy={self.strategy.split('_')[0]}"
        return f"const:{self.target.to_text()}"


def constant_channel(target: Codeword) -> TamperChannel:
    return TamperChannel("const", target=target)


_STRATEGY_ALIASES = {"random": "random_positions", "prefix": "prefix", "callback": "adversarial_callback"}


def parse_channel(text: str, q: int | None = None) -> TamperChannel:
    """Parse CLI channel specs: ``ind:beta=0.5``, ``full``, ``worst:budget=32:strategy=random``, ``const:0:1:1``."""
    kind, _, rest = text.strip().partition(":")
    if kind == "full" and not rest:
        return TamperChannel("full")
    if kind == "const":
        if q is None:
            raise ValueError("const channel needs the alphabet size")
        return constant_channel(Codeword.from_text(rest, q))
    opts = dict(item.split("=", 1) for item in rest.split(":") if item)
    if kind == "ind":
        return TamperChannel("ind", beta=float(opts["beta"]))
    if kind == "worst":
        strategy = opts.get("strategy", "random")
        strategy = _STRATEGY_ALIASES.get(strategy, strategy)
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {strategy!r}")
        return TamperChannel("worst", budget=int(opts["budget"]), strategy=strategy)
    raise ValueError(f"cannot parse channel spec {text!r}")
