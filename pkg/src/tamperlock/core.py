"""Shared types: alphabets, codewords, decode labels, RNG plumbing.

All randomness flows through :func:`make_rng`, which wraps numpy's Philox
counter-based bit generator. Passing an int seed (or a tuple of ints) gives a
bit-reproducible stream; passing an existing ``np.random.Generator`` reuses it.
"""
from __future__ import annotations

import abc
import enum
import itertools
import os
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

MAX_Q = 2**32
SYMBOL_DTYPE = np.uint32


class DimensionError(ValueError):
    """Codewords of different length or alphabet were combined."""


def make_rng(seed=None) -> np.random.Generator:
    """Return a Philox-backed generator.

    ``seed`` may be an int, a sequence of ints (hashed through SeedSequence so
    ``(master, trial)`` pairs give independent streams), an existing generator,
    or None for OS entropy. The length is hashed in too: SeedSequence pads
    with zeros, so ``3`` and ``(3, 0)`` would otherwise share a stream.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        return np.random.Generator(np.random.Philox())
    if isinstance(seed, (int, np.integer)):
        seed = [int(seed)]
    seed = [int(s) for s in seed]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([len(seed)] + seed)))



def write_secret(path, text: str) -> None:
    """Write key material readable only by the owner."""
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.chmod(path, 0o600)


def trial_rng(master: int, *index: int) -> np.random.Generator:
    """Per-trial stream derived from the master seed by counter."""
    return make_rng((int(master),) + tuple(int(i) for i in index))


@dataclass(frozen=True)
class Alphabet:
    q: int

    def __post_init__(self):
        if not 2 <= self.q <= MAX_Q:
            raise ValueError(f"alphabet size must be in [2, 2^32], got {self.q}")

    def __contains__(self, symbol) -> bool:
        return 0 <= int(symbol) < self.q


def _check_q(q: int) -> int:
    Alphabet(int(q))
    return int(q)


@dataclass(frozen=True, eq=False)
class Codeword:
    """A length-n vector over [0, q). The symbol array is read-only."""

    symbols: np.ndarray
    q: int

    def __post_init__(self):
        q = _check_q(self.q)
        arr = np.asarray(self.symbols)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("codeword must be a non-empty 1-d vector")
        if arr.dtype.kind not in "ui":
            raise TypeError(f"codeword symbols must be integers, got {arr.dtype}")
        if arr.size and (arr.min() < 0 or int(arr.max()) >= q):
            raise ValueError(f"symbols must lie in [0, {q})")
        arr = np.array(arr, dtype=SYMBOL_DTYPE)
        arr.setflags(write=False)
        object.__setattr__(self, "symbols", arr)
        object.__setattr__(self, "q", q)

    @property
    def n(self) -> int:
        return self.symbols.size

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, Codeword):
            return NotImplemented
        return self.q == other.q and np.array_equal(self.symbols, other.symbols)

    def __hash__(self):
        return hash((self.q, self.symbols.tobytes()))

    def __repr__(self):
        body = self.to_text() if self.n <= 16 else self.to_text()[:40] + "..."
        return f"Codeword(n={self.n}, q={self.q}, {body})"

    def to_text(self) -> str:
        return ":".join(str(int(s)) for s in self.symbols)

    @classmethod
    def from_text(cls, text: str, q: int) -> Codeword:
        parts = text.strip().split(":")
        return cls(np.array([int(p) for p in parts], dtype=np.int64), q)

    def to_hex(self) -> str:
        """Binary codewords only: ``<nbits>/<hex>`` with bits packed MSB-first."""
        if self.q != 2:
            raise ValueError("hex form is defined for binary codewords only")
        packed = np.packbits(self.symbols.astype(np.uint8))
        return f"{self.n}/{packed.tobytes().hex()}"

    @classmethod
    def from_hex(cls, text: str) -> Codeword:
        nbits, hexdigits = text.strip().split("/")
        bits = np.unpackbits(np.frombuffer(bytes.fromhex(hexdigits), dtype=np.uint8))
        return cls(bits[: int(nbits)], 2)


class DecodeOutcome(enum.IntEnum):
    VALID = 0
    INVALID = 1
    TAMPERED = 2

    def __str__(self):
        return self.name.lower()


@dataclass(frozen=True)
class SecurityParams:
    n: int
    q: int
    delta: float
    lam: int = 128

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        _check_q(self.q)
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie strictly between 0 and 1")


def hamming_distance(a: Codeword, b: Codeword) -> int:
    if a.n != b.n or a.q != b.q:
        raise DimensionError(f"cannot compare n={a.n},q={a.q} with n={b.n},q={b.q}")
    return int(np.count_nonzero(a.symbols != b.symbols))


def uniform_codeword(n: int, q: int, seed=None) -> Codeword:
    if n < 1:
        raise ValueError("n must be positive")
    q = _check_q(q)
    rng = make_rng(seed)
    return Codeword(rng.integers(0, q, size=n, dtype=np.uint64), q)


def uniform_words(n: int, q: int, count: int, rng) -> np.ndarray:
    """``count`` uniform words as a (count, n) array; the batch form of uniform_codeword."""
    return make_rng(rng).integers(0, q, size=(count, n), dtype=np.uint64)


def all_words(n: int, q: int) -> np.ndarray:
    """Every word of Σⁿ, lexicographic, as a (qⁿ, n) array."""
    if q**n > 2**22:
        raise ValueError(f"{q}^{n} words is too many to enumerate")
    return np.array(list(itertools.product(range(q), repeat=n)), dtype=np.uint64).reshape(-1, n)


class MessagelessCode(abc.ABC):
    """Keyed code without payload: ``dec`` sorts words into valid/invalid/tampered.

    Subclasses set ``n`` and ``q``; ``deterministic`` marks codes whose encoder
    ignores its randomness (the PRF upgrade needs one).
    """

    n: int
    q: int
    deterministic: bool = False

    @abc.abstractmethod
    def kgen(self, seed=None) -> Any: ...

    @abc.abstractmethod
    def enc(self, key, seed=None) -> Codeword: ...

    @abc.abstractmethod
    def dec(self, key, gamma: Codeword) -> DecodeOutcome: ...

    def dec_many(self, key, words: np.ndarray) -> np.ndarray:
        """Labels for each row of ``words`` as an int array of DecodeOutcome values."""
        words = np.asarray(words)
        return np.array([int(self.dec(key, Codeword(w, self.q))) for w in words], dtype=np.int8)

    def _check_word(self, gamma: Codeword):
        if gamma.n != self.n or gamma.q != self.q:
            raise DimensionError(
                f"expected a word with n={self.n}, q={self.q}; got n={gamma.n}, q={gamma.q}"
            )


def label_counts(labels: Sequence[int]) -> dict[DecodeOutcome, int]:
    labels = np.asarray(labels)
    return {o: int(np.count_nonzero(labels == int(o))) for o in DecodeOutcome}
