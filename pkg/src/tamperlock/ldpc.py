"""Zero-bit pseudorandom code from sparse parity checks, with a sum-product decoder.

A key holds a sparse parity-check matrix H and a secret pad. Encoding samples
a uniform x with Hx = 0 over GF(2) and outputs x XOR pad; detection counts the
checks satisfied by (bits XOR pad) and turns the count into a z-score against
the Bin(r, 1/2) null.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .core import make_rng, write_secret
from .prf import PrfKey, prf_expand

MATRIX_MAGIC = "TAMPERLOCK-H v1"
DEFAULT_N = 512
DEFAULT_ROW_WEIGHT = 6
DEFAULT_MAX_ITERS = 100
DEFAULT_THRESHOLD = 4.0
DEFAULT_BP_PRIOR = 0.15


def default_rows(n: int) -> int:
    return math.ceil(n / 4)


@dataclass(frozen=True, eq=False)
class ParityMatrix:
    n: int
    rows: np.ndarray  # (r, w) column indices, sorted within each row

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.int64)
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise ValueError("rows must be a non-empty (r, w) array")
        if rows.min() < 0 or rows.max() >= self.n:
            raise ValueError("column index out of range")
        srt = np.sort(rows, axis=1)
        if np.any(srt[:, 1:] == srt[:, :-1]):
            raise ValueError("a row repeats a column index")
        srt.setflags(write=False)
        object.__setattr__(self, "rows", srt)

    @property
    def num_checks(self) -> int:
        return self.rows.shape[0]

    @property
    def row_weight(self) -> int:
        return self.rows.shape[1]

    def __eq__(self, other):
        return isinstance(other, ParityMatrix) and self.n == other.n and np.array_equal(self.rows, other.rows)

    def __hash__(self):
        return hash((self.n, self.rows.tobytes()))

    def dense(self) -> np.ndarray:
        H = np.zeros((self.num_checks, self.n), dtype=np.uint8)
        H[np.arange(self.num_checks)[:, None], self.rows] = 1
        return H

    def syndrome(self, bits: np.ndarray) -> np.ndarray:
        """Parity of every check; works on (n,) or (k, n) inputs."""
        bits = np.asarray(bits, dtype=np.uint8)
        return np.bitwise_xor.reduce(bits[..., self.rows], axis=-1)

    def column_degrees(self) -> np.ndarray:
        return np.bincount(self.rows.ravel(), minlength=self.n)

    def to_text(self) -> str:
        head = f"{MATRIX_MAGIC} n={self.n} r={self.num_checks} w={self.row_weight}\n"
        return head + "".join(" ".join(map(str, row)) + "\n" for row in self.rows)

    @classmethod
    def from_text(cls, text: str) -> ParityMatrix:
        lines = text.strip().splitlines()
        if not lines[0].startswith(MATRIX_MAGIC + " "):
            raise ValueError(f"not a {MATRIX_MAGIC} matrix file")
        hdr = dict(kv.split("=") for kv in lines[0][len(MATRIX_MAGIC) + 1 :].split())
        rows = np.array([[int(v) for v in ln.split()] for ln in lines[1:]], dtype=np.int64)
        mat = cls(int(hdr["n"]), rows)
        if mat.num_checks != int(hdr["r"]) or mat.row_weight != int(hdr["w"]):
            raise ValueError("matrix body does not match header")
        return mat

    def save(self, path) -> None:
        """The matrix is the detection key; the file is owner-only."""
        write_secret(path, self.to_text())

    @classmethod
    def load(cls, path) -> ParityMatrix:
        return cls.from_text(Path(path).read_text())

    @property
    def matrix_id(self) -> int:
        return int.from_bytes(hashlib.sha256(self.to_text().encode()).digest()[:8], "big")


def gen_parity(n: int, r: int, row_weight: int, seed=None) -> ParityMatrix:
    if row_weight < 3:
        raise ValueError("row_weight must be at least 3")
    if not 1 <= r <= n / 2:
        raise ValueError(f"need 1 <= r <= n/2, got r={r}, n={n}")
    if row_weight > n:
        raise ValueError("row_weight exceeds block length")
    rng = make_rng(seed)
    rows = np.stack([rng.choice(n, size=row_weight, replace=False) for _ in range(r)])
    return ParityMatrix(n, rows)


class _NullSpace:
    """Reduced row echelon form of H, for sampling uniform solutions of Hx = 0."""

    def __init__(self, H: np.ndarray):
        A = H.copy()
        m, n = A.shape
        pivots = []
        row = 0
        for col in range(n):
            if row >= m:
                break
            nz = np.flatnonzero(A[row:, col])
            if nz.size == 0:
                continue
            p = row + nz[0]
            if p != row:
                A[[row, p]] = A[[p, row]]
            others = np.flatnonzero(A[:, col])
            others = others[others != row]
            A[others] ^= A[row]
            pivots.append(col)
            row += 1
        self.rank = len(pivots)
        self.pivots = np.array(pivots, dtype=np.int64)
        mask = np.ones(n, dtype=bool)
        mask[self.pivots] = False
        self.free = np.flatnonzero(mask)
        # pivot_i = sum_j A[i, free_j] * free_j  (mod 2)
        self.coupling = A[: self.rank][:, self.free].astype(np.int64)
        self.n = n

    @property
    def dimension(self) -> int:
        return self.n - self.rank

    def sample(self, rng, count: int = 1) -> np.ndarray:
        x = np.zeros((count, self.n), dtype=np.uint8)
        free_bits = rng.integers(0, 2, size=(count, self.free.size), dtype=np.int64)
        x[:, self.free] = free_bits
        x[:, self.pivots] = (free_bits @ self.coupling.T) & 1
        return x


@dataclass(frozen=True, eq=False)
class PrcKey:
    H: ParityMatrix
    pad: np.ndarray
    detect_threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if self.detect_threshold <= 0:
            raise ValueError("detect_threshold must be positive")
        pad = np.array(self.pad, dtype=np.uint8)
        if pad.shape != (self.H.n,):
            raise ValueError("pad length must equal block length")
        pad.setflags(write=False)
        object.__setattr__(self, "pad", pad)

    @property
    def n(self) -> int:
        return self.H.n

    @cached_property
    def nullspace(self) -> _NullSpace:
        return _NullSpace(self.H.dense())

    @classmethod
    def from_prf(cls, H: ParityMatrix, kappa: PrfKey, detect_threshold: float = DEFAULT_THRESHOLD) -> PrcKey:
        """Pad = F(kappa, matrix_id) truncated to n bits."""
        return cls(H, prf_expand(kappa, H.matrix_id, H.n, 2), detect_threshold)

    @classmethod
    def generate(
        cls,
        n: int = DEFAULT_N,
        r: int | None = None,
        row_weight: int = DEFAULT_ROW_WEIGHT,
        seed=None,
        detect_threshold: float = DEFAULT_THRESHOLD,
    ) -> PrcKey:
        rng = make_rng(seed)
        H = gen_parity(n, default_rows(n) if r is None else r, row_weight, rng)
        return cls.from_prf(H, PrfKey.generate(seed=rng), detect_threshold)


def prc_encode(key: PrcKey, seed=None) -> np.ndarray:
    return prc_encode_many(key, 1, seed)[0]


def prc_encode_many(key: PrcKey, count: int, seed=None) -> np.ndarray:
    return key.nullspace.sample(make_rng(seed), count) ^ key.pad


def detection_scores(key: PrcKey, bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape[-1] != key.n:
        raise ValueError(f"expected {key.n} bits, got {bits.shape[-1]}")
    r = key.H.num_checks
    satisfied = r - key.H.syndrome(bits ^ key.pad).sum(axis=-1, dtype=np.int64)
    return (satisfied - r / 2) / math.sqrt(r / 4)


def prc_detect(key: PrcKey, bits: np.ndarray) -> tuple[float, bool]:
    score = float(detection_scores(key, bits))
    return score, score >= key.detect_threshold


def bsc(bits: np.ndarray, flip_rate: float, seed=None) -> np.ndarray:
    if not 0.0 <= flip_rate <= 1.0:
        raise ValueError(f"flip_rate must lie in [0, 1], got {flip_rate}")
    bits = np.asarray(bits, dtype=np.uint8)
    flips = make_rng(seed).random(bits.shape) < flip_rate
    return bits ^ flips.astype(np.uint8)


@dataclass
class BpResult:
    corrected: np.ndarray
    converged: bool
    iterations_used: int

    def post_error_vs(self, reference: np.ndarray) -> float:
        return float(np.mean(self.corrected != np.asarray(reference, dtype=np.uint8)))


def _leave_one_out_product(t: np.ndarray) -> np.ndarray:
    """Product over the last axis excluding each position, without division."""
    ones = np.ones(t.shape[:-1] + (1,), dtype=t.dtype)
    prefix = np.cumprod(np.concatenate([ones, t[..., :-1]], axis=-1), axis=-1)
    suffix = np.cumprod(np.concatenate([ones, t[..., :0:-1]], axis=-1), axis=-1)[..., ::-1]
    return prefix * suffix


def bp_decode_many(
    key: PrcKey,
    words: np.ndarray,
    max_iters: int = DEFAULT_MAX_ITERS,
    prior: float = DEFAULT_BP_PRIOR,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sum-product decoding of a (k, n) batch.

    Returns ``(corrected, converged, iterations)``; each row freezes at the
    first iteration where its hard decision satisfies every check.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    if not 0.0 < prior < 0.5:
        raise ValueError("prior flip rate must lie in (0, 1/2)")
    words = np.atleast_2d(np.asarray(words, dtype=np.uint8))
    H = key.H
    rows = H.rows
    k = words.shape[0]
    y = words ^ key.pad
    llr = math.log((1 - prior) / prior) * (1.0 - 2.0 * y)  # positive -> bit 0

    out = y.copy()
    iters = np.zeros(k, dtype=np.int64)
    done = ~H.syndrome(y).any(axis=1)

    vc = llr[:, rows]  # variable -> check messages, (k, r, w)
    scatter = (rows.ravel()[None, :] + H.n * np.arange(k)[:, None]).ravel()
    for it in range(1, max_iters + 1):
        if done.all():
            break
        t = np.tanh(np.clip(vc, -40.0, 40.0) / 2)
        ext = np.clip(_leave_one_out_product(t), -1 + 1e-15, 1 - 1e-15)
        cv = 2.0 * np.arctanh(ext)
        post = llr + np.bincount(scatter, weights=cv.ravel(), minlength=k * H.n).reshape(k, H.n)
        hard = (post < 0).astype(np.uint8)
        fresh = ~done & ~H.syndrome(hard).any(axis=1)
        live = ~done
        out[live] = hard[live]
        iters[live] = it
        done |= fresh
        vc = post[:, rows] - cv
    return out ^ key.pad, done, iters


def bp_decode(key: PrcKey, bits: np.ndarray, max_iters: int = DEFAULT_MAX_ITERS, prior: float = DEFAULT_BP_PRIOR) -> BpResult:
    corrected, converged, iters = bp_decode_many(key, np.asarray(bits)[None, :], max_iters, prior)
    return BpResult(corrected[0], bool(converged[0]), int(iters[0]))
