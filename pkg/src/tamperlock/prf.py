"""PRF masking under a public, never-reused counter.

The PRF is HMAC-SHA256 in counter mode::

    block_i = HMAC-SHA256(kappa, b"tamperlock/prf" || u64be(pi) || u32be(i))

Concatenated blocks are read MSB-first as a bit stream and cut into
``w = bitlength(q-1)`` bit chunks; chunks >= q are rejected, so every accepted
symbol is exactly uniform on [0, q). For q a power of two nothing is rejected.
"""
from __future__ import annotations

import fcntl
import hashlib
import hmac
import os
import re
import secrets
import struct
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Codeword, DecodeOutcome, DimensionError, MessagelessCode, make_rng

_DOMAIN = b"tamperlock/prf"
_BLOCK = hashlib.sha256().digest_size
COUNTER_MAGIC = "TAMPERLOCK-CTR v1"


class CounterError(RuntimeError):
    """The counter could not be durably advanced; no value was issued."""


@dataclass(frozen=True)
class PrfKey:
    kappa: bytes

    def __post_init__(self):
        if len(self.kappa) < 16:
            raise ValueError("PRF key must be at least 128 bits")

    @classmethod
    def generate(cls, lam: int = 128, seed=None) -> PrfKey:
        """Fresh key of ``lam`` bits. With a seed the key is reproducible (tests, demos)."""
        if lam % 8:
            raise ValueError("lam must be a multiple of 8")
        if seed is None:
            return cls(secrets.token_bytes(lam // 8))
        return cls(make_rng(seed).bytes(lam // 8))


def _stream(kappa: bytes, pi: int, nbytes: int, start_block: int = 0) -> bytes:
    prefix = _DOMAIN + struct.pack(">Q", pi)
    nblocks = -(-nbytes // _BLOCK)
    out = b"".join(
        hmac.new(kappa, prefix + struct.pack(">I", start_block + i), hashlib.sha256).digest()
        for i in range(nblocks)
    )
    return out[:nbytes]


def prf_expand(kappa: PrfKey | bytes, pi: int, out_len: int, q: int) -> np.ndarray:
    """Deterministic pad of ``out_len`` symbols over [0, q) keyed by (kappa, pi)."""
    if out_len < 1:
        raise ValueError("out_len must be positive")
    if not 0 <= pi < 2**64:
        raise ValueError("counter value must fit in 64 bits")
    key = kappa.kappa if isinstance(kappa, PrfKey) else bytes(kappa)
    width = max(1, (q - 1).bit_length())
    weights = np.left_shift(np.uint64(1), np.arange(width - 1, -1, -1, dtype=np.uint64))

    symbols: list[np.ndarray] = []
    have = 0
    block = 0
    leftover = np.zeros(0, dtype=np.uint8)
    while have < out_len:
        # Enough blocks for the remaining symbols at worst-case acceptance 1/2.
        need_bits = 2 * (out_len - have) * width + 64
        nblocks = -(-need_bits // (8 * _BLOCK))
        raw = _stream(key, pi, nblocks * _BLOCK, start_block=block)
        block += nblocks
        bits = np.concatenate([leftover, np.unpackbits(np.frombuffer(raw, dtype=np.uint8))])
        usable = bits.size - bits.size % width
        leftover = bits[usable:]
        chunks = bits[:usable].reshape(-1, width).astype(np.uint64) @ weights
        accepted = chunks[chunks < q]
        symbols.append(accepted)
        have += accepted.size
    return np.concatenate(symbols)[:out_len]


@dataclass(frozen=True)
class MaskedCodeword:
    body: Codeword
    pi: int

    def to_wire(self) -> str:
        return f"pi={self.pi};{self.body.to_text()}"

    @classmethod
    def from_wire(cls, text: str, q: int) -> MaskedCodeword:
        m = re.fullmatch(r"pi=(\d+);([0-9:]+)", text.strip())
        if not m:
            raise ValueError(f"malformed masked codeword: {text[:40]!r}")
        return cls(Codeword.from_text(m.group(2), q), int(m.group(1)))


def mask(kappa, pi: int, gamma: Codeword, prf=prf_expand) -> MaskedCodeword:
    pad = np.asarray(prf(kappa, pi, gamma.n, gamma.q), dtype=np.uint64)
    body = (gamma.symbols.astype(np.uint64) + pad) % np.uint64(gamma.q)
    return MaskedCodeword(Codeword(body, gamma.q), pi)


def unmask(kappa, pi: int, masked: MaskedCodeword, prf=prf_expand) -> Codeword:
    if masked.pi != pi:
        raise ValueError(f"masked word carries pi={masked.pi}, asked to unmask with {pi}")
    body = masked.body
    pad = np.asarray(prf(kappa, pi, body.n, body.q), dtype=np.uint64)
    q = np.uint64(body.q)
    return Codeword((body.symbols.astype(np.uint64) + q - pad) % q, body.q)


def _fsync_dir(path: Path) -> None:
    fd = os.open(path, os.O_RDONLY)
    try:
        os.fsync(fd)
    finally:
        os.close(fd)


class CounterStore:
    """File-backed monotone counter.

    The file holds the next value to issue. ``next()`` persists ``value + 1``
    (temp file, fsync, atomic rename, directory fsync) before returning
    ``value``, so a crash anywhere can skip values but never repeat one. An
    advisory ``flock`` on a sidecar lock file serialises issuers.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock_path = self.path.with_name(self.path.name + ".lock")
        if not self.path.exists():
            with self._locked():
                if not self.path.exists():
                    self._persist(0)

    @contextmanager
    def _locked(self):
        with open(self._lock_path, "a") as fh:
            fcntl.flock(fh, fcntl.LOCK_EX)
            try:
                yield
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)

    def _read(self) -> int:
        try:
            text = self.path.read_text()
        except OSError as exc:
            raise CounterError(f"cannot read counter {self.path}: {exc}") from exc
        m = re.fullmatch(re.escape(COUNTER_MAGIC) + r" next=(\d+)\n?", text)
        if not m:
            raise CounterError(f"corrupt counter file {self.path}")
        return int(m.group(1))

    def _persist(self, value: int) -> None:
        tmp = self.path.with_name(f".{self.path.name}.{os.getpid()}.tmp")
        try:
            with open(tmp, "w") as fh:
                fh.write(f"{COUNTER_MAGIC} next={value}\n")
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.path)
            _fsync_dir(self.path.parent)
        except OSError as exc:
            raise CounterError(f"cannot persist counter {self.path}: {exc}") from exc
        finally:
            if tmp.exists():
                tmp.unlink()

    def peek(self) -> int:
        return self._read()

    def next(self) -> int:
        with self._locked():
            value = self._read()
            if value >= 2**64 - 1:
                raise CounterError("counter exhausted")
            self._persist(value + 1)
            return value


def counter_next(store: CounterStore) -> int:
    return store.next()


@dataclass(frozen=True)
class WrappedKey:
    inner: object
    kappa: PrfKey


class PrfWrappedCode(MessagelessCode):
    """Masks a deterministic code's output with F(kappa, pi) under a fresh counter value.

    Codewords are :class:`MaskedCodeword` (body plus public pi). Since masking
    is a bijection for each pi, every label statistic of the inner code carries
    over exactly.
    """

    def __init__(self, inner: MessagelessCode, kappa: PrfKey, store: CounterStore):
        if not inner.deterministic:
            raise ValueError("the PRF upgrade needs an inner code with a deterministic encoder")
        self.inner, self.kappa, self.store = inner, kappa, store
        self.n, self.q = inner.n, inner.q

    def kgen(self, seed=None) -> WrappedKey:
        return WrappedKey(self.inner.kgen(seed), self.kappa)

    def enc(self, key: WrappedKey, seed=None) -> MaskedCodeword:
        pi = counter_next(self.store)
        return mask(key.kappa, pi, self.inner.enc(key.inner))

    def dec(self, key: WrappedKey, gamma: MaskedCodeword) -> DecodeOutcome:
        if gamma.body.n != self.n or gamma.body.q != self.q:
            raise DimensionError("masked word does not match the code dimensions")
        return self.inner.dec(key.inner, unmask(key.kappa, gamma.pi, gamma))

    def dec_many(self, key: WrappedKey, words: np.ndarray, pi: int = 0) -> np.ndarray:
        """Labels for masked bodies that all carry the same counter value ``pi``."""
        pad = prf_expand(key.kappa, pi, self.n, self.q)
        q = np.uint64(self.q)
        plain = (np.asarray(words, dtype=np.uint64) + q - pad) % q
        return self.inner.dec_many(key.inner, plain)


def wrap_code(inner: MessagelessCode, kappa: PrfKey, store: CounterStore) -> PrfWrappedCode:
    return PrfWrappedCode(inner, kappa, store)
