"""Multi-message codes, the error-correction experiment, and message fixing.

Fixing one message of an error-correcting multi-message code gives a
messageless code whose decoder says ``valid`` exactly when the inner decoder
recovers that message, and ``invalid`` otherwise. Recovery of a tampered word
therefore surfaces as ``valid``; the messageless experiments below take the
set of labels that count as "detected" as a parameter for that reason.
"""
from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .channels import TamperChannel
from .core import Codeword, DecodeOutcome, DimensionError, MessagelessCode, make_rng
from .ldpc import (
    DEFAULT_BP_PRIOR,
    DEFAULT_MAX_ITERS,
    DEFAULT_N,
    DEFAULT_ROW_WEIGHT,
    DEFAULT_THRESHOLD,
    PrcKey,
    bp_decode_many,
    detection_scores,
    prc_encode,
)

Message = tuple


class MultiMessageCode(abc.ABC):
    """Keyed code carrying a message in Σ^m; dec returns the message or a failure label."""

    n: int
    q: int
    m: int

    @abc.abstractmethod
    def kgen(self, seed=None): ...

    @abc.abstractmethod
    def enc(self, key, mu: Message, seed=None) -> Codeword: ...

    @abc.abstractmethod
    def dec(self, key, gamma: Codeword) -> Message | DecodeOutcome: ...

    def dec_many(self, key, words: np.ndarray) -> list:
        return [self.dec(key, Codeword(w, self.q)) for w in np.asarray(words)]

    def check_message(self, mu) -> Message:
        mu = tuple(int(s) for s in mu)
        if len(mu) != self.m or any(not 0 <= s < self.q for s in mu):
            raise DimensionError(f"message {mu} is not in Σ^{self.m} with q={self.q}")
        return mu


class PrcMessageCode(MultiMessageCode):
    """Binary messages of m bits, one independent zero-bit PRC key per message.

    Decoding runs BP under every message key and returns the message whose
    BP output clears the detection threshold with the highest score, or
    ``invalid`` when none does. Exponential in m; meant for m of 1 or 2.
    """

    q = 2

    def __init__(
        self,
        m: int = 1,
        n: int = DEFAULT_N,
        r: int | None = None,
        row_weight: int = DEFAULT_ROW_WEIGHT,
        detect_threshold: float = DEFAULT_THRESHOLD,
        max_iters: int = DEFAULT_MAX_ITERS,
        bp_prior: float = DEFAULT_BP_PRIOR,
    ):
        if not 1 <= m <= 4:
            raise ValueError("PrcMessageCode supports 1 to 4 message bits")
        self.m, self.n, self.r, self.row_weight = m, n, r, row_weight
        self.detect_threshold = detect_threshold
        self.max_iters, self.bp_prior = max_iters, bp_prior

    def _index(self, mu) -> int:
        return int("".join(map(str, self.check_message(mu))), 2)

    def _message(self, index: int) -> Message:
        return tuple(int(b) for b in format(index, f"0{self.m}b"))

    def kgen(self, seed=None) -> tuple[PrcKey, ...]:
        rng = make_rng(seed)
        return tuple(
            PrcKey.generate(self.n, self.r, self.row_weight, rng, self.detect_threshold)
            for _ in range(2**self.m)
        )

    def enc(self, key, mu, seed=None) -> Codeword:
        return Codeword(prc_encode(key[self._index(mu)], seed), 2)

    def dec(self, key, gamma: Codeword):
        return self.dec_many(key, gamma.symbols[None, :])[0]

    def dec_many(self, key, words: np.ndarray) -> list:
        words = np.asarray(words, dtype=np.uint8)
        scores = np.stack(
            [
                detection_scores(k, bp_decode_many(k, words, self.max_iters, self.bp_prior)[0])
                for k in key
            ]
        )
        best = scores.argmax(axis=0)
        hit = scores[best, np.arange(words.shape[0])] >= self.detect_threshold
        return [self._message(b) if h else DecodeOutcome.INVALID for b, h in zip(best, hit)]


class FixedMessageCode(MessagelessCode):
    """Messageless view of a multi-message code with the message pinned to ``mu_star``."""

    def __init__(self, code: MultiMessageCode, mu_star: Message):
        self.code = code
        self.mu_star = code.check_message(mu_star)
        self.n, self.q = code.n, code.q

    def kgen(self, seed=None):
        return self.code.kgen(seed)

    def enc(self, key, seed=None) -> Codeword:
        return self.code.enc(key, self.mu_star, seed)

    def dec(self, key, gamma: Codeword) -> DecodeOutcome:
        self._check_word(gamma)
        return self._label(self.code.dec(key, gamma))

    def dec_many(self, key, words: np.ndarray) -> np.ndarray:
        return np.array([int(self._label(out)) for out in self.code.dec_many(key, words)], dtype=np.int8)

    def _label(self, out) -> DecodeOutcome:
        return DecodeOutcome.VALID if out == self.mu_star else DecodeOutcome.INVALID


def fix_message(code: MultiMessageCode, mu_star) -> FixedMessageCode:
    return FixedMessageCode(code, mu_star)


@dataclass(frozen=True)
class ChannelTrials:
    """Outcome of a tamper experiment; trials where the channel left the word intact are excluded."""

    failures: int
    counted: int
    excluded: int

    @property
    def rate(self) -> float:
        return self.failures / self.counted if self.counted else 0.0


def _tampered_pairs(enc, channel: TamperChannel, q: int, trials: int, rng):
    originals = np.stack([np.asarray(enc(rng).symbols, dtype=np.uint64) for _ in range(trials)])
    tampered = channel.apply_words(originals, q, rng)
    changed = np.any(tampered != originals, axis=1)
    return tampered[changed], int(np.count_nonzero(~changed))


def error_correction_trials(
    code: MultiMessageCode, channel: TamperChannel, mu, trials: int, seed=None, key=None
) -> ChannelTrials:
    if trials < 1:
        raise ValueError("trials must be positive")
    mu = code.check_message(mu)
    rng = make_rng(seed)
    key = code.kgen(rng) if key is None else key
    words, excluded = _tampered_pairs(lambda g: code.enc(key, mu, g), channel, code.q, trials, rng)
    outs = code.dec_many(key, words) if len(words) else []
    failures = sum(out != mu for out in outs)
    return ChannelTrials(int(failures), len(outs), excluded)


def check_error_correction(code: MultiMessageCode, channel: TamperChannel, mu, trials: int, seed=None, key=None) -> float:
    """Empirical P[dec(f(enc(mu))) != mu | f(enc(mu)) != enc(mu)] under one key drawn from ``seed``."""
    return error_correction_trials(code, channel, mu, trials, seed, key).rate


def tamper_detection_trials(
    code: MessagelessCode,
    channel: TamperChannel,
    trials: int,
    seed=None,
    key=None,
    detected: Iterable[DecodeOutcome] = (DecodeOutcome.TAMPERED,),
) -> ChannelTrials:
    """Count decodes of changed words whose label falls outside ``detected``.

    Consumes randomness in the same order as :func:`error_correction_trials`,
    so a fixed-message code and its inner code see identical words for a
    given seed.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = make_rng(seed)
    key = code.kgen(rng) if key is None else key
    words, excluded = _tampered_pairs(lambda g: code.enc(key, g), channel, code.q, trials, rng)
    labels = code.dec_many(key, words) if len(words) else np.zeros(0, dtype=np.int8)
    ok = np.isin(labels, [int(d) for d in detected])
    return ChannelTrials(int(np.count_nonzero(~ok)), len(labels), excluded)


@dataclass(frozen=True)
class ErrorCorrectionContract:
    family: tuple[TamperChannel, ...]
    tolerance: float

    def holds(self, code: MultiMessageCode, mu, trials: int, seed=None) -> bool:
        return all(
            check_error_correction(code, f, mu, trials, (seed, i) if seed is not None else None) <= self.tolerance
            for i, f in enumerate(self.family)
        )
