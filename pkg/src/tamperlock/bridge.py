"""Watermarks and messageless codes, each built from the other.

``code_from_watermark`` fixes a prompt and reads model outputs as codewords:
a detected watermark decodes to ``tampered``, anything else to ``invalid``,
and ``valid`` is never produced. ``watermark_from_code`` goes the other way
with a model that ignores its prompt and emits ``enc(key)``.
"""
from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from .core import Codeword, DecodeOutcome, DimensionError, MessagelessCode, make_rng
from .ldpc import (
    DEFAULT_N,
    DEFAULT_ROW_WEIGHT,
    DEFAULT_THRESHOLD,
    PrcKey,
    detection_scores,
    prc_encode,
)


class GenerativeModel(abc.ABC):
    """Maps a prompt to an output word of fixed length over a fixed alphabet."""

    output_len: int
    q: int

    @abc.abstractmethod
    def generate(self, prompt: Codeword | None, seed=None) -> Codeword: ...


class WatermarkScheme(abc.ABC):
    @abc.abstractmethod
    def watermark(self, model: GenerativeModel, seed=None) -> tuple[object, GenerativeModel]: ...

    @abc.abstractmethod
    def detect(self, kappa, prompt: Codeword | None, output: Codeword) -> bool: ...

    def detect_many(self, kappa, prompt, outputs: np.ndarray, q: int) -> np.ndarray:
        return np.array([self.detect(kappa, prompt, Codeword(o, q)) for o in np.asarray(outputs)], dtype=bool)


@dataclass(frozen=True)
class FixedPrompt:
    prompt: Codeword | None = None


class UniformModel(GenerativeModel):
    """Unwatermarked base model: uniform outputs regardless of prompt."""

    def __init__(self, output_len: int, q: int = 2):
        self.output_len, self.q = output_len, q

    def generate(self, prompt=None, seed=None) -> Codeword:
        return Codeword(make_rng(seed).integers(0, self.q, self.output_len, dtype=np.uint64), self.q)


class PrcWatermarkedModel(GenerativeModel):
    """Every output is a fresh PRC codeword; the prompt is ignored."""

    q = 2

    def __init__(self, key: PrcKey, output_len: int):
        if output_len != key.n:
            raise ValueError("output length must equal the PRC block length")
        self.key, self.output_len = key, output_len

    def generate(self, prompt=None, seed=None) -> Codeword:
        return Codeword(prc_encode(self.key, seed), 2)


def toy_prc_watermarked_model(prc_key: PrcKey, output_len: int) -> PrcWatermarkedModel:
    return PrcWatermarkedModel(prc_key, output_len)


class PrcWatermarkScheme(WatermarkScheme):
    """Toy scheme: the watermark key is a PRC key, detection is the parity-check z-test."""

    def __init__(self, n: int = DEFAULT_N, r: int | None = None, row_weight: int = DEFAULT_ROW_WEIGHT,
                 detect_threshold: float = DEFAULT_THRESHOLD):
        self.n, self.r, self.row_weight, self.detect_threshold = n, r, row_weight, detect_threshold

    def watermark(self, model: GenerativeModel, seed=None):
        if model.q != 2 or model.output_len != self.n:
            raise DimensionError("PRC watermark needs a binary model with matching output length")
        key = PrcKey.generate(self.n, self.r, self.row_weight, seed, self.detect_threshold)
        return key, toy_prc_watermarked_model(key, self.n)

    def detect(self, kappa: PrcKey, prompt, output: Codeword) -> bool:
        return bool(detection_scores(kappa, output.symbols) >= kappa.detect_threshold)

    def detect_many(self, kappa: PrcKey, prompt, outputs, q=2) -> np.ndarray:
        return detection_scores(kappa, np.asarray(outputs, dtype=np.uint8)) >= kappa.detect_threshold


@dataclass(frozen=True)
class WatermarkCodeKey:
    kappa: object
    model: GenerativeModel


class WatermarkDerivedCode(MessagelessCode):
    def __init__(self, scheme: WatermarkScheme, model: GenerativeModel, prompt: FixedPrompt):
        if prompt.prompt is not None and prompt.prompt.q != model.q:
            raise DimensionError("prompt and model must share an alphabet")
        self.scheme, self.model, self.prompt = scheme, model, prompt
        self.n, self.q = model.output_len, model.q

    def kgen(self, seed=None) -> WatermarkCodeKey:
        kappa, marked = self.scheme.watermark(self.model, seed)
        return WatermarkCodeKey(kappa, marked)

    def enc(self, key: WatermarkCodeKey, seed=None) -> Codeword:
        return key.model.generate(self.prompt.prompt, seed)

    def dec(self, key: WatermarkCodeKey, gamma: Codeword) -> DecodeOutcome:
        self._check_word(gamma)
        found = self.scheme.detect(key.kappa, self.prompt.prompt, gamma)
        return DecodeOutcome.TAMPERED if found else DecodeOutcome.INVALID

    def dec_many(self, key: WatermarkCodeKey, words: np.ndarray) -> np.ndarray:
        found = self.scheme.detect_many(key.kappa, self.prompt.prompt, words, self.q)
        return np.where(found, int(DecodeOutcome.TAMPERED), int(DecodeOutcome.INVALID)).astype(np.int8)


def code_from_watermark(scheme: WatermarkScheme, model: GenerativeModel, prompt: FixedPrompt | None = None) -> WatermarkDerivedCode:
    return WatermarkDerivedCode(scheme, model, prompt or FixedPrompt())


class CodeModel(GenerativeModel):
    """Before watermarking the model has no key; ``keyed`` binds one."""

    def __init__(self, code: MessagelessCode, key=None):
        self.code, self.key = code, key
        self.output_len, self.q = code.n, code.q

    def keyed(self, key) -> CodeModel:
        return CodeModel(self.code, key)

    def generate(self, prompt=None, seed=None) -> Codeword:
        if self.key is None:
            return Codeword(make_rng(seed).integers(0, self.q, self.output_len, dtype=np.uint64), self.q)
        return self.code.enc(self.key, seed)


class CodeWatermarkScheme(WatermarkScheme):
    """Watermark presence means the code decodes to valid or tampered."""

    def __init__(self, code: MessagelessCode):
        self.code = code

    def watermark(self, model: CodeModel, seed=None):
        key = self.code.kgen(seed)
        return key, model.keyed(key)

    def detect(self, kappa, prompt, output: Codeword) -> bool:
        return self.code.dec(kappa, output) != DecodeOutcome.INVALID

    def detect_many(self, kappa, prompt, outputs, q=None) -> np.ndarray:
        return self.code.dec_many(kappa, outputs) != int(DecodeOutcome.INVALID)


def watermark_from_code(code: MessagelessCode) -> tuple[CodeWatermarkScheme, CodeModel]:
    return CodeWatermarkScheme(code), CodeModel(code)
