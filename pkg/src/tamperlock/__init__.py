"""Messageless secret-key codes, tampering channels and watermark robustness experiments."""
from .core import (
    Alphabet,
    Codeword,
    DecodeOutcome,
    DimensionError,
    MessagelessCode,
    SecurityParams,
    hamming_distance,
    make_rng,
    uniform_codeword,
)
from .hamming import HammingCode, HammingCodeKey, impossibility_bound, soundness_bound, threshold

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "Codeword",
    "DecodeOutcome",
    "DimensionError",
    "HammingCode",
    "HammingCodeKey",
    "MessagelessCode",
    "SecurityParams",
    "hamming_distance",
    "impossibility_bound",
    "make_rng",
    "soundness_bound",
    "threshold",
    "uniform_codeword",
]
