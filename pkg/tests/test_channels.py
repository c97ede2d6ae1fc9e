import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from tamperlock.channels import (
    TamperChannel,
    constant_channel,
    full_resample,
    full_resample_words,
    independent_resample,
    parse_channel,
    realized_change_fraction,
    resample_words,
    worst_case_flip,
    worst_case_flip_words,
)
from tamperlock.core import Codeword, DecodeOutcome, DimensionError, hamming_distance, make_rng, uniform_codeword
from tamperlock.hamming import HammingCode


def within_5_sigma(x, n, p):
    return abs(x - n * p) <= 5 * math.sqrt(n * p * (1 - p))


def test_independent_resample_beta_zero_is_identity():
    g = uniform_codeword(100, 7, 1)
    assert independent_resample(g, 0.0, 2) == g


@pytest.mark.parametrize("q,beta", [(2, 1.0), (4, 0.5)])
def test_independent_resample_change_fraction(q, beta):
    n = 10**5
    g = uniform_codeword(n, q, 1)
    d = hamming_distance(g, independent_resample(g, beta, 2))
    assert within_5_sigma(d, n, beta * (1 - 1 / q))


@pytest.mark.parametrize("q,p", [(2, 0.5), (3, 2 / 3)])
def test_full_resample_change_fraction(q, p):
    n = 10**5
    g = uniform_codeword(n, q, 1)
    assert within_5_sigma(hamming_distance(g, full_resample(g, 2)), n, p)


def test_full_resample_uniform_over_small_space():
    trials = 200000
    words = np.zeros((trials, 2), dtype=np.uint64)
    out = full_resample_words(words, 2, make_rng(0))
    counts = np.bincount((out[:, 0] * 2 + out[:, 1]).astype(np.int64), minlength=4)
    assert stats.chisquare(counts).pvalue > 0.001


def test_full_resample_ignores_input():
    trials, q = 100000, 3
    a = full_resample_words(np.zeros((trials, 2), dtype=np.uint64), q, make_rng(1))
    b = full_resample_words(np.full((trials, 2), 2, dtype=np.uint64), q, make_rng(2))
    ca = np.bincount((a[:, 0] * q + a[:, 1]).astype(np.int64), minlength=q * q)
    cb = np.bincount((b[:, 0] * q + b[:, 1]).astype(np.int64), minlength=q * q)
    assert stats.chi2_contingency(np.stack([ca, cb]))[1] > 0.001


def test_beta_one_matches_full_resample_in_distribution():
    trials, q = 100000, 3
    src = np.ones((trials, 2), dtype=np.uint64)
    a = resample_words(src, q, 1.0, make_rng(3))
    b = full_resample_words(src, q, make_rng(4))
    ca = np.bincount((a[:, 0] * q + a[:, 1]).astype(np.int64), minlength=q * q)
    cb = np.bincount((b[:, 0] * q + b[:, 1]).astype(np.int64), minlength=q * q)
    assert stats.chi2_contingency(np.stack([ca, cb]))[1] > 0.001


def test_worst_case_budget_zero_identity():
    g = uniform_codeword(16, 5, 0)
    for s in ("random_positions", "prefix"):
        assert worst_case_flip(g, 0, s, 1) == g


def test_worst_case_full_budget_prefix_is_complement():
    g = uniform_codeword(16, 2, 0)
    out = worst_case_flip(g, 16, "prefix", 1)
    assert np.array_equal(out.symbols, 1 - g.symbols)


def test_worst_case_rejects_large_budget():
    with pytest.raises(ValueError):
        worst_case_flip(uniform_codeword(4, 2, 0), 5)
    with pytest.raises(ValueError):
        worst_case_flip(uniform_codeword(4, 2, 0), 1, "bogus")


@given(st.integers(2, 50), st.integers(1, 40), st.data())
def test_worst_case_distance_is_exact(q, n, data):
    budget = data.draw(st.integers(0, n))
    seed = data.draw(st.integers(0, 2**32))
    g = uniform_codeword(n, q, seed)
    for s in ("random_positions", "prefix"):
        out = worst_case_flip(g, budget, s, seed)
        assert out.n == n
        assert hamming_distance(out, g) == budget
    batch = worst_case_flip_words(np.tile(g.symbols, (5, 1)), q, budget, make_rng(seed))
    assert np.all(np.count_nonzero(batch != g.symbols, axis=1) == budget)


def shift_callback(gamma, budget, rng):
    out = gamma.symbols.astype(np.int64)
    pos = rng.choice(gamma.n, budget, replace=False)
    out[pos] = (out[pos] + 1) % gamma.q
    return out


def test_callback_strategy_validated():
    g = uniform_codeword(8, 3, 0)
    out = worst_case_flip(g, 3, "adversarial_callback", 1, shift_callback)
    assert hamming_distance(out, g) == 3
    with pytest.raises(ValueError):
        worst_case_flip(g, 3, "adversarial_callback", 1, lambda gm, b, r: gm.symbols)
    with pytest.raises(ValueError):
        worst_case_flip(g, 3, "adversarial_callback", 1)


def test_in_budget_flips_are_always_tampered():
    code = HammingCode.build(64)
    key = code.kgen(0)
    for budget in range(1, key.t_floor + 1):
        for s in ("random_positions", "prefix"):
            assert code.dec(key, worst_case_flip(key.sk, budget, s, budget)) == DecodeOutcome.TAMPERED


@given(st.integers(2, 9), st.integers(1, 30), st.floats(0, 1), st.integers(0, 2**32))
def test_channels_preserve_length(q, n, beta, seed):
    g = uniform_codeword(n, q, seed)
    assert independent_resample(g, beta, seed).n == n
    assert full_resample(g, seed).n == n
    assert constant_channel(uniform_codeword(n, q, seed + 1))(g).n == n


def test_constant_channel():
    target = uniform_codeword(8, 4, 1)
    ch = constant_channel(target)
    assert all(ch(uniform_codeword(8, 4, s)) == target for s in range(10))
    with pytest.raises(DimensionError):
        ch(uniform_codeword(9, 4, 0))


def test_constant_to_input_is_excluded_from_tamper_counts():
    from tamperlock.multimsg import tamper_detection_trials

    code = HammingCode.build(8, 64, 0.5)
    key = code.kgen(0)
    res = tamper_detection_trials(code, constant_channel(key.sk), 10, 1, key)
    assert (res.counted, res.excluded) == (0, 10)


def test_constant_random_target_lands_invalid():
    code = HammingCode.build(64)
    key = code.kgen(0)
    labels = [code.dec(key, constant_channel(uniform_codeword(64, code.q, (s, 7)))(key.sk)) for s in range(300)]
    assert labels.count(DecodeOutcome.INVALID) >= 297


def test_realized_change_fraction():
    g = uniform_codeword(8, 2, 0)
    assert realized_change_fraction(g, g) == 0.0
    assert realized_change_fraction(g, Codeword(1 - g.symbols, 2)) == 1.0
    big = uniform_codeword(16384, 2, 1)
    frac = realized_change_fraction(big, full_resample(big, 2))
    assert within_5_sigma(frac * 16384, 16384, 0.5)


def test_declared_alpha():
    assert TamperChannel("ind", beta=0.5).declared_alpha(10, 4) == 0.375
    assert TamperChannel("full").declared_alpha(10, 2) == 0.5
    assert TamperChannel("worst", budget=3).declared_alpha(10, 2) == 0.3


@pytest.mark.parametrize("text", ["ind:beta=0.5", "full", "worst:budget=32:strategy=random",
                                  "worst:budget=3:strategy=prefix", "const:0:1:1"])
def test_channel_spec_round_trip(text):
    ch = parse_channel(text, 2)
    assert ch.spec() == text
    assert parse_channel(ch.spec(), 2) == ch


@pytest.mark.parametrize("text", ["nope", "ind", "worst:strategy=random", "worst:budget=1:strategy=sideways"])
def test_channel_spec_rejects(text):
    with pytest.raises((ValueError, KeyError)):
        parse_channel(text, 2)
