import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from truncgrad.threshold import (
    AlphaPercent,
    FixedLambda,
    MaxCombo,
    MinCombo,
    NoTruncation,
    TopK,
    apply_rule,
    lambda_from_alpha,
    soft_threshold,
    truncate_fixed,
    truncate_max_combo,
    truncate_min_combo,
    truncate_topk,
)

from oracles import (
    naive_fixed,
    naive_level,
    naive_max_combo,
    naive_min_combo,
    naive_soft,
    naive_topk,
    truncation_corpus,
)

finite_vectors = arrays(
    np.float64,
    st.integers(1, 64),
    elements=st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False),
)


class TestTruncateFixed:
    def test_strict_threshold(self):
        out = truncate_fixed(np.array([0.3, -0.05, 0.1]), 0.1)
        assert np.array_equal(out, [0.3, 0.0, 0.0])

    def test_lambda_zero_keeps_nonzeros(self):
        d = np.array([1.5, 0.0, -2.0, 1e-300])
        assert np.array_equal(truncate_fixed(d, 0.0), d)

    def test_lambda_above_max_zeroes_all(self):
        d = np.array([0.5, -0.9, 0.2])
        assert np.array_equal(truncate_fixed(d, 0.9), np.zeros(3))

    def test_negative_lambda_rejected(self):
        with pytest.raises(ValueError):
            truncate_fixed(np.array([1.0]), -0.1)


class TestLambdaFromAlpha:
    def test_direct_formula(self):
        assert lambda_from_alpha(np.array([2.0, -0.9, 0.5]), 40) == 0.8

    def test_alpha_zero(self):
        assert lambda_from_alpha(np.array([3.0, 1.0]), 0) == 0.0

    def test_zero_vector(self):
        assert lambda_from_alpha(np.zeros(4), 50) == 0.0

    @pytest.mark.parametrize("alpha", [-1, 100.5, 1e9])
    def test_out_of_range_rejected(self, alpha):
        with pytest.raises(ValueError):
            lambda_from_alpha(np.array([1.0]), alpha)


class TestTruncateTopk:
    def test_two_largest(self):
        out = truncate_topk(np.array([3.0, -1.0, 2.0, 0.5]), 2)
        assert np.array_equal(out, [3.0, 0.0, 2.0, 0.0])

    def test_tie_broken_by_lowest_index(self):
        out = truncate_topk(np.array([1.0, -1.0, 2.0]), 2)
        assert np.array_equal(out, [1.0, 0.0, 2.0])

    def test_k_zero(self):
        assert np.array_equal(truncate_topk(np.array([1.0, 2.0]), 0), np.zeros(2))

    def test_k_at_least_length_is_identity(self):
        d = np.array([1.0, -4.0, 0.0])
        assert np.array_equal(truncate_topk(d, 3), d)
        assert np.array_equal(truncate_topk(d, 10), d)

    def test_support_capped_by_nonzero_count(self):
        d = np.array([1.0, 0.0, 0.0, 2.0])
        out = truncate_topk(d, 3)
        assert np.count_nonzero(out) == 2

    def test_negative_k_rejected(self):
        with pytest.raises(ValueError):
            truncate_topk(np.array([1.0]), -1)


class TestCombos:
    d = np.array([2.0, -0.9, 0.5, -0.79])

    def test_min_picks_sparser_lambda_side(self):
        out = truncate_min_combo(self.d, 3, 40)
        assert np.array_equal(out, [2.0, -0.9, 0.0, 0.0])

    def test_min_picks_sparser_topk_side(self):
        out = truncate_min_combo(self.d, 1, 10)
        assert np.array_equal(out, [2.0, 0.0, 0.0, 0.0])

    def test_max_picks_denser_topk_side(self):
        # top-3 by magnitude keeps 2.0, -0.9, -0.79 (|-0.79| > |0.5|)
        out = truncate_max_combo(self.d, 3, 40)
        assert np.array_equal(out, [2.0, -0.9, 0.0, -0.79])
        assert np.count_nonzero(out) == 3

    def test_max_picks_denser_lambda_side(self):
        out = truncate_max_combo(self.d, 1, 10)
        assert np.array_equal(out, self.d)

    def test_zero_vector(self):
        z = np.zeros(5)
        assert np.array_equal(truncate_min_combo(z, 2, 30), z)
        assert np.array_equal(truncate_max_combo(z, 2, 30), z)


class TestApplyRule:
    def test_no_truncation(self):
        d = np.array([1.0, 2.0])
        assert np.array_equal(apply_rule(d, NoTruncation()), d)

    def test_dispatch_matches_operations(self):
        d = np.array([0.3, -0.05, 0.1, 2.0])
        assert np.array_equal(apply_rule(d, FixedLambda(0.1)), truncate_fixed(d, 0.1))
        assert np.array_equal(apply_rule(d, AlphaPercent(40)),
                              truncate_fixed(d, lambda_from_alpha(d, 40)))
        assert np.array_equal(apply_rule(d, TopK(2)), truncate_topk(d, 2))
        assert np.array_equal(apply_rule(d, MinCombo(2, 40)), truncate_min_combo(d, 2, 40))
        assert np.array_equal(apply_rule(d, MaxCombo(2, 40)), truncate_max_combo(d, 2, 40))

    def test_variant_validation(self):
        with pytest.raises(ValueError):
            FixedLambda(-1.0)
        with pytest.raises(ValueError):
            AlphaPercent(140)
        with pytest.raises(ValueError):
            TopK(-2)
        with pytest.raises(ValueError):
            MinCombo(1, -5)


class TestSoftThreshold:
    def test_direct_evaluation(self):
        out = soft_threshold(np.array([1.2, -0.3, 0.5]), 0.5)
        assert np.allclose(out, [0.7, 0.0, 0.0], atol=1e-15)

    def test_theta_zero_is_identity(self):
        x = np.array([1.0, -2.5, 0.0])
        assert np.array_equal(soft_threshold(x, 0.0), x)

    def test_sign_preserved(self):
        assert np.allclose(soft_threshold(np.array([-2.0, 2.0]), 0.5), [-1.5, 1.5])

    def test_negative_theta_rejected(self):
        with pytest.raises(ValueError):
            soft_threshold(np.array([1.0]), -0.5)

    def test_matches_naive(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            x = rng.standard_normal(20)
            theta = float(rng.uniform(0, 2))
            assert np.allclose(soft_threshold(x, theta), naive_soft(x, theta), atol=1e-15)


def _all_rules(d, lam, alpha, k):
    return [
        (apply_rule(d, FixedLambda(lam)), naive_fixed(d.tolist(), lam)),
        (apply_rule(d, AlphaPercent(alpha)),
         naive_fixed(d.tolist(), naive_level(d.tolist(), alpha))),
        (apply_rule(d, TopK(k)), naive_topk(d.tolist(), k)),
        (apply_rule(d, MinCombo(k, alpha)), naive_min_combo(d.tolist(), k, alpha)),
        (apply_rule(d, MaxCombo(k, alpha)), naive_max_combo(d.tolist(), k, alpha)),
    ]


def test_oracle_equivalence_corpus():
    """All five rules match the brute-force reimplementation exactly."""
    for d, lam, alpha, k in truncation_corpus(trials=1000, max_len=64):
        for got, want in _all_rules(d, lam, alpha, k):
            assert np.array_equal(got, np.array(want))


def test_masking_and_alignment_corpus():
    for d, lam, alpha, k in truncation_corpus(trials=300, max_len=64, seed=77):
        for rule in [NoTruncation(), FixedLambda(lam), AlphaPercent(alpha), TopK(k),
                     MinCombo(k, alpha), MaxCombo(k, alpha)]:
            h = apply_rule(d, rule)
            assert np.all((h == 0.0) | (h == d))
            hn = float(h @ h)
            assert abs(float(d @ h) - hn) <= 1e-12 * max(hn, 1e-300)


@settings(max_examples=200, deadline=None)
@given(finite_vectors, st.floats(0, 10), st.floats(0, 10))
def test_monotone_sparsity_in_lambda(d, lam1, lam2):
    lo, hi = sorted([lam1, lam2])
    support_hi = set(np.nonzero(truncate_fixed(d, hi))[0])
    support_lo = set(np.nonzero(truncate_fixed(d, lo))[0])
    assert support_hi <= support_lo


@settings(max_examples=200, deadline=None)
@given(finite_vectors, st.integers(0, 70))
def test_topk_support_bound_and_dominance(d, k):
    out = truncate_topk(d, k)
    kept = np.abs(out[out != 0.0])
    dropped_mask = (out == 0.0) & (d != 0.0)
    assert np.count_nonzero(out) <= min(k, np.count_nonzero(d))
    if kept.size and np.any(dropped_mask):
        assert kept.min() >= np.abs(d[dropped_mask]).max()


@settings(max_examples=200, deadline=None)
@given(finite_vectors, st.integers(0, 70), st.floats(0, 100))
def test_combo_support_identities(d, k, alpha):
    n_lam = np.count_nonzero(truncate_fixed(d, lambda_from_alpha(d, alpha)))
    n_k = np.count_nonzero(truncate_topk(d, k))
    assert np.count_nonzero(truncate_min_combo(d, k, alpha)) == min(n_lam, n_k)
    assert np.count_nonzero(truncate_max_combo(d, k, alpha)) == max(n_lam, n_k)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 40), st.floats(0, 5), st.integers(0, 2**32 - 1))
def test_soft_threshold_contraction(n, theta, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    y = rng.standard_normal(n)
    lhs = np.linalg.norm(soft_threshold(x, theta) - soft_threshold(y, theta))
    rhs = np.linalg.norm(x - y)
    assert lhs <= rhs + 1e-12
