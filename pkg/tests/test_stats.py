import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings, strategies as st

from swapmin.errors import DegenerateSample
from swapmin.stats import (
    adjust_sd_minp,
    alpha_sweep,
    bonferroni,
    log_tail_normal,
    log_tail_normal_array,
    stratified_ci,
    stratified_log_pvalues,
    test_each_family,
    wilcoxon_one_tailed_less,
)
from swapmin.stats.streams import block_generator
from swapmin.stats.wilcoxon import EXACT, NORMAL, SignedRankNull

from oracles import LOG_PHI_MINUS_10, add_one_estimate, convolution_p, enumerate_p, midranks

class TestLogTail:
    def test_zero(self):
        assert log_tail_normal(0.0) == math.log(0.5)

    def test_minus_ten(self):
        assert abs(log_tail_normal(-10.0) / LOG_PHI_MINUS_10 - 1) < 1e-10
        assert math.exp(log_tail_normal(-10.0)) == pytest.approx(7.62e-24, rel=1e-3)

    def test_plus_ten(self):
        assert log_tail_normal(10.0) == pytest.approx(0.0, abs=1e-22)
        assert log_tail_normal(10.0) < 0

    def test_against_mpmath(self):
        mpmath.mp.dps = 40
        for z in np.linspace(-40, 8, 97):
            ref = float(mpmath.log(mpmath.ncdf(float(z))))
            assert abs(log_tail_normal(z) - ref) <= 1e-10 * abs(ref)

    def test_array_matches_scalar(self):
        z = np.linspace(-45, 12, 301)
        # vectorized erfc and math.erfc may differ in the last ulps
        np.testing.assert_allclose(log_tail_normal_array(z), [log_tail_normal(v) for v in z], rtol=1e-14, atol=0)

    def test_monotone(self):
        z = np.linspace(-40, 10, 2001)
        assert (np.diff(log_tail_normal_array(z)) > 0).all()


class TestWilcoxon:
    def test_three_negative(self):
        r = wilcoxon_one_tailed_less([-0.1, -0.2, -0.3])
        assert r.statistic == 0 and r.p == 0.125 and r.method == EXACT

    def test_mixed_pair(self):
        r = wilcoxon_one_tailed_less([-0.2, 0.1])
        assert r.statistic == 1 and r.p == 0.5

    def test_all_positive(self):
        r = wilcoxon_one_tailed_less([0.1, 0.2, 0.3])
        assert r.statistic == 6 and r.p == 1.0 and r.log_p == 0.0

    def test_zeros_dropped(self):
        assert wilcoxon_one_tailed_less([0, -0.1, 0, -0.2, -0.3]).n_used == 3

    def test_all_zero(self):
        with pytest.raises(DegenerateSample):
            wilcoxon_one_tailed_less([0.0, 0.0])

    def test_non_finite(self):
        with pytest.raises(ValueError):
            wilcoxon_one_tailed_less([np.nan, 1.0])

    def test_exact_matches_enumeration(self):
        rng = np.random.default_rng(0)
        for n in range(1, 11):
            for _ in range(10):
                d = rng.normal(-0.2, 1, n)
                r = wilcoxon_one_tailed_less(d)
                assert Fraction(r.p) == enumerate_p(d.tolist())
                assert Fraction(r.p).denominator <= 2**n

    @settings(max_examples=60)
    @given(st.lists(st.sampled_from([-3, -2, -1, 0, 1, 2, 3]), min_size=1, max_size=10).filter(lambda x: any(x)))
    def test_ties_and_zeros_match_enumeration(self, d):
        assert Fraction(wilcoxon_one_tailed_less(d).p) == enumerate_p(d)

    def test_pratt(self):
        d = [0, -1, -2, 3]
        # ranks with the zero kept: 1 (zero), 2, 3, 4 -> discard zero, W+ = 4
        r = wilcoxon_one_tailed_less(d, zero_method="pratt")
        assert r.statistic == 4
        assert Fraction(r.p) == convolution_p([2, 3, 4], 4)

    def test_tied_mid_size_uses_exact(self):
        d = [-1.0] * 30 + [0.5] * 10
        r = wilcoxon_one_tailed_less(d)
        assert r.method == EXACT
        ranks = midranks([abs(x) for x in d])
        observed = sum(rk for rk, x in zip(ranks, d) if x > 0)
        assert r.p == pytest.approx(float(convolution_p(ranks, observed)), rel=1e-12)

    def test_large_untied_uses_normal(self):
        d = np.random.default_rng(1).normal(-0.3, 1, 40)
        r = wilcoxon_one_tailed_less(d)
        assert r.method == NORMAL
        ref = scipy.stats.wilcoxon(d, alternative="less", method="approx", correction=True).pvalue
        assert r.p == pytest.approx(ref, rel=1e-9)

    def test_large_sample_tail_does_not_underflow(self):
        r = wilcoxon_one_tailed_less(-np.arange(1, 2001, dtype=float))
        assert r.p > 0 or r.log_p < -700
        assert np.isfinite(r.log_p) and r.log_p < -100

    @pytest.mark.parametrize("n", [26, 33, 47, 60])
    def test_convolution_matches_dictionary_oracle(self, n):
        null = SignedRankNull(tuple(range(2, 2 * n + 1, 2)))
        for w in (0, n, n * (n + 1) // 8, n * (n + 1) // 4):
            assert null.p_exact(2 * w) == float(convolution_p(range(1, n + 1), w))

    def test_approximation_quality(self):
        # lower-tail band where the normal approximation is meant to be used
        rng = np.random.default_rng(7)
        checked = 0
        for n in range(26, 61):
            for _ in range(20):
                d = rng.permutation(np.arange(1, n + 1)) * rng.choice([-1, 1], n)
                r = wilcoxon_one_tailed_less(d)
                assert r.method == NORMAL
                exact = SignedRankNull(tuple(range(2, 2 * n + 1, 2))).p_exact(int(2 * r.statistic))
                if 2e-3 <= exact <= 0.98:
                    checked += 1
                    assert abs(r.log_p - math.log(exact)) < 0.05 * abs(math.log(exact))
        assert checked > 0.9 * 35 * 20

    @given(
        st.lists(st.integers(-10_000, 10_000).filter(bool), min_size=1, max_size=40, unique_by=abs),
        st.lists(st.integers(0, 5_000), min_size=40, max_size=40),
    )
    def test_more_negative_never_increases_p(self, d, dec):
        d = np.array(d, dtype=float)
        e = d - np.array(dec[: d.size], dtype=float)
        if np.any(e == 0) or len(set(np.abs(e))) < e.size:
            return
        # W+ counts positive Walsh averages, and every one of them went down
        a, b = wilcoxon_one_tailed_less(d), wilcoxon_one_tailed_less(e)
        assert b.statistic <= a.statistic
        assert b.log_p <= a.log_p


class TestFamilies:
    def test_single_language_family(self):
        (res,), untestable = test_each_family({"f": [-0.3]})
        assert res[1].p == 0.5 and untestable == []

    def test_untestable(self):
        res, untestable = test_each_family({"z": [0.0, 0.0], "f": [-1.0]})
        assert [n for n, _ in res] == ["f"] and untestable == ["z"]

    def test_order_independent(self):
        a = test_each_family({"a": [-1, -2], "b": [1, -3]})
        b = test_each_family({"b": [1, -3], "a": [-1, -2]})
        assert a == b

    def test_family_group_input(self):
        class G:
            def __init__(self, family, d):
                self.family, self._d = family, d

            def deltas(self):
                return self._d

        res, _ = test_each_family([G("x", [-1.0, -2.0])])
        assert res[0][1].p == 0.25


class TestMinP:
    def test_single_family_reduces_to_add_one(self):
        d = [-0.5, -0.4, 0.1, -0.3, -0.2]
        (rep,) = adjust_sd_minp({"f": d}, n_resamples=5000, seed=3)
        assert rep.minp_estimate == add_one_estimate(d, rep.raw_log_p, 5000, 3)
        assert rep.adjusted_p == max(rep.raw_p, rep.minp_estimate)
        assert rep.minp_estimate == pytest.approx(rep.raw_p, abs=0.02)

    def test_adjusted_never_below_raw(self):
        rng = np.random.default_rng(0)
        fams = {f"f{i}": rng.normal(-0.2, 1, rng.integers(1, 15)) for i in range(8)}
        for rep in adjust_sd_minp(fams, n_resamples=500, seed=1):
            assert rep.raw_p <= rep.adjusted_p <= 1

    def test_monotone_in_raw_order(self):
        rng = np.random.default_rng(2)
        fams = {f"f{i}": rng.normal(-0.3, 1, rng.integers(1, 20)) for i in range(12)}
        reps = adjust_sd_minp(fams, n_resamples=800, seed=4)
        assert [r.raw_log_p for r in reps] == sorted(r.raw_log_p for r in reps)
        assert all(a.adjusted_p <= b.adjusted_p for a, b in zip(reps, reps[1:]))

    def test_identical_families_get_equal_adjustment(self):
        d = [-0.9, -0.7, 0.2, -0.4, -0.6, -0.1]
        a, b = adjust_sd_minp({"a": d, "b": list(d)}, n_resamples=100_000, seed=9)
        assert a.raw_p == b.raw_p
        assert a.adjusted_p == pytest.approx(b.adjusted_p, abs=5e-3)

    def test_skips_all_zero_families(self):
        reps = adjust_sd_minp({"z": [0.0], "f": [-1.0, -2.0]}, n_resamples=100)
        assert [r.family for r in reps] == ["f"]

    def test_thread_invariance(self):
        fams = {"a": [-1, -2, 3, -4], "b": [-0.5, 0.25], "c": [1, 2, -3]}
        one = adjust_sd_minp(fams, n_resamples=3000, seed=5, workers=1, block_size=500)
        four = adjust_sd_minp(fams, n_resamples=3000, seed=5, workers=4, block_size=500)
        assert one == four

    def test_strong_signal_survives_adjustment(self):
        fams = {f"f{i}": -np.arange(1, 13, dtype=float) for i in range(5)}
        for rep in adjust_sd_minp(fams, n_resamples=2000, seed=0):
            assert rep.raw_p == 2.0**-12
            assert rep.adjusted_p < 0.01

    def test_bonferroni(self):
        assert bonferroni([0.01, 0.5]) == [0.02, 1.0]

    def test_alpha_sweep(self):
        reps = adjust_sd_minp({"a": [-1, -2, -3, -4, -5], "b": [-1, -2, -3, -4, -5], "c": [1.0]}, n_resamples=999, seed=0)
        rows = alpha_sweep(reps)
        assert [r["families_at_or_below"] for r in rows] == [2, 2, 3]
        assert rows[-1]["family"] == "c" and rows[-1]["n_languages"] == 1


class TestStratified:
    def test_singleton_families_are_degenerate(self):
        fams = {f"f{i}": [-(i + 1) * 0.1] for i in range(6)}
        ci = stratified_ci(fams, n_samples=500, seed=1)
        assert ci.lower == ci.upper
        assert ci.upper == pytest.approx(2.0**-6, rel=1e-12)

    def test_all_negative_twenty_families(self):
        rng = np.random.default_rng(0)
        fams = {f"f{i}": np.full(rng.integers(1, 8), -1e-3) for i in range(20)}
        ci = stratified_ci(fams, n_samples=1000, seed=2)
        assert ci.upper == pytest.approx(2.0**-20, rel=1e-12)
        assert ci.upper < 0.01

    def test_thread_and_seed_determinism(self):
        rng = np.random.default_rng(4)
        fams = {f"f{i}": rng.normal(-0.1, 1, rng.integers(1, 10)) for i in range(15)}
        a = stratified_log_pvalues(fams, 5000, seed=7, workers=1, block_size=512)
        b = stratified_log_pvalues(fams, 5000, seed=7, workers=4, block_size=512)
        c = stratified_log_pvalues(fams, 5000, seed=8, workers=1, block_size=512)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_draws_match_scalar_test(self):
        rng = np.random.default_rng(6)
        fams = {f"f{i}": np.round(rng.normal(0, 1, rng.integers(1, 6)), 1) for i in range(30)}
        log_p = stratified_log_pvalues(fams, 300, seed=3)
        names = sorted(fams)
        sizes = np.array([len(fams[n]) for n in names])
        u = block_generator(3, 0).random((300, len(names)))
        picks = np.minimum((u * sizes).astype(int), sizes - 1)
        for k in range(300):
            d = [fams[n][i] for n, i in zip(names, picks[k])]
            expected = wilcoxon_one_tailed_less(d).log_p if any(d) else 0.0
            assert log_p[k] == pytest.approx(expected, rel=1e-12, abs=1e-15)

    def test_degenerate_draws_recorded_as_one(self):
        fams = {"a": [0.0, -1.0], "b": [0.0]}
        ci = stratified_ci(fams, n_samples=400, seed=0)
        assert 0 < ci.n_degenerate < 400
        assert ci.upper == 1.0

    @pytest.mark.parametrize("kw", [{"n_samples": 10}, {"confidence": 1.0}])
    def test_bad_arguments(self, kw):
        with pytest.raises(ValueError):
            stratified_ci({"a": [-1], "b": [-1]}, **kw)

    def test_needs_two_families(self):
        with pytest.raises(ValueError):
            stratified_ci({"a": [-1, -2]}, n_samples=100)
