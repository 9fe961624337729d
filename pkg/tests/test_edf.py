import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from gpgof import CountSample, DegenerateModelWarning, FamilySpec, FittedParams, ad_statistic, cvm_statistic, sample
from gpgof.edf import edf_rows

from oracles import ad_bruteforce, cvm_bruteforce, katz_pmf, pp_pmf_bruteforce

KATZ = FamilySpec.katz()
PP = FamilySpec.poisson_poisson()


def katz_oracle(lam, theta):
    return lambda j: katz_pmf(j, lam, theta)


def katz_ad(xs, lam, theta):
    return ad_bruteforce(xs, katz_oracle(lam, theta), sf=lambda j: stats.nbinom.sf(j, lam / theta, 1 - theta))


class TestAndersonDarling:
    def test_two_point_sample(self):
        s = CountSample(np.array([0, 1]))
        got = ad_statistic(s, KATZ, FittedParams(1, 0.5))
        assert got == pytest.approx(katz_ad([0, 1], 1, 0.5), rel=1e-12)
        assert got > 0

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(0, 40), min_size=2, max_size=50), st.floats(0.2, 4), st.floats(0.05, 0.85))
    def test_matches_bruteforce(self, xs, lam, theta):
        got = ad_statistic(CountSample(np.array(xs)), KATZ, FittedParams(lam, theta))
        assert got == pytest.approx(katz_ad(xs, lam, theta), rel=1e-9, abs=1e-12)

    def test_pp_matches_bruteforce(self):
        xs = [0, 0, 0, 1, 2, 2, 4, 7, 9]
        probs = pp_pmf_bruteforce(200, 1.0, 2.0)
        got = ad_statistic(CountSample(np.array(xs)), PP, FittedParams(1, 2))
        assert got == pytest.approx(ad_bruteforce(xs, lambda j: probs[j]), rel=1e-9)

    def test_zero_category_padding(self):
        s = CountSample(np.array([0, 1, 1, 2, 5]))
        lam, theta = np.array([1.0]), np.array([0.5])
        padded = np.zeros((1, s.freq.size + 9), dtype=np.int64)
        padded[0, : s.freq.size] = s.freq
        a = edf_rows(KATZ, s.freq[None, :], s.n, lam, theta)
        b = edf_rows(KATZ, padded, s.n, lam, theta)
        assert a[0][0] == b[0][0]

    def test_degenerate_model_warns(self):
        s = CountSample(np.array([0, 0, 0, 1]))
        with pytest.warns(DegenerateModelWarning):
            assert ad_statistic(s, KATZ, FittedParams(1e-6, 1e-6)) == 0.0

    def test_cutoff_tightening_is_harmless(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            lam, theta = rng.uniform(0.2, 5), rng.uniform(0.05, 0.9)
            s = sample(KATZ, FittedParams(lam, theta), 60, rng)
            args = (KATZ, s.freq[None, :], s.n, np.array([lam]), np.array([theta]))
            a = edf_rows(*args, denom_tol=1e-10)[0][0]
            b = edf_rows(*args, denom_tol=1e-12)[0][0]
            assert abs(a - b) <= 1e-12 * max(1.0, a)


class TestCramerVonMises:
    def test_hand_sample(self):
        xs = [0, 0, 1, 1]
        got = cvm_statistic(CountSample(np.array(xs)), KATZ, FittedParams(1, 0.5))
        assert got == pytest.approx(cvm_bruteforce(xs, katz_oracle(1, 0.5)), rel=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(0, 60), min_size=2, max_size=50), st.floats(0.2, 4), st.floats(0.05, 0.85))
    def test_matches_bruteforce(self, xs, lam, theta):
        got = cvm_statistic(CountSample(np.array(xs)), KATZ, FittedParams(lam, theta))
        assert got == pytest.approx(cvm_bruteforce(xs, katz_oracle(lam, theta)), rel=1e-9, abs=1e-14)

    def test_doubling_counts_doubles_statistic(self):
        xs = np.array([0, 1, 1, 2, 3, 6])
        params = FittedParams(1.2, 0.4)
        one = cvm_statistic(CountSample(xs), KATZ, params)
        two = cvm_statistic(CountSample(np.concatenate([xs, xs])), KATZ, params)
        assert two == pytest.approx(2 * one, rel=1e-12)


class TestBothStatistics:
    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(0, 30), min_size=2, max_size=40), st.floats(0.2, 4), st.floats(0.05, 0.85))
    def test_nonnegative(self, xs, lam, theta):
        s = CountSample(np.array(xs))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateModelWarning)
            assert ad_statistic(s, KATZ, FittedParams(lam, theta)) >= 0
        assert cvm_statistic(s, KATZ, FittedParams(lam, theta)) >= 0

    def test_stochastically_bounded_under_null(self):
        params = FittedParams(2, 0.5)
        rng = np.random.default_rng(8)
        med = {}
        for n in (100, 400):
            vals = np.array([
                edf_rows(KATZ, s.freq[None, :], n, np.array([2.0]), np.array([0.5]))[:2]
                for s in (sample(KATZ, params, n, rng) for _ in range(1000))
            ])[:, :, 0]
            med[n] = np.median(vals, axis=0)
        assert np.all(np.abs(med[100] - med[400]) <= 0.5 * med[400])
