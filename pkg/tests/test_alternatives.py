import numpy as np
import pytest
from scipy import stats

from gpgof import AlternativeSpec, DomainError, sample_alt
from gpgof.alternatives import GRAMMAR, KINDS
from gpgof.rng import stable_key

from oracles import mixture_moments

N_BIG = 1_000_000


def du_moments(nu):
    return nu / 2, ((nu + 1) ** 2 - 1) / 12


def katz_moments(lam, theta):
    return lam / (1 - theta), lam / (1 - theta) ** 2


def pb_moments(lam, v, p):
    return lam * v * p, lam * v * p * (1 - p + v * p)


def nb_moments(v, p):
    return v * (1 - p) / p, v * (1 - p) / p**2


def maxkdu_moments(lam, theta, nu):
    k = np.arange(4000)
    cdf = stats.nbinom.cdf(k, lam / theta, 1 - theta) * np.minimum((k + 1) / (nu + 1), 1.0)
    pmf = np.diff(np.concatenate([[0.0], cdf]))
    mean = np.sum(k * pmf)
    return mean, np.sum(k * k * pmf) - mean**2


ANALYTIC = {
    "bb:6,2": (3.0, 6 / 4 * (4 + 6) / (4 + 1)),
    "du:2": du_moments(2),
    "mpdu:10,0.25": mixture_moments(0.25, 1, 1, *du_moments(10)),
    "mpbdu:1,3,0.75,3,0.25": mixture_moments(0.25, *pb_moments(1, 3, 0.75), *du_moments(3)),
    "pb:1,3,0.75": pb_moments(1, 3, 0.75),
    "nb:2,0.5": nb_moments(2, 0.5),
    "mkdu:8,0.5,2,0.5": mixture_moments(0.5, *katz_moments(8, 0.5), *du_moments(2)),
    "mkp:4,0.5,1,0.25": mixture_moments(0.25, *katz_moments(4, 0.5), 1, 1),
    "mnbp:2,0.5,4,0.3": mixture_moments(0.3, *nb_moments(2, 0.5), 4, 4),
    "maxkdu:2,0.5,8": maxkdu_moments(2, 0.5, 8),
    "poisson:3": (3.0, 3.0),
    "katz:2,0.5": katz_moments(2, 0.5),
    "pp:1,2": (2.0, 6.0),
}


class TestParsing:
    def test_round_trip(self):
        alt = AlternativeSpec.parse("mkdu:4,0.5,1,0.25")
        assert alt.kind == "mkdu" and alt.params == (4, 0.5, 1, 0.25)
        assert alt.descriptor == "mkdu:4,0.5,1,0.25"
        assert alt.label == "MKDU(4,0.5,1,0.25)"
        assert AlternativeSpec.parse(alt.descriptor) == alt

    def test_every_kind_has_a_moment_check(self):
        assert {AlternativeSpec.parse(d).kind for d in ANALYTIC} == set(KINDS)

    @pytest.mark.parametrize(
        "text",
        ["foo:1", "du", "du:1.5", "du:-1", "bb:0,2", "nb:2,1.5", "mpdu:3,1.2", "katz:2,1", "mkdu:4,0.5,1", "pb:1,x,0.5"],
    )
    def test_rejects(self, text):
        with pytest.raises(DomainError):
            AlternativeSpec.parse(text)

    def test_grammar_mentions_every_kind(self):
        for name in KINDS:
            assert name in GRAMMAR

    def test_du_zero_admitted(self):
        assert np.all(sample_alt("du:0", 50, 0).counts == 0)


class TestSamplers:
    @pytest.mark.parametrize("descriptor", list(ANALYTIC))
    def test_moments(self, descriptor):
        x = sample_alt(descriptor, N_BIG, np.random.default_rng(stable_key(descriptor))).counts.astype(float)
        mean, var = ANALYTIC[descriptor]
        m = x.mean()
        v = x.var(ddof=1)
        se_mean = np.sqrt(var / x.size)
        mu4 = np.mean((x - m) ** 4)
        se_var = np.sqrt(max(mu4 - v**2, 0) / x.size)
        assert abs(m - mean) <= 4 * se_mean
        assert abs(v - var) <= 4 * se_var

    def test_du_mean(self):
        x = sample_alt("du:2", N_BIG, 1).counts
        assert abs(x.mean() - 1.0) <= 4 * np.sqrt((2 / 3) / N_BIG)

    def test_mkdu_mean(self):
        x = sample_alt("mkdu:8,0.5,2,0.5", N_BIG, 2).counts
        _, var = ANALYTIC["mkdu:8,0.5,2,0.5"]
        assert abs(x.mean() - 8.5) <= 4 * np.sqrt(var / N_BIG)

    def test_deterministic(self):
        for d in ANALYTIC:
            a = sample_alt(d, 300, np.random.default_rng(4)).counts
            b = sample_alt(d, 300, np.random.default_rng(4)).counts
            assert np.array_equal(a, b)

    def test_n_must_be_positive(self):
        with pytest.raises(ValueError):
            sample_alt("du:2", 0, 0)


def two_sample_chi2(a, b):
    hi = int(np.quantile(np.concatenate([a, b]), 0.999))
    ca = np.bincount(np.minimum(a, hi), minlength=hi + 1)
    cb = np.bincount(np.minimum(b, hi), minlength=hi + 1)
    keep = (ca + cb) > 0
    return stats.chi2_contingency(np.vstack([ca[keep], cb[keep]]))[1]


MIXTURES = [
    ("mpdu:6,{e}", "poisson:1", "du:6"),
    ("mkdu:3,0.4,5,{e}", "katz:3,0.4", "du:5"),
    ("mkp:3,0.4,2.5,{e}", "katz:3,0.4", "poisson:2.5"),
    ("mnbp:2,0.5,4,{e}", "nb:2,0.5", "poisson:4"),
    ("mpbdu:1,3,0.75,4,{e}", "pb:1,3,0.75", "du:4"),
]


class TestMixtureDegeneracy:
    @pytest.mark.parametrize("mix,first,second", MIXTURES)
    def test_eps_one_is_first_component(self, mix, first, second):
        a = sample_alt(mix.format(e=1), 100_000, 10).counts
        b = sample_alt(first, 100_000, 11).counts
        assert two_sample_chi2(a, b) > 0.001

    @pytest.mark.parametrize("mix,first,second", MIXTURES)
    def test_eps_zero_is_second_component(self, mix, first, second):
        a = sample_alt(mix.format(e=0), 100_000, 12).counts
        b = sample_alt(second, 100_000, 13).counts
        assert two_sample_chi2(a, b) > 0.001

    def test_chi2_has_power(self):
        a = sample_alt("du:5", 100_000, 1).counts
        b = sample_alt("poisson:2.5", 100_000, 2).counts
        assert two_sample_chi2(a, b) < 1e-10
