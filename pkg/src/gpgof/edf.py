"""Anderson-Darling and Cramer-von Mises statistics for count data.

Both compare the empirical cdf ``F_n`` with the fitted model cdf ``F``:

    AD_n = n * sum_{j=1}^{J} (F_n(j) - F(j))^2 f(j) / (F(j) (1 - F(j)))
    C_n  = n * sum_{j=0}^{max(30, M1)} (F_n(j) - F(j))^2 f(j)

with ``J = min(30, k0)`` and ``k0`` the first ``j`` at which the AD
denominator drops below 1e-10.
"""

from __future__ import annotations

import warnings

import numpy as np

from .counts import CountSample
from .families import FamilySpec, FittedParams, pmf_rows, validate

AD_MAX_TERMS = 30
CVM_MIN_TERMS = 30
DENOM_TOL = 1e-10
SF_EXTRA = 40  # pmf terms past the summation range used to form 1 - F by tail sums
SF_NEGLIGIBLE = 1e-17


class DegenerateModelWarning(UserWarning):
    """The fitted model puts (numerically) all its mass on {0, 1}."""


def edf_rows(spec: FamilySpec, freq, n: int, lam, theta, denom_tol: float = DENOM_TOL):
    """``(ad, cvm, degenerate)`` arrays for a batch of frequency rows."""
    freq = np.asarray(freq, dtype=np.int64)
    rows, width = freq.shape
    m1 = width - 1 - np.argmax((freq > 0)[:, ::-1], axis=1)
    length = max(CVM_MIN_TERMS, width - 1) + 1
    ext = pmf_rows(spec, lam, theta, length + SF_EXTRA)
    f = ext[:, :length]
    F = np.cumsum(f, axis=1)
    # 1 - F by summing tail terms keeps its relative precision far out, provided
    # the mass past the extended table is negligible; otherwise use the complement
    last, prev = ext[:, -1], ext[:, -2]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(prev > 0, last / prev, 1.0)
        beyond = np.where(r < 1, last * r / (1 - r), np.inf)
    tail = np.cumsum(ext[:, ::-1], axis=1)[:, ::-1][:, 1 : length + 1]
    sf = np.where((beyond < SF_NEGLIGIBLE)[:, None], tail + beyond[:, None], np.clip(1.0 - F, 0.0, None))
    padded = np.zeros((rows, length), dtype=np.int64)
    padded[:, :width] = freq
    Fn = np.cumsum(padded, axis=1) / n
    diff2 = (Fn - F) ** 2
    j = np.arange(length)

    cvm_terms = np.where(j[None, :] <= np.maximum(CVM_MIN_TERMS, m1)[:, None], diff2 * f, 0.0)
    cvm = n * np.cumsum(cvm_terms, axis=1)[:, -1]

    denom = F * sf
    tiny = (denom < denom_tol) & (j[None, :] >= 1)
    has_k0 = tiny.any(axis=1)
    k0 = np.where(has_k0, np.argmax(tiny, axis=1), length)
    upper = np.minimum(AD_MAX_TERMS, k0)
    num = diff2 * f
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(num > 0, num / np.maximum(denom, np.finfo(float).tiny), 0.0)
    ad_terms = np.where((j[None, :] >= 1) & (j[None, :] <= upper[:, None]), ratio, 0.0)
    ad = n * np.cumsum(ad_terms, axis=1)[:, -1]
    degenerate = sf[:, 1] < denom_tol
    ad = np.where(degenerate, 0.0, ad)
    return ad, cvm, degenerate


def _single(sample: CountSample, spec: FamilySpec, params: FittedParams):
    validate(spec, params)
    return edf_rows(spec, sample.freq[None, :], sample.n, np.array([params.lam]), np.array([params.theta]))


def ad_statistic(sample: CountSample, spec: FamilySpec, params: FittedParams) -> float:
    """Discrete Anderson-Darling distance between ``sample`` and the model."""
    ad, _, degenerate = _single(sample, spec, params)
    if degenerate[0]:
        warnings.warn("fitted model has no mass beyond 1; AD set to 0", DegenerateModelWarning, stacklevel=2)
    return float(ad[0])


def cvm_statistic(sample: CountSample, spec: FamilySpec, params: FittedParams) -> float:
    """Discrete Cramer-von Mises distance, summed over ``0..max(30, M1)``."""
    _, cvm, _ = _single(sample, spec, params)
    return float(cvm[0])
