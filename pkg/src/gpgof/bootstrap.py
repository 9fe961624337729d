"""Parametric bootstrap calibration.

The null law is fitted to the data by moments, ``b`` samples of the same size
are drawn from the fitted law, each resample is refitted, and the statistic is
recomputed on it.  Resample ``i`` is generated from its own stream
``(seed, i)``, so the draws do not depend on how the loop is chunked.

Several statistics can share one set of resamples: the coefficient vector of a
resample is computed once and reweighted for every ``S_{n,w}`` requested, and
the EDF statistics reuse the same refits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .counts import CountSample
from .edf import edf_rows
from .families import (
    FamilySpec,
    InverseCdfSampler,
    estimate_moments,
    fit_rows,
    sample_moment_rows,
)
from .rng import substream
from .statistic import DEFAULT_TRUNC_TOL, PRESETS, DhatRows, WeightScheme

EDF_NAMES = ("ad", "cvm")
ALL_STATISTICS = tuple(PRESETS) + EDF_NAMES
CHUNK_ROWS = 256


@dataclass(frozen=True)
class GofTestResult:
    statistic: str
    observed: float
    p_value: float
    critical_value_alpha: float
    alpha: float
    b: int
    draws: np.ndarray = field(repr=False)
    degenerate_replicates: int = 0

    @property
    def reject(self) -> bool:
        return reject(self, self.alpha)

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "observed": self.observed,
            "p_value": self.p_value,
            "critical_value_alpha": self.critical_value_alpha,
            "alpha": self.alpha,
            "b": self.b,
            "reject": self.reject,
            "degenerate_replicates": self.degenerate_replicates,
        }


def p_value(observed: float, draws: np.ndarray) -> float:
    draws = np.asarray(draws)
    return (1 + int(np.count_nonzero(draws >= observed))) / (draws.size + 1)


def critical_value(draws: np.ndarray, alpha: float) -> float:
    """``inf{x : #{draws >= x} / b <= alpha}``: the ``floor(alpha b) + 1``-th largest draw."""
    ordered = np.sort(np.asarray(draws))[::-1]
    m = math.floor(alpha * ordered.size + 1e-9)
    if m >= ordered.size:
        return -math.inf
    return float(ordered[m])


def reject(result: GofTestResult, alpha: float | None = None) -> bool:
    """Reject when the bootstrap p-value is at most ``alpha``."""
    if alpha is None:
        alpha = result.alpha
    return result.p_value <= alpha


def statistic_name(stat) -> str:
    if isinstance(stat, WeightScheme):
        for name, scheme in PRESETS.items():
            if scheme == stat:
                return name
        return str(stat)
    name = str(stat).lower()
    if name not in ALL_STATISTICS:
        raise ValueError(f"unknown statistic {stat!r}; choose from {', '.join(ALL_STATISTICS)}")
    return name


def _resolve(statistics) -> dict:
    if isinstance(statistics, (str, WeightScheme)):
        statistics = [statistics]
    out = {}
    for stat in statistics:
        name = statistic_name(stat)
        out[name] = stat if isinstance(stat, WeightScheme) else PRESETS.get(name)
    return out


def evaluate_rows(spec: FamilySpec, freq: np.ndarray, n: int, lam, theta, stats: dict,
                  trunc_tol: float = DEFAULT_TRUNC_TOL) -> dict:
    """Every requested statistic on each frequency row, at its own fit."""
    out = {}
    weighted = {k: w for k, w in stats.items() if w is not None}
    if weighted:
        rows = DhatRows(spec, freq, n, lam, theta, trunc_tol)
        for name, scheme in weighted.items():
            out[name] = rows.weighted(scheme)[0]
    if any(k in EDF_NAMES for k in stats):
        ad, cvm, _ = edf_rows(spec, freq, n, lam, theta)
        if "ad" in stats:
            out["ad"] = ad
        if "cvm" in stats:
            out["cvm"] = cvm
    return out


def _freq_rows(x: np.ndarray) -> np.ndarray:
    rows = x.shape[0]
    width = int(x.max()) + 1
    flat = (x + width * np.arange(rows)[:, None]).ravel()
    return np.bincount(flat, minlength=rows * width).reshape(rows, width)


def bootstrap_tests(
    sample: CountSample,
    spec: FamilySpec,
    statistics=ALL_STATISTICS,
    b: int = 750,
    alpha: float = 0.05,
    seed: int = 0,
    trunc_tol: float = DEFAULT_TRUNC_TOL,
) -> dict[str, GofTestResult]:
    """Bootstrap tests for several statistics sharing one set of resamples."""
    if b < 1:
        raise ValueError("b must be >= 1")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    stats = _resolve(statistics)
    fit = estimate_moments(spec, sample)
    n = sample.n
    observed = evaluate_rows(
        spec, sample.freq[None, :], n, np.array([fit.lam]), np.array([fit.theta]), stats, trunc_tol
    )
    sampler = InverseCdfSampler(spec, fit)
    draws = {name: np.empty(b) for name in stats}
    degenerate = 0
    for start in range(0, b, CHUNK_ROWS):
        stop = min(start + CHUNK_ROWS, b)
        u = np.stack([substream(seed, i).random(n) for i in range(start, stop)])
        freq = _freq_rows(sampler.transform(u))
        mean, var = sample_moment_rows(freq, n)
        lam, theta, clamped = fit_rows(spec, mean, var)
        degenerate += int(np.count_nonzero(clamped))
        values = evaluate_rows(spec, freq, n, lam, theta, stats, trunc_tol)
        for name in stats:
            draws[name][start:stop] = values[name]

    results = {}
    for name in stats:
        obs = float(observed[name][0])
        d = draws[name]
        d.setflags(write=False)
        results[name] = GofTestResult(
            statistic=name,
            observed=obs,
            p_value=p_value(obs, d),
            critical_value_alpha=critical_value(d, alpha),
            alpha=alpha,
            b=b,
            draws=d,
            degenerate_replicates=degenerate,
        )
    return results


def bootstrap_test(
    sample: CountSample,
    spec: FamilySpec,
    statistic="s4",
    b: int = 750,
    alpha: float = 0.05,
    seed: int = 0,
    trunc_tol: float = DEFAULT_TRUNC_TOL,
) -> GofTestResult:
    """Parametric bootstrap test of ``H0: sample ~ GP(spec)`` with one statistic.

    ``statistic`` is a preset name (``"s1"``..``"s7"``, ``"ad"``, ``"cvm"``)
    or a :class:`WeightScheme`.
    """
    res = bootstrap_tests(sample, spec, [statistic], b, alpha, seed, trunc_tol)
    return next(iter(res.values()))
