"""Weighted coefficient statistics ``S_{n,w}``.

Plugging the empirical pgf into the defining differential equation leaves a
power series whose coefficients are

    d(k) = (k + 1) p_hat[k+1] - lam * sum_{u<=k} p_hat[u] q[k-u](theta)

and the test statistic is ``S = sum_k w_k d(k)^2``.  Past the sample maximum
``M1`` the first term vanishes and ``|d(k)|`` decays geometrically (Katz),
factorially (Poisson-Poisson) or hits zero (Poisson-Binomial), so the series
is cut once five consecutive weighted terms fall below ``trunc_tol`` and an
explicit bound on the discarded remainder is reported.
"""

from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .counts import CountSample
from .families import (
    EstimationError,
    Family,
    FamilySpec,
    FittedParams,
    estimate_moments,
    q_rows,
    validate,
)
from .rng import substream

DEFAULT_TRUNC_TOL = 1e-14
RUN_LENGTH = 5
TAIL_CAP = 10**4
DIAG_K = 9  # coefficients k = 0..8 are reported
DIAG_EXTRA = 10


@dataclass(frozen=True)
class WeightScheme:
    """Constant weights or a negative binomial pmf, optionally scaled.

    ``scale`` must lie in (0, 1] so that every weight stays in (0, 1].
    """

    kind: str = "constant"
    nu: int | None = None
    p: float | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "negbin"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "negbin" and not (self.nu and self.nu >= 1 and 0 < self.p < 1):
            raise ValueError("negative binomial weights need nu >= 1 and 0 < p < 1")
        if not 0 < self.scale <= 1:
            raise ValueError("scale must lie in (0, 1]")

    @classmethod
    def negbin(cls, nu: int, p: float) -> "WeightScheme":
        return cls("negbin", int(nu), float(p))

    def values(self, length: int) -> np.ndarray:
        k = np.arange(length)
        if self.kind == "constant":
            return np.full(length, self.scale)
        return self.scale * stats.nbinom.pmf(k, self.nu, self.p)

    def __str__(self) -> str:
        base = "constant" if self.kind == "constant" else f"NB({self.nu},{self.p:g})"
        return base if self.scale == 1 else f"{self.scale:g}*{base}"


PRESETS = {
    "s1": WeightScheme(),
    "s2": WeightScheme.negbin(2, 0.25),
    "s3": WeightScheme.negbin(2, 0.5),
    "s4": WeightScheme.negbin(2, 0.75),
    "s5": WeightScheme.negbin(4, 0.25),
    "s6": WeightScheme.negbin(4, 0.5),
    "s7": WeightScheme.negbin(4, 0.75),
}


def weight(scheme: WeightScheme, k: int) -> float:
    if k < 0:
        raise ValueError("k must be >= 0")
    return float(scheme.values(int(k) + 1)[-1])


def resolve_weights(weights) -> WeightScheme:
    if weights is None:
        return PRESETS["s1"]
    if isinstance(weights, WeightScheme):
        return weights
    try:
        return PRESETS[str(weights).lower()]
    except KeyError:
        raise ValueError(f"unknown weight preset {weights!r}") from None


# -- batched coefficient rows ---------------------------------------------


class DhatRows:
    """``d(k)`` for a batch of samples, each with its own fitted parameters.

    ``freq`` holds frequency rows (zero padded on the right).  Columns are
    computed far enough that every row meets the truncation rule under
    constant weights; since every admissible weight is at most one, any other
    scheme truncates no later.
    """

    def __init__(self, spec, freq, n, lam, theta, trunc_tol=DEFAULT_TRUNC_TOL, min_length=0):
        if not trunc_tol > 0:
            raise ValueError("trunc_tol must be > 0")
        self.spec = spec
        self.freq = np.asarray(freq, dtype=np.int64)
        self.n = int(n)
        self.lam = np.asarray(lam, dtype=float)
        self.theta = np.asarray(theta, dtype=float)
        self.trunc_tol = trunc_tol
        rows, width = self.freq.shape
        nz = self.freq > 0
        self.m1 = width - 1 - np.argmax(nz[:, ::-1], axis=1)
        lo = self.m1.copy()
        if spec.family is Family.POISSON_POISSON:
            # keeps theta / (K - M1 + 1) < 1 so the factorial majorant applies
            lo = lo + np.floor(self.theta).astype(np.int64)
        self.lo = lo
        length = max(int(self.lo.max()) + 64, width + 1, min_length)
        if spec.family is Family.POISSON_BINOMIAL:
            length = max(length, int(self.m1.max()) + spec.nu + RUN_LENGTH + 1)
        cap = int(self.lo.max()) + TAIL_CAP + RUN_LENGTH + 1
        while True:
            length = min(length, cap)
            self.values = self._compute(length)
            stop = self._stops(np.ones(length))
            if np.all(stop >= 0) or length >= cap:
                break
            length *= 2

    def _compute(self, length: int) -> np.ndarray:
        rows, width = self.freq.shape
        q = q_rows(self.spec, self.theta, length)
        kk = np.arange(1, width)
        d = np.zeros((rows, length))
        d[:, : width - 1] = (kk * self.freq[:, 1:]) / self.n
        phat = self.freq / self.n
        acc = np.zeros((rows, length))
        for u in range(width):
            acc[:, u:] += phat[:, u, None] * q[:, : length - u]
        d -= self.lam[:, None] * acc
        return d

    def _stops(self, w: np.ndarray) -> np.ndarray:
        """Last retained index per row, or -1 when the rule is not met."""
        terms = w * self.values**2
        small = (terms < self.trunc_tol).astype(np.int64)
        csum = np.concatenate([np.zeros((small.shape[0], 1), np.int64), np.cumsum(small, axis=1)], axis=1)
        run = csum[:, RUN_LENGTH:] - csum[:, :-RUN_LENGTH]  # run[k] = #small in k..k+4
        k = np.arange(run.shape[1])
        ok = (run == RUN_LENGTH) & (k[None, :] >= self.lo[:, None])
        found = ok.any(axis=1)
        first = np.argmax(ok, axis=1)
        return np.where(found, first + RUN_LENGTH - 1, -1)

    def truncation(self, w: np.ndarray) -> np.ndarray:
        stop = self._stops(w)
        return np.where(stop >= 0, stop, self.values.shape[1] - 1)

    def tail_bounds(self, stop: np.ndarray, wmax: float) -> np.ndarray:
        rows = np.arange(stop.size)
        dk2 = self.values[rows, stop] ** 2
        fam = self.spec.family
        if fam is Family.KATZ:
            r2 = self.theta**2
            return wmax * dk2 * r2 / (1 - r2)
        if fam is Family.POISSON_POISSON:
            r2 = (self.theta / (stop - self.m1 + 1)) ** 2
            return np.where(r2 < 1, wmax * dk2 * r2 / (1 - r2), np.inf)
        # PB coefficients vanish beyond M1 + nu - 1; the remainder is finite
        sq = self.values**2
        after = np.cumsum(sq[:, ::-1], axis=1)[:, ::-1]
        nxt = np.minimum(stop + 1, sq.shape[1] - 1)
        rest = np.where(stop + 1 < sq.shape[1], after[rows, nxt], 0.0)
        return wmax * rest

    def weighted(self, weights: WeightScheme):
        """``(statistic, k_trunc, tail_bound)`` arrays for one weight scheme."""
        w = weights.values(self.values.shape[1])
        stop = self.truncation(w)
        csum = np.cumsum(w * self.values**2, axis=1)
        stat = csum[np.arange(stop.size), stop]
        return stat, stop, self.tail_bounds(stop, weights.scale)


def _single_rows(sample: CountSample, spec: FamilySpec, params: FittedParams, trunc_tol, min_length=0):
    validate(spec, params)
    return DhatRows(
        spec,
        sample.freq[None, :],
        sample.n,
        np.array([params.lam]),
        np.array([params.theta]),
        trunc_tol,
        min_length,
    )


@dataclass(frozen=True)
class DhatVector:
    values: np.ndarray
    k_trunc: int
    tail_bound: float


def dhat(
    sample: CountSample,
    spec: FamilySpec,
    params: FittedParams,
    weights=None,
    trunc_tol: float = DEFAULT_TRUNC_TOL,
) -> DhatVector:
    """Coefficients ``d(0..K)`` truncated by the rule for ``weights``."""
    weights = resolve_weights(weights)
    rows = _single_rows(sample, spec, params, trunc_tol)
    _, stop, bound = rows.weighted(weights)
    k = int(stop[0])
    return DhatVector(rows.values[0, : k + 1].copy(), k, float(bound[0]))


def statistic(
    sample: CountSample,
    spec: FamilySpec,
    params: FittedParams,
    weights=None,
    trunc_tol: float = DEFAULT_TRUNC_TOL,
) -> float:
    """``S_{n,w} = sum_k w_k d(k)^2``, within ``tail_bound`` of the full series."""
    weights = resolve_weights(weights)
    stat, _, _ = _single_rows(sample, spec, params, trunc_tol).weighted(weights)
    return float(stat[0])


# -- weight diagnostics ---------------------------------------------------


class Recommendation(enum.Enum):
    S4 = "s4"
    S5 = "s5"


@dataclass(frozen=True)
class WeightDiagnostics:
    """Replicate-averaged coefficients and the S4/S5 choice.

    ``avg_abs_d[k]`` is the absolute value of the average of ``d(k)`` over
    replicates, for k = 0..8.  Sampling noise cancels in the average, so this
    estimates ``|d(k)|`` at the limiting parameters; ``mean_abs_d`` keeps the
    noisier average of ``|d(k)|`` for reference.  ``max_value``/``argmax_k``
    are taken over the wider range ``0..max(M1) + 10`` held in
    ``avg_abs_wide``.
    """

    avg_abs_d: np.ndarray
    avg_abs_wide: np.ndarray
    mean_abs_d: np.ndarray
    max_value: float
    argmax_k: int
    recommendation: Recommendation
    reps_used: int
    failures: int


def recommend(avg_abs: np.ndarray) -> tuple[float, int, Recommendation]:
    """S5 when ``|d(0)|`` is under half the peak and the peak sits past k = 2."""
    argmax = int(np.argmax(avg_abs))
    peak = float(avg_abs[argmax])
    if avg_abs[0] < 0.5 * peak and argmax > 2:
        return peak, argmax, Recommendation.S5
    return peak, argmax, Recommendation.S4


def _diag_chunk(args):
    spec, alt, n, seed, start, stop, trunc_tol = args
    from .alternatives import sample_alt

    freqs, lams, thetas = [], [], []
    failures = 0
    for r in range(start, stop):
        data = sample_alt(alt, n, substream(seed, r))
        try:
            fit = estimate_moments(spec, data)
        except EstimationError:
            failures += 1
            continue
        freqs.append(data.freq)
        lams.append(fit.lam)
        thetas.append(fit.theta)
    if not freqs:
        return None, 0, failures
    width = max(f.size for f in freqs)
    freq = np.zeros((len(freqs), width), dtype=np.int64)
    for i, f in enumerate(freqs):
        freq[i, : f.size] = f
    return (freq, np.array(lams), np.array(thetas)), len(freqs), failures


def diagnostics(spec, alt, n: int, reps: int, seed: int = 0, workers: int = 1,
                trunc_tol: float = DEFAULT_TRUNC_TOL, chunk: int = 500) -> WeightDiagnostics:
    """Simulate ``reps`` samples of size ``n`` from ``alt`` and average ``|d(k)|``.

    Each replicate ``r`` draws from its own stream ``(seed, r)``; replicates
    whose moment fit fails are skipped and counted.
    """
    from .alternatives import AlternativeSpec

    if n < 2:
        raise ValueError("n must be >= 2")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if isinstance(alt, str):
        alt = AlternativeSpec.parse(alt)
    jobs = [(spec, alt, n, seed, s, min(s + chunk, reps), trunc_tol) for s in range(0, reps, chunk)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_diag_chunk, jobs))
    else:
        parts = [_diag_chunk(job) for job in jobs]

    batches = [p[0] for p in parts if p[0] is not None]
    used = sum(p[1] for p in parts)
    failures = sum(p[2] for p in parts)
    if not batches:
        raise EstimationError(f"moment fit failed in all {reps} replicates")
    wide = max(int(b[0].shape[1]) - 1 for b in batches) + DIAG_EXTRA + 1
    total = np.zeros(wide)
    total_abs = np.zeros(wide)
    for freq, lam, theta in batches:
        vals = DhatRows(spec, freq, n, lam, theta, trunc_tol, min_length=wide).values[:, :wide]
        total += vals.sum(axis=0)
        total_abs += np.abs(vals).sum(axis=0)
    avg = np.abs(total / used)
    peak, argmax, rec = recommend(avg)
    return WeightDiagnostics(
        avg[:DIAG_K].copy(), avg, total_abs[:DIAG_K] / used, peak, argmax, rec, used, failures
    )
