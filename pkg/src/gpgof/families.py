"""Generalized Poisson families defined through their ``q_k`` coefficients.

A GP law with rate ``lam`` and shape ``theta`` has a pgf ``g`` solving
``g'(t) = lam * G(t; theta) * g(t)`` where ``G(t; theta) = sum_k q_k t^k``.
Equivalently its pmf obeys

    (k + 1) p[k+1] = lam * sum_{u<=k} p[u] q[k-u]

which is how every table in this module is built.  Three families are
supported: Katz (``q_k = theta^k``), Poisson-Poisson (Neyman type A,
``q_k = e^-theta theta^(k+1) / k!``) and Poisson-Binomial with a known
number of trials ``nu``.

Functions whose name ends in ``_rows`` work on a batch of parameter pairs at
once; the bootstrap uses them to refit hundreds of resamples per call.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .counts import CountSample
from .rng import as_generator

PARAM_FLOOR = 1e-6
PMF_HARD_CAP = 10**6
P0_SERIES_TOL = 1e-15


class DomainError(ValueError):
    """Parameters outside the family's parameter space."""


class EstimationError(ValueError):
    """Moment estimation is impossible for the given sample."""


class ComputationError(RuntimeError):
    """A numerical routine failed to converge."""


class Family(enum.Enum):
    KATZ = "katz"
    POISSON_POISSON = "pp"
    POISSON_BINOMIAL = "pb"


@dataclass(frozen=True)
class FamilySpec:
    family: Family
    nu: int | None = None

    def __post_init__(self):
        if self.family is Family.POISSON_BINOMIAL:
            if self.nu is None or int(self.nu) != self.nu or self.nu < 1:
                raise DomainError("Poisson-Binomial needs an integer number of trials nu >= 1")
        elif self.nu is not None:
            raise DomainError(f"{self.family.value} takes no nu")

    @classmethod
    def katz(cls) -> "FamilySpec":
        return cls(Family.KATZ)

    @classmethod
    def poisson_poisson(cls) -> "FamilySpec":
        return cls(Family.POISSON_POISSON)

    @classmethod
    def poisson_binomial(cls, nu: int) -> "FamilySpec":
        return cls(Family.POISSON_BINOMIAL, int(nu))

    @classmethod
    def parse(cls, text: str) -> "FamilySpec":
        """Parse ``katz``, ``pp`` or ``pb:<nu>``."""
        name, _, arg = text.strip().lower().partition(":")
        if name == "katz" and not arg:
            return cls.katz()
        if name == "pp" and not arg:
            return cls.poisson_poisson()
        if name == "pb" and arg:
            try:
                nu = int(arg)
            except ValueError:
                raise DomainError(f"bad number of trials in {text!r}") from None
            return cls.poisson_binomial(nu)
        raise DomainError(f"unknown family {text!r}; expected katz, pp or pb:<nu>")

    def __str__(self) -> str:
        if self.family is Family.POISSON_BINOMIAL:
            return f"pb:{self.nu}"
        return self.family.value


@dataclass(frozen=True)
class FittedParams:
    """Rate ``lam`` and shape ``theta`` (the success probability for PB).

    ``clamped`` records that an estimate was pushed back into the open
    parameter domain.
    """

    lam: float
    theta: float
    clamped: bool = False


def validate(spec: FamilySpec, params: FittedParams) -> None:
    lam, theta = params.lam, params.theta
    if not (math.isfinite(lam) and lam > 0):
        raise DomainError(f"lambda must be > 0, got {lam}")
    if not math.isfinite(theta):
        raise DomainError(f"theta must be finite, got {theta}")
    if spec.family is Family.KATZ:
        if theta <= 0:
            raise DomainError(f"Katz theta must be > 0 (binomial branch unsupported), got {theta}")
        if theta >= 1:
            raise DomainError(f"Katz theta must be < 1, got {theta}")
    elif spec.family is Family.POISSON_POISSON:
        if theta <= 0:
            raise DomainError(f"Poisson-Poisson theta must be > 0, got {theta}")
    else:
        if not 0 < theta < 1:
            raise DomainError(f"Poisson-Binomial p must be in (0, 1), got {theta}")


# -- coefficients ---------------------------------------------------------


def q_rows(spec: FamilySpec, theta: np.ndarray, length: int) -> np.ndarray:
    """``q_k(theta)`` for ``k < length``, one row per entry of ``theta``."""
    theta = np.asarray(theta, dtype=float)[:, None]
    k = np.arange(length)
    if spec.family is Family.KATZ:
        return theta ** k
    if spec.family is Family.POISSON_POISSON:
        return np.exp(-theta + (k + 1) * np.log(theta) - gammaln(k + 1))
    nu = spec.nu
    out = np.zeros((theta.shape[0], length))
    m = min(length, nu)
    if m:
        kk = k[:m]
        log_comb = gammaln(nu) - gammaln(kk + 1) - gammaln(nu - kk)
        out[:, :m] = nu * np.exp(
            log_comb + (kk + 1) * np.log(theta) + (nu - 1 - kk) * np.log1p(-theta)
        )
    return out


def q_coeff(spec: FamilySpec, params: FittedParams, k: int) -> float:
    """Single coefficient ``q_k(theta)``."""
    if k < 0 or int(k) != k:
        raise ValueError("k must be a nonnegative integer")
    validate(spec, params)
    return float(q_rows(spec, np.array([params.theta]), int(k) + 1)[0, -1])


def p0_rows(spec: FamilySpec, lam: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Closed-form ``P(X = 0)`` for each parameter pair."""
    lam = np.asarray(lam, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if spec.family is Family.KATZ:
        return np.exp(lam / theta * np.log1p(-theta))
    if spec.family is Family.POISSON_POISSON:
        return np.exp(lam * np.expm1(-theta))
    return np.exp(-lam * -np.expm1(spec.nu * np.log1p(-theta)))


def p0_series(spec: FamilySpec, params: FittedParams) -> float:
    """``P(X = 0)`` from the generic series ``exp(-lam * sum q_k / (k+1))``.

    Family-agnostic fallback; terms are accumulated until an increment drops
    below 1e-15.
    """
    validate(spec, params)
    total = 0.0
    chunk = 64
    start = 0
    while start < PMF_HARD_CAP:
        q = q_rows(spec, np.array([params.theta]), start + chunk)[0, start:]
        incr = q / (np.arange(start, start + chunk) + 1)
        small = np.nonzero(incr < P0_SERIES_TOL)[0]
        if small.size:
            total += math.fsum(incr[: small[0]])
            return math.exp(-params.lam * total)
        total += math.fsum(incr)
        start += chunk
    raise ComputationError("p0 series did not converge")


# -- pmf ------------------------------------------------------------------


def pmf_rows(spec: FamilySpec, lam, theta, length: int) -> np.ndarray:
    """First ``length`` probabilities for each parameter pair, by recurrence."""
    lam = np.asarray(lam, dtype=float)
    theta = np.asarray(theta, dtype=float)
    q = q_rows(spec, theta, length)
    p = np.zeros((lam.size, length))
    p[:, 0] = p0_rows(spec, lam, theta)
    for k in range(length - 1):
        conv = np.einsum("bu,bu->b", p[:, : k + 1], q[:, k::-1])
        p[:, k + 1] = lam * conv / (k + 1)
    return p


@dataclass(frozen=True)
class PmfTable:
    probs: np.ndarray
    cdf_tail: float

    @property
    def K(self) -> int:
        return int(self.probs.size - 1)

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)


def _extend(spec: FamilySpec, params: FittedParams, probs: np.ndarray, upto: int) -> np.ndarray:
    q = q_rows(spec, np.array([params.theta]), upto)[0]
    out = np.empty(upto)
    start = probs.size
    out[:start] = probs
    for k in range(start - 1, upto - 1):
        out[k + 1] = params.lam * float(np.dot(out[: k + 1], q[k::-1])) / (k + 1)
    return out


def pmf_table(spec: FamilySpec, params: FittedParams, mass_tol: float = 1e-12) -> PmfTable:
    """Tabulate the pmf until the missing mass drops below ``mass_tol``."""
    if not 0 < mass_tol <= 1e-6:
        raise ValueError("mass_tol must lie in (0, 1e-6]")
    validate(spec, params)
    p0 = float(p0_rows(spec, np.array([params.lam]), np.array([params.theta]))[0])
    if p0 <= 0.0:
        raise ComputationError("P(X = 0) underflows; parameters too extreme to tabulate")
    probs = np.array([p0])
    size = 64
    while True:
        size = min(size, PMF_HARD_CAP + 1)
        probs = _extend(spec, params, probs, size)
        tail = 1.0 - math.fsum(probs)
        if tail < mass_tol:
            # trim to the first index where the tail is below tolerance
            csum = np.cumsum(probs)
            stop = int(np.searchsorted(1.0 - csum < mass_tol, True))
            probs = probs[: stop + 1].copy()
            probs.setflags(write=False)
            return PmfTable(probs, 1.0 - math.fsum(probs))
        if size > PMF_HARD_CAP:
            raise ComputationError(f"pmf table did not reach mass_tol={mass_tol} within {PMF_HARD_CAP} terms")
        size *= 2


# -- moments and estimation -----------------------------------------------


def moments(spec: FamilySpec, params: FittedParams) -> tuple[float, float]:
    validate(spec, params)
    lam, theta = params.lam, params.theta
    if spec.family is Family.KATZ:
        return lam / (1 - theta), lam / (1 - theta) ** 2
    if spec.family is Family.POISSON_POISSON:
        return lam * theta, lam * theta * (1 + theta)
    nu = spec.nu
    return lam * nu * theta, lam * nu * theta * (1 - theta + nu * theta)


def sample_moment_rows(freq: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean and unbiased variance from frequency rows.

    Uses exact integer power sums, so zero padding of ``freq`` on the right
    does not change a single bit of the result.
    """
    freq = np.asarray(freq, dtype=np.int64)
    k = np.arange(freq.shape[1], dtype=np.int64)
    s1 = freq @ k
    s2 = freq @ (k * k)
    mean = s1 / n
    if n < 2:
        return mean, np.zeros_like(mean)
    num = (n * s2 - s1 * s1).astype(float)
    return mean, num / (n * (n - 1))


def fit_rows(spec: FamilySpec, mean: np.ndarray, var: np.ndarray):
    """Moment estimates with clamping; returns ``(lam, theta, clamped)``.

    ``theta`` is clamped into ``[1e-6, 1 - 1e-6]`` (lower bound only for
    Poisson-Poisson) and ``lam`` is then solved from the mean equation, so a
    clamped fit still reproduces the sample mean.  Rows with a zero mean get
    ``lam = 1e-6``.
    """
    mean = np.asarray(mean, dtype=float)
    var = np.asarray(var, dtype=float)
    safe_mean = np.where(mean > 0, mean, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        if spec.family is Family.KATZ:
            raw = np.where(var > 0, 1.0 - safe_mean / np.where(var > 0, var, 1.0), -np.inf)
            theta = np.clip(raw, PARAM_FLOOR, 1 - PARAM_FLOOR)
            lam = mean * (1 - theta)
        elif spec.family is Family.POISSON_POISSON:
            raw = var / safe_mean - 1.0
            theta = np.maximum(raw, PARAM_FLOOR)
            lam = mean / theta
        else:
            nu = spec.nu
            raw = (var / safe_mean - 1.0) / (nu - 1) if nu > 1 else np.full_like(mean, np.nan)
            theta = np.clip(np.nan_to_num(raw, nan=PARAM_FLOOR), PARAM_FLOOR, 1 - PARAM_FLOOR)
            lam = mean / (nu * theta)
    clamped = (theta != raw) | (mean <= 0)
    lam = np.where(mean > 0, np.maximum(lam, PARAM_FLOOR), PARAM_FLOOR)
    return lam, theta, clamped


def estimate_moments(spec: FamilySpec, sample: CountSample, strict: bool = True) -> FittedParams:
    """Method-of-moments fit of ``spec`` to ``sample``.

    With ``strict=True`` a sample with zero mean or zero variance raises
    :class:`EstimationError`; otherwise the clamped fallback is returned with
    ``clamped=True``.  Over- or under-dispersion outside the domain is always
    clamped and flagged rather than raised.
    """
    if sample.n < 2:
        raise EstimationError("need at least two observations")
    if spec.family is Family.POISSON_BINOMIAL and spec.nu < 2:
        raise EstimationError("Poisson-Binomial with nu = 1 is not identifiable by moments")
    mean, var = sample_moment_rows(sample.freq[None, :], sample.n)
    if strict:
        if mean[0] == 0:
            raise EstimationError("sample mean is zero")
        if var[0] == 0:
            raise EstimationError("sample variance is zero")
    lam, theta, clamped = fit_rows(spec, mean, var)
    return FittedParams(float(lam[0]), float(theta[0]), bool(clamped[0]))


# -- sampling -------------------------------------------------------------


class InverseCdfSampler:
    """Inverse-CDF draws from one fitted law, extending the table on demand."""

    def __init__(self, spec: FamilySpec, params: FittedParams, mass_tol: float = 1e-12):
        self.spec = spec
        self.params = params
        self.mass_tol = mass_tol
        self.cdf = pmf_table(spec, params, mass_tol).cdf()

    def _cover(self, umax: float) -> None:
        tol = self.mass_tol
        while self.cdf[-1] <= umax and tol > 1e-15:
            tol /= 1e3
            self.cdf = pmf_table(self.spec, self.params, max(tol, 1e-15)).cdf()

    def transform(self, u: np.ndarray) -> np.ndarray:
        if u.size and u.max() >= self.cdf[-1]:
            self._cover(float(u.max()))
        idx = np.searchsorted(self.cdf, u, side="right")
        # u above the last representable cdf value; mass there is < 1e-15
        return np.minimum(idx, self.cdf.size - 1)

    def draw(self, n: int, rng) -> np.ndarray:
        return self.transform(as_generator(rng).random(n))


def sample(spec: FamilySpec, params: FittedParams, n: int, rng) -> CountSample:
    """``n`` iid draws from ``GP(spec, params)``; deterministic given ``rng``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return CountSample(InverseCdfSampler(spec, params).draw(n, rng))
