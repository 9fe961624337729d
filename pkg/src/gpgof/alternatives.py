"""Samplers for the alternative count laws used in the power study.

Alternatives are addressed by a short textual descriptor ``name:p1,p2,...``:

=========  =====================  ==============================================
name       parameters             law
=========  =====================  ==============================================
bb         v, a                   X | p ~ Bin(v, p), p ~ Beta(a, a)
du         nu                     uniform on {0, ..., nu}
mpdu       nu, eps                eps * Poisson(1) + (1 - eps) * DU(nu)
mpbdu      lam, v, p, nu, eps     eps * PB(lam, v, p) + (1 - eps) * DU(nu)
pb         lam, v, p              sum of N ~ Poisson(lam) Bin(v, p) variables
nb         v, p                   failures before the v-th success
mkdu       lam, theta, nu, eps    eps * Katz(lam, theta) + (1 - eps) * DU(nu)
mkp        lam, theta, nu, eps    eps * Katz(lam, theta) + (1 - eps) * Poisson(nu)
mnbp       lam, p, nu, eps        eps * NB(lam, p) + (1 - eps) * Poisson(nu)
maxkdu     lam, theta, nu         max(Katz(lam, theta), DU(nu))
poisson    lam                    Poisson(lam)
katz       lam, theta             Katz(lam, theta), 0 < theta < 1
pp         lam, theta             Poisson-Poisson (Neyman type A)
=========  =====================  ==============================================

In every mixture ``eps`` is the probability of the first-named component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .counts import CountSample
from .families import DomainError, FamilySpec, FittedParams, InverseCdfSampler, validate
from .rng import as_generator

# name -> (display name, parameter roles)
# roles: "int1" integer >= 1, "int0" integer >= 0, "pos" > 0, "prob" in (0, 1),
# "eps" in [0, 1], "katz" Katz theta in (0, 1)
KINDS = {
    "bb": ("BB", ("int1", "pos")),
    "du": ("DU", ("int0",)),
    "mpdu": ("MPDU", ("int0", "eps")),
    "mpbdu": ("MPBDU", ("pos", "int1", "prob", "int0", "eps")),
    "pb": ("PB", ("pos", "int1", "prob")),
    "nb": ("NB", ("pos", "prob")),
    "mkdu": ("MKDU", ("pos", "katz", "int0", "eps")),
    "mkp": ("MKP", ("pos", "katz", "pos", "eps")),
    "mnbp": ("MNBP", ("pos", "prob", "pos", "eps")),
    "maxkdu": ("MaxKDU", ("pos", "katz", "int0")),
    "poisson": ("P", ("pos",)),
    "katz": ("Katz", ("pos", "katz")),
    "pp": ("PP", ("pos", "pos")),
}

GRAMMAR = "name:param1,param2,...  with name in {" + ", ".join(KINDS) + "}, e.g. mkdu:4,0.5,1,0.25"


def _fmt(x: float) -> str:
    return f"{x:g}"


@dataclass(frozen=True)
class AlternativeSpec:
    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown alternative {self.kind!r}; grammar: {GRAMMAR}")
        roles = KINDS[self.kind][1]
        if len(self.params) != len(roles):
            raise DomainError(f"{self.kind} takes {len(roles)} parameters, got {len(self.params)}")
        for role, x in zip(roles, self.params):
            ok = {
                "int1": x == int(x) and x >= 1,
                "int0": x == int(x) and x >= 0,
                "pos": x > 0,
                "prob": 0 < x < 1,
                "eps": 0 <= x <= 1,
                "katz": 0 < x < 1,
            }[role]
            if not (np.isfinite(x) and ok):
                raise DomainError(f"invalid parameter {x!r} for {self.kind} ({role})")

    @classmethod
    def parse(cls, text: str) -> "AlternativeSpec":
        name, sep, rest = text.strip().partition(":")
        name = name.lower()
        if name not in KINDS or not sep:
            raise DomainError(f"cannot parse alternative {text!r}; grammar: {GRAMMAR}")
        try:
            params = tuple(float(tok) for tok in rest.split(","))
        except ValueError:
            raise DomainError(f"non-numeric parameter in {text!r}; grammar: {GRAMMAR}") from None
        return cls(name, params)

    @property
    def descriptor(self) -> str:
        return f"{self.kind}:" + ",".join(_fmt(x) for x in self.params)

    @property
    def label(self) -> str:
        return f"{KINDS[self.kind][0]}(" + ",".join(_fmt(x) for x in self.params) + ")"

    def __str__(self) -> str:
        return self.descriptor


def _null(spec, lam, theta, n, rng):
    params = FittedParams(lam, theta)
    validate(spec, params)
    return InverseCdfSampler(spec, params).draw(n, rng)


def _katz(lam, theta, n, rng):
    return _null(FamilySpec.katz(), lam, theta, n, rng)


def _du(nu, n, rng):
    return rng.integers(0, int(nu) + 1, size=n)


def _pb(lam, v, p, n, rng):
    stops = rng.poisson(lam, size=n)
    return rng.binomial(stops * int(v), p)


def _mix(eps, first, second, n, rng):
    pick = rng.random(n) < eps
    a = first(n, rng)
    b = second(n, rng)
    return np.where(pick, a, b)


def _draw(alt: AlternativeSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    k, p = alt.kind, alt.params
    if k == "bb":
        v, a = p
        g1 = rng.standard_gamma(a, size=n)
        g2 = rng.standard_gamma(a, size=n)
        return rng.binomial(int(v), g1 / (g1 + g2))
    if k == "du":
        return _du(p[0], n, rng)
    if k == "mpdu":
        nu, eps = p
        return _mix(eps, lambda m, r: r.poisson(1.0, size=m), lambda m, r: _du(nu, m, r), n, rng)
    if k == "mpbdu":
        lam, v, pp, nu, eps = p
        return _mix(eps, lambda m, r: _pb(lam, v, pp, m, r), lambda m, r: _du(nu, m, r), n, rng)
    if k == "pb":
        return _pb(*p, n, rng)
    if k == "nb":
        v, pp = p
        return rng.negative_binomial(v, pp, size=n)
    if k == "mkdu":
        lam, theta, nu, eps = p
        return _mix(eps, lambda m, r: _katz(lam, theta, m, r), lambda m, r: _du(nu, m, r), n, rng)
    if k == "mkp":
        lam, theta, nu, eps = p
        return _mix(eps, lambda m, r: _katz(lam, theta, m, r), lambda m, r: r.poisson(nu, size=m), n, rng)
    if k == "mnbp":
        lam, pp, nu, eps = p
        return _mix(
            eps, lambda m, r: r.negative_binomial(lam, pp, size=m), lambda m, r: r.poisson(nu, size=m), n, rng
        )
    if k == "maxkdu":
        lam, theta, nu = p
        return np.maximum(_katz(lam, theta, n, rng), _du(nu, n, rng))
    if k == "poisson":
        return rng.poisson(p[0], size=n)
    if k == "katz":
        return _katz(p[0], p[1], n, rng)
    if k == "pp":
        return _null(FamilySpec.poisson_poisson(), p[0], p[1], n, rng)
    raise AssertionError(k)


def sample_alt(alt: AlternativeSpec | str, n: int, rng) -> CountSample:
    """``n`` iid draws from ``alt``; deterministic given the generator state."""
    if isinstance(alt, str):
        alt = AlternativeSpec.parse(alt)
    if n < 1:
        raise ValueError("n must be >= 1")
    return CountSample(_draw(alt, int(n), as_generator(rng)))
