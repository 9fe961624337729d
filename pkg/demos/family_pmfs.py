"""
The three count families and their pmf recurrence
==================================================

Every law handled by gpgof satisfies

    (k + 1) p[k + 1] = lam * sum_{u <= k} p[u] q[k - u](theta)

for a family-specific coefficient sequence q.  Here we tabulate each family,
check the recurrence numerically and compare the moments with the closed forms.
"""

import numpy as np
from scipy import stats

from gpgof import FamilySpec, FittedParams, moments, pmf_table, q_coeff

laws = [
    (FamilySpec.katz(), FittedParams(2.0, 0.5)),
    (FamilySpec.poisson_poisson(), FittedParams(1.0, 2.0)),
    (FamilySpec.poisson_binomial(3), FittedParams(1.0, 0.75)),
]

for spec, params in laws:
    table = pmf_table(spec, params)
    p = table.probs
    print(f"{spec}  lam={params.lam:g} theta={params.theta:g}")
    print("  p[0..7] =", np.array2string(p[:8], precision=5))
    print(f"  table length {p.size}, mass left in the tail {table.cdf_tail:.1e}")

    # the recurrence, evaluated directly
    q = np.array([q_coeff(spec, params, k) for k in range(p.size)])
    residual = [(k + 1) * p[k + 1] - params.lam * np.dot(p[: k + 1], q[k::-1]) for k in range(p.size - 1)]
    print(f"  largest recurrence residual {np.max(np.abs(residual)):.1e}")

    k = np.arange(p.size)
    mean = np.sum(k * p)
    var = np.sum(k * k * p) - mean**2
    print("  mean/variance from the table  %.6f / %.6f" % (mean, var))
    print("  mean/variance closed form     %.6f / %.6f" % moments(spec, params))
    print()

# Katz with 0 < theta < 1 is a negative binomial law
katz = pmf_table(FamilySpec.katz(), FittedParams(2.0, 0.5)).probs
nb = stats.nbinom.pmf(np.arange(katz.size), 2.0 / 0.5, 0.5)
print("Katz(2, 0.5) vs NB(size 4, p 0.5): max difference", np.max(np.abs(katz - nb)))
