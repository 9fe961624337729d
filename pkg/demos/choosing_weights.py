"""
Choosing between the S4 and S5 weights
======================================

S4 weights are a NB(2, 0.75) pmf and concentrate on the first few
coefficients d(0), d(1), d(2); S5 (NB(4, 0.25)) spreads weight further out.
The diagnostic below averages d(k) over many samples from a suspected
alternative and recommends S5 when the departure sits at larger k.
"""

from gpgof import FamilySpec, run_diagnostics

katz, pp = FamilySpec.katz(), FamilySpec.poisson_poisson()
cases = [
    (katz, "pp:1,2"),
    (katz, "bb:6,2"),
    (katz, "maxkdu:2,0.5,8"),
    (katz, "mkdu:8,0.5,2,0.5"),
    (pp, "nb:2,0.5"),
    (pp, "pb:1,3,0.75"),
]

print(f"{'null':<6}{'alternative':<20}" + "".join(f"{k:>7}" for k in range(9)) + "    max  at  pick")
for null, alt in cases:
    d = run_diagnostics(null, alt, n=1000, reps=1000, seed=3)
    row = "".join(f"{v:7.3f}" for v in d.avg_abs_d)
    print(f"{str(null):<6}{alt:<20}{row}  {d.max_value:5.3f} {d.argmax_k:3d}  {d.recommendation.name}")
