"""
A small size and power study
============================

Each cell draws N datasets from an alternative and records how often the
bootstrap test rejects the Katz null at the 5% level.  The Katz(2, 0.5) row
estimates the size; the others estimate power.  N and B are far below what a
publication-grade table needs, so expect a few points of Monte Carlo noise.
"""

import sys
import tempfile

from gpgof import SimConfig, run_experiment

config = SimConfig.from_ini(
    """
[experiment]
null = katz
alternatives = katz:2,0.5; du:2; mkdu:8,0.5,2,0.5; bb:6,2
n = 50, 100
statistics = s1, s4, s5, ad, cvm
replicates = 100
bootstrap = 199
seed = 11
"""
)

result = run_experiment(config)

stats = config.statistics
print(f"{'alternative':<20}{'n':>5}" + "".join(f"{s:>7}" for s in stats))
for (alt, n), cell in result.cells.items():
    print(f"{alt:<20}{n:>5}" + "".join(f"{cell.pct(s):7.0f}" for s in stats))

out = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="gpgof-")
csv_path, json_path = result.write(out)
print(f"\nwrote {csv_path} and {json_path}")
