"""Rates at desk scale: isotonic n^(1/6), and a set where least squares is suboptimal.

The isotonic sweep fits log t_mu against log n for mu_i = i / n; the slope
should sit near 1/6. The counterexample set is a union of shrinking boxes. At
mu = 0, least squares pays risk of order sqrt(n), while the estimator that
averages all coordinates stays bounded.
"""

import sys

from convex_lse import counterexample_risk, isotonic_sweep
from convex_lse.svg import sweep_figure

iso = isotonic_sweep([64, 128, 256, 512, 1024], samples=400, seed=0)
print(f"isotonic: slope {iso.slope:.3f} +/- {iso.slope_stderr:.3f} (theory 1/6)")
for row in iso.rows:
    print(f"  n = {row['n']:5d}  t_mu = {row['t_mu_hat']:.3f}  risk = {row['risk']:.3f}")

ce = counterexample_risk([256, 1024, 4096], samples=400, seed=0)
print(f"\ncounterexample: LSE risk slope {ce.slope:.3f} (theory 1/2)")
for row in ce.rows:
    print(f"  n = {row['n']:5d}  LSE risk = {row['risk']:7.3f}  averaging risk = {row['params']['mean_risk']:.3f}")

if "--plot" in sys.argv:
    sweep_figure(iso).save("isotonic_rate.svg")
    sweep_figure(ce).save("counterexample_risk.svg")
    print("wrote isotonic_rate.svg and counterexample_risk.svg")
