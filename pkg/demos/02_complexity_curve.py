"""The localized complexity curve and its maximizer.

For a p-dimensional subspace and mu = 0, the supremum at radius t is t |P z|,
so f(t) = t E|P z| - t^2/2 peaks at t_mu = E|g_p|, the chi mean. The estimate
below should land within a few percent of it. With --plot the curve is written
to subspace_curve.svg.
"""

import math
import sys

import numpy as np

from convex_lse import Subspace, estimate_curve, solve_tmu
from convex_lse.svg import curve_figure

n, p = 100, 25
K = Subspace.random(n, p, seed=0)
mu = np.zeros(n)

est = solve_tmu(K, mu, 2000, seed=0, certify=True)
chi_mean = math.sqrt(2) * math.exp(math.lgamma((p + 1) / 2) - math.lgamma(p / 2))
print(f"t_mu estimate {est.t_mu:.4f}  (95% CI {est.ci_low:.4f} .. {est.ci_high:.4f})")
print(f"chi mean      {chi_mean:.4f}")
print("certificate:", est.bracket)

curve = estimate_curve(K, mu, np.linspace(0.5, 10, 39), 2000, seed=0)
for t, f, se in zip(curve.grid[::4], curve.f_hat[::4], curve.stderr[::4]):
    print(f"  t = {t:5.2f}   f = {f:7.3f} +/- {se:.3f}")

if "--plot" in sys.argv:
    curve_figure(curve).save("subspace_curve.svg")
    print("wrote subspace_curve.svg")
