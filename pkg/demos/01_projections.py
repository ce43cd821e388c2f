"""Projecting onto the supported convex sets.

Each set exposes the same interface: ``project`` for one point and
``project_many`` for a batch of rows. This demo projects one noisy vector onto
every kind of set and checks the optimality condition against members of the set.
"""

import numpy as np

from convex_lse import Box, CounterexampleSet, IsotonicCone, L1Ball, LassoImage, Subspace

gen = np.random.default_rng(0)
n = 8
y = np.linspace(-1, 1, n) + gen.normal(scale=0.7, size=n)
print("y =", np.round(y, 3))

sets = [
    IsotonicCone(n),
    L1Ball(n, 1.0),
    Box(-0.5 * np.ones(n), 0.5 * np.ones(n)),
    Subspace.random(n, 3, seed=1),
    CounterexampleSet(n),
    LassoImage(gen.choice([-1.0, 1.0], size=(n, 4)), 0.5),
]

for K in sets:
    res = K.project(y)
    members = K.sample(gen, 500)
    # for the nearest point p, every member v has <y - p, v - p> <= 0
    worst = np.max((members - res.point) @ (y - res.point))
    print(f"{K.kind:>14}: distance {res.distance:.4f}, worst certificate {worst:+.1e}")

print("\nisotonic fit:", np.round(IsotonicCone(n).project(y).point, 3))
