"""Counter-based Gaussian streams.

Sample ``i`` of a run seeded with ``seed`` is always drawn from its own Philox
stream keyed by ``seed`` with the sample index in the high counter word, so a
draw never depends on how samples are split across workers.
"""

import numpy as np

SEED_MASK = (1 << 64) - 1


def stream(seed, index):
    """Return the generator for sample ``index`` of run ``seed``."""
    if index < 0:
        raise ValueError("sample index must be nonnegative")
    key = int(seed) & SEED_MASK
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, 0, int(index)]))


def gaussian_rows(seed, n, count, start=0):
    """Standard normal matrix of shape (count, n); row k is sample ``start + k``."""
    out = np.empty((count, n))
    for k in range(count):
        out[k] = stream(seed, start + k).standard_normal(n)
    return out


def derived_seed(seed, *labels):
    """Deterministically mix integer labels into a seed (for designs, subspaces, ...)."""
    ss = np.random.SeedSequence([int(seed) & SEED_MASK, *[int(v) for v in labels]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
