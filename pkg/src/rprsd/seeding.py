"""Seed derivation for schedule-independent Monte Carlo streams.

Every random object in the package is generated from a 64-bit seed. Trial
seeds are derived from ``(base_seed, m, i)`` with a splitmix64 mixing chain so
that a trial's stream depends only on its coordinates, never on the order in
which trials are executed.
"""

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x):
    """One splitmix64 output step applied to the 64-bit integer ``x``."""
    z = (x + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(*parts):
    """Mix an ordered tuple of non-negative integers into one 64-bit seed.

    >>> derive_seed(1, 2) != derive_seed(2, 1)
    True
    """
    h = 0x6A09E667F3BCC909
    for p in parts:
        p = int(p)
        if p < 0:
            raise ValueError(f"seed components must be non-negative, got {p}")
        h = splitmix64(h ^ (p & _MASK))
    return h


def check_seed(seed):
    seed = int(seed)
    if not 0 <= seed <= _MASK:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def make_rng(seed):
    """Counter-based Philox generator keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=check_seed(seed)))
