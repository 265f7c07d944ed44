"""Reproducible random streams derived from one 64-bit seed.

Each sub-task gets its own Philox (counter-based) generator keyed by the
user seed plus a spawn key, so streams are independent and do not depend on
the order in which tasks run.
"""

import numpy as np

MAX_SEED = 2**64 - 1


def check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    if not 0 <= int(seed) <= MAX_SEED:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    return int(seed)


def stream(seed, *key):
    """Generator for sub-task ``key`` (a tuple of non-negative ints) under ``seed``."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
