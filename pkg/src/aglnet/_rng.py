"""Seed derivation so that independent tasks get independent, order-free streams."""

import numpy as np


def derive_seed(seed: int, *keys: int) -> int:
    """Map ``(seed, *keys)`` to a 63-bit integer seed.

    Uses :class:`numpy.random.SeedSequence` spawn keys, so the stream for task
    ``keys`` does not depend on how many other tasks were drawn before it.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    if not keys:
        return np.random.default_rng(int(seed))
    return np.random.default_rng(derive_seed(seed, *keys))
