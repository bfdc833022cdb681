"""Counter-based seed splitting.

Every random stream in an experiment is addressed by a tuple of integer keys
(topology index, module id, batch index, ...) appended to a master seed, so
results do not depend on the order in which work is scheduled.
"""

from __future__ import annotations

import numpy as np

# module ids used as the second key of a stream address
TOPOLOGY = 0
MRT_MC = 1
BOUND = 2
ZF_INTERFERENCE = 3
ZF_RATE = 4
NN_MC = 5


def as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        return np.random.SeedSequence(int(seed.integers(2 ** 63)))
    if isinstance(seed, (int, np.integer)):
        if seed < 0:
            raise ValueError("seed must be nonnegative")
        return np.random.SeedSequence(int(seed))
    raise TypeError(f"cannot derive a seed sequence from {type(seed).__name__}")


def child(seed, *keys: int) -> np.random.SeedSequence:
    base = as_seed_sequence(seed)
    return np.random.SeedSequence(base.entropy, spawn_key=tuple(base.spawn_key) + tuple(keys))


def stream(seed, *keys: int) -> np.random.Generator:
    """Generator for the stream addressed by ``keys`` under ``seed``."""
    return np.random.default_rng(child(seed, *keys))
