"""Seed handling.

Every run starts from one integer root seed. Independent streams for trial
``i`` (or any tuple of counters) are derived by putting the counters in the
``spawn_key`` of a :class:`numpy.random.SeedSequence`, so trial ``i`` gets the
same stream no matter which process or in what order it runs.
"""

import numpy as np


def derive_rng(root_seed, *counters):
    """Generator for the stream identified by ``(root_seed, *counters)``."""
    seq = np.random.SeedSequence(int(root_seed), spawn_key=tuple(int(c) for c in counters))
    return np.random.Generator(np.random.PCG64(seq))


def derive_seed(root_seed, *counters):
    """A plain 63-bit integer seed for the same derived stream."""
    seq = np.random.SeedSequence(int(root_seed), spawn_key=tuple(int(c) for c in counters))
    return int(seq.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))


def as_rng(rng_or_seed):
    if isinstance(rng_or_seed, np.random.Generator):
        return rng_or_seed
    return derive_rng(rng_or_seed)
