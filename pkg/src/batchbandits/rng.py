"""Reproducible random streams.

Every replication gets its own Philox (counter-based) generator keyed by
``(master_seed, replication)``, so a replication's draws never depend on
how many workers run or in which order replications are scheduled.
"""
from __future__ import annotations

import numpy as np


def make_rng(seed: int, replication: int = 0, *substream: int) -> np.random.Generator:
    """Return the generator for ``(seed, replication, *substream)``."""
    if seed < 0 or replication < 0:
        raise ValueError("seed and replication index must be non-negative")
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(replication, *substream))
    return np.random.Generator(np.random.Philox(seq))


def as_rng(rng) -> np.random.Generator:
    """Coerce ``None``/int/Generator into a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return np.random.default_rng()
    return make_rng(int(rng))
