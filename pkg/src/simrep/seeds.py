"""Deterministic seed derivation and random streams.

Every stochastic operation in this package takes an explicit integer seed.
Sub-streams are derived with ``derive_seed(base, *indices)``, which is a pure
hash of its arguments, so member k of an ensemble, sample i of a dataset,
or view v of an augmented batch each own an independent, reproducible stream.
Generators are backed by Philox (counter-based), so streams with different
keys never collide.
"""

from __future__ import annotations

import numpy as np


def derive_seed(base: int, *indices: int) -> int:
    """Derive a 64-bit sub-seed from a base seed and an index path."""
    ss = np.random.SeedSequence(int(base), spawn_key=tuple(int(i) for i in indices))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def rng_from(seed: int) -> np.random.Generator:
    """Counter-based generator for the given seed."""
    return np.random.Generator(np.random.Philox(int(seed)))
