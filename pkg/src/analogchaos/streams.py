"""Reproducible random streams keyed by (master seed, purpose, labels...).

Every stream is a Philox counter-based generator seeded from a
``SeedSequence`` whose spawn key carries the purpose and the caller's labels,
so any (instance, realization) stream can be rebuilt directly without
replaying the ones before it.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

PURPOSES = {
    "instance": 1,
    "noise": 2,
    "solver": 3,
    "bootstrap": 4,
    "houdayer": 5,
}

_TWO53 = float(2**53)


def seed_sequence(master_seed: int, purpose: str, *labels: int) -> np.random.SeedSequence:
    if master_seed < 0 or any(int(x) < 0 for x in labels):
        raise ValueError("seeds and stream labels must be non-negative")
    key = (PURPOSES[purpose],) + tuple(int(x) for x in labels)
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=key)


def generator(master_seed: int, purpose: str, *labels: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed_sequence(master_seed, purpose, *labels)))


def int_seed(master_seed: int, purpose: str, *labels: int) -> int:
    """A 63-bit integer seed for consumers that need a plain int (numba kernels)."""
    state = seed_sequence(master_seed, purpose, *labels).generate_state(2, np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1])) & ((1 << 63) - 1)


def open_uniforms(gen: np.random.Generator, size: int) -> np.ndarray:
    """Uniforms on the open interval (0, 1) with 53-bit resolution."""
    k = gen.integers(0, 2**53, size=size, dtype=np.uint64)
    return (k.astype(np.float64) + 0.5) / _TWO53


def standard_normals(gen: np.random.Generator, size: int) -> np.ndarray:
    """Standard normal variates by inverse-CDF transform of open uniforms."""
    return ndtri(open_uniforms(gen, size))
