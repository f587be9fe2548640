from __future__ import annotations

import numpy as np

from ..errors import SolverGuardError
from ..model import Instance, energies
from ._kernels import gray_enumerate
from .base import ENERGY_TOL, SolveResult, kernel_arrays

MAX_EXHAUSTIVE_SPINS = 30
MAX_STORED_MINIMIZERS = 1 << 20


def _decode(codes: np.ndarray, n: int) -> np.ndarray:
    bits = (codes[:, None] >> np.arange(n)) & 1
    return (1 - 2 * bits).astype(np.int8)


def exhaustive_solve(instance: Instance, max_spins: int = MAX_EXHAUSTIVE_SPINS) -> tuple[SolveResult, np.ndarray]:
    """Enumerate all ``2^n`` states; return the optimum and every minimiser.

    The second return value is a ``(k, n)`` array of all ground states in
    lexicographic order of their spin pattern (``+1`` before ``-1``).
    """
    n = instance.n_spins
    if n > max_spins:
        raise SolverGuardError(f"exhaustive search limited to {max_spins} spins, got {n}")
    sites, _, couplings, offsets, ids = kernel_arrays(instance)
    _, codes, count, overflow = gray_enumerate(
        sites, couplings, offsets, ids, n, MAX_STORED_MINIMIZERS, ENERGY_TOL
    )
    if overflow:
        raise SolverGuardError("ground-state degeneracy exceeds the storable limit")
    configs = _decode(codes[:count], n)
    exact_e = energies(instance, configs)
    best = float(exact_e.min())
    ground = configs[exact_e <= best + ENERGY_TOL]
    ground = ground[np.lexsort((-ground).T[::-1])]
    result = SolveResult(
        best_config=ground[0].copy(),
        best_energy=float(energies(instance, ground[:1])[0]),
        exact=True,
        diagnostics={"states": 1 << n, "degeneracy": int(ground.shape[0])},
    )
    return result, ground
