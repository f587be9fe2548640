from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..model import Instance

# Energy differences below this are treated as ties (couplings are O(1)).
ENERGY_TOL = 1e-9


@dataclass
class SolveResult:
    best_config: np.ndarray
    best_energy: float
    exact: bool
    diagnostics: dict = field(default_factory=dict)


def kernel_arrays(instance: Instance):
    """Contiguous arrays in the layout the compiled kernels expect."""
    offsets, ids = instance.incidence
    return (
        np.ascontiguousarray(instance.sites),
        np.ascontiguousarray(instance.arity),
        np.ascontiguousarray(instance.couplings),
        offsets,
        ids,
    )


def extend(config: np.ndarray) -> np.ndarray:
    """Append the constant +1 slot used by padded term sites."""
    return np.concatenate([np.asarray(config, dtype=np.int8), np.ones(1, dtype=np.int8)])
