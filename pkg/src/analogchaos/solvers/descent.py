from __future__ import annotations

import numpy as np

from ..model import Instance, as_config
from ._kernels import descend, flip_delta
from .base import extend, kernel_arrays

# Flips must lower the energy by more than this; guards against rounding
# noise in sums of thirds being read as an improvement.
STRICT_TOL = 1e-12


def steepest_descent(instance: Instance, start, sweeps: int = 100) -> np.ndarray:
    """Single-spin-flip descent in ascending site order.

    A spin is flipped only if that strictly lowers the energy. Stops after
    ``sweeps`` sweeps or the first sweep without a flip.
    """
    s = extend(as_config(start, instance.n_spins))
    sites, _, couplings, offsets, ids = kernel_arrays(instance)
    descend(sites, couplings, offsets, ids, s, instance.n_spins, int(sweeps), STRICT_TOL)
    return s[:-1].copy()


def is_flip_stable(instance: Instance, config) -> bool:
    """True if no single flip strictly lowers the energy."""
    s = extend(as_config(config, instance.n_spins))
    sites, _, couplings, offsets, ids = kernel_arrays(instance)
    return all(
        flip_delta(sites, couplings, offsets, ids, s, i) >= -STRICT_TOL
        for i in range(instance.n_spins)
    )
