from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import streams
from ..errors import ValidationError
from ..model import Instance, as_config, energy
from ._kernels import houdayer, parallel_tempering, seed_numba
from .base import SolveResult, extend, kernel_arrays


@dataclass(frozen=True)
class PtParams:
    """Replica-exchange settings; defaults are the full-size production values."""

    n_replicas: int = 32
    beta_min: float = 0.1
    beta_max: float = 20.0
    sweeps: int = 2_000_000
    exchange_period: int = 10
    replica_pairs: bool = True

    def __post_init__(self):
        if self.n_replicas < 2:
            raise ValidationError("parallel tempering needs at least 2 replicas")
        if not 0 < self.beta_min < self.beta_max:
            raise ValidationError("need 0 < beta_min < beta_max")
        if self.sweeps < 1 or self.exchange_period < 1:
            raise ValidationError("sweeps and exchange_period must be positive")

    @property
    def betas(self) -> np.ndarray:
        k = np.arange(self.n_replicas)
        return self.beta_min * (self.beta_max / self.beta_min) ** (k / (self.n_replicas - 1))


def pt_solve(instance: Instance, params: PtParams = PtParams(), stream: tuple[int, ...] = (0,)) -> SolveResult:
    """Lowest-energy state seen by parallel tempering with Houdayer moves.

    ``stream`` is ``(master_seed, *labels)``; the run is a deterministic
    function of it. Two replica sets sweep the same geometric ladder; every
    ``exchange_period`` sweeps, same-temperature replicas of the two sets
    attempt a cluster move, then each set attempts neighbour swaps.
    """
    master, *labels = stream
    rng = streams.generator(master, "solver", *labels)
    seed_numba(streams.int_seed(master, "solver", *labels, 1))
    n = instance.n_spins
    R = params.n_replicas
    spins = np.ones((2, R, n + 1), dtype=np.int8)
    spins[:, :, :n] = 1 - 2 * rng.integers(0, 2, size=(2, R, n), dtype=np.int8)
    sites, arity, couplings, offsets, ids = kernel_arrays(instance)
    metropolis_cluster = bool(instance.max_arity > 2)
    energy_sum = np.zeros(R)
    _, best, swap_acc, swap_att, cl_acc, cl_att = parallel_tempering(
        sites,
        arity,
        couplings,
        offsets,
        ids,
        n,
        params.betas,
        spins,
        int(params.sweeps),
        int(params.exchange_period),
        bool(params.replica_pairs),
        metropolis_cluster,
        energy_sum,
    )
    config = best[:n].copy()
    return SolveResult(
        best_config=config,
        best_energy=energy(instance, config),
        exact=False,
        diagnostics={
            "sweeps": int(params.sweeps),
            "swap_acceptance": (swap_acc / np.maximum(swap_att, 1)).tolist(),
            "cluster_acceptance": cl_acc / cl_att if cl_att else float("nan"),
            "cluster_attempts": int(cl_att),
            "mean_energy": (energy_sum / (2 * params.sweeps)).tolist(),
        },
    )


def houdayer_move(instance: Instance, replica_a, replica_b, stream: tuple[int, ...] = (0,), beta: float = 1.0):
    """One cluster move between two replicas.

    Returns ``(new_a, new_b, accepted)``. On pairwise instances the move is
    always accepted when a negative-overlap site exists and conserves
    ``energy(a) + energy(b)``; with three-body terms it is a Metropolis
    proposal at ``beta``.
    """
    master, *labels = stream
    seed_numba(streams.int_seed(master, "houdayer", *labels))
    a = extend(as_config(replica_a, instance.n_spins))
    b = extend(as_config(replica_b, instance.n_spins))
    sites, arity, couplings, offsets, ids = kernel_arrays(instance)
    _, accepted, _, _, _ = houdayer(
        sites, arity, couplings, offsets, ids, a, b, instance.n_spins, float(beta), bool(instance.max_arity > 2)
    )
    return a[:-1].copy(), b[:-1].copy(), bool(accepted)
