"""Gaussian analog-error model: intended Hamiltonian -> implemented Hamiltonian."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import streams
from .errors import ValidationError
from .model import Instance


class NoiseTargets(str, enum.Enum):
    COUPLINGS_ONLY = "couplings"
    COUPLINGS_AND_FIELDS = "couplings+fields"


@dataclass(frozen=True)
class NoiseSpec:
    """Noise level, which terms it hits, optional clamp, and stream labels."""

    sigma: float
    targets: NoiseTargets = NoiseTargets.COUPLINGS_AND_FIELDS
    clamp: float | None = None
    master_seed: int = 0
    instance_id: int = 0
    realization: int = 0
    size_label: int = 0

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise ValidationError(f"sigma must be finite and non-negative, got {self.sigma}")
        if self.clamp is not None and not self.clamp > 0:
            raise ValidationError("clamp must be positive when set")
        object.__setattr__(self, "targets", NoiseTargets(self.targets))

    def for_realization(self, instance_id: int, realization: int) -> "NoiseSpec":
        return NoiseSpec(
            self.sigma,
            self.targets,
            self.clamp,
            self.master_seed,
            instance_id,
            realization,
            self.size_label,
        )


def field_free_sites(instance: Instance) -> np.ndarray:
    """Active spins (in some term) that carry no explicit field term, ascending."""
    n = instance.n_spins
    active = np.zeros(n + 1, dtype=bool)
    active[instance.sites.ravel()] = True
    has_field = np.zeros(n + 1, dtype=bool)
    has_field[instance.sites[instance.arity == 1, 0]] = True
    return np.flatnonzero((active & ~has_field)[:n])


def draw_deltas(spec: NoiseSpec, count: int) -> np.ndarray:
    """The realization's Gaussian offsets; entry ``k`` belongs to term slot ``k``."""
    gen = streams.generator(
        spec.master_seed, "noise", spec.size_label, spec.instance_id, spec.realization
    )
    return spec.sigma * streams.standard_normals(gen, count)


def perturb(intended: Instance, spec: NoiseSpec) -> Instance:
    """Return the implemented Hamiltonian ``J + dJ`` (and ``h + dh``).

    In couplings+fields mode every active spin without a field term gets a
    new field term ``dh_i``, appended after the original terms in site order.
    """
    if spec.sigma == 0:
        return intended
    m = intended.n_terms
    if spec.targets is NoiseTargets.COUPLINGS_AND_FIELDS:
        extra = field_free_sites(intended)
        mask = np.ones(m, dtype=bool)
    else:
        extra = np.empty(0, dtype=np.int64)
        mask = intended.arity >= 2
    deltas = draw_deltas(spec, m + extra.size)
    couplings = intended.couplings + np.where(mask, deltas[:m], 0.0)
    fields = deltas[m:]
    if spec.clamp is not None:
        couplings = np.clip(couplings, -spec.clamp, spec.clamp)
        fields = np.clip(fields, -spec.clamp, spec.clamp)
    return intended.with_couplings(couplings, [(int(i),) for i in extra], fields)
