"""Analog-noise disorder chaos in Ising machines: instances, noise, exact and
heuristic ground-state solvers, ground-state survival experiments and their
scaling analysis."""

__version__ = "0.1.0"

from .errors import (
    AnalogChaosError,
    GenerationError,
    SolverGuardError,
    StorageError,
    ValidationError,
)
from .model import Family, Instance, InteractionTerm, energy, energies, overlaps
from .noise import NoiseSpec, NoiseTargets, perturb
from .generators import generate

__all__ = [
    "AnalogChaosError",
    "Family",
    "GenerationError",
    "Instance",
    "InteractionTerm",
    "NoiseSpec",
    "NoiseTargets",
    "SolverGuardError",
    "StorageError",
    "ValidationError",
    "__version__",
    "energies",
    "energy",
    "generate",
    "overlaps",
    "perturb",
]
