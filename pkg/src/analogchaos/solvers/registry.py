from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import SolverGuardError, ValidationError
from ..model import Family, Instance, energies
from .base import SolveResult
from .elimination import elimination_solve, elimination_solve_batch, plan_for
from .exhaustive import exhaustive_solve
from .grid import grid_dp_solve
from .tempering import PtParams, pt_solve

KINDS = ("auto", "exact", "grid-dp", "elimination", "pt")
AUTO_ELIMINATION_WIDTH = 20


@dataclass(frozen=True)
class SolverProfile:
    """Which ground-state solver to use and its budget.

    ``auto`` picks grid DP for square grids, variable elimination when the
    elimination width is at most 20, and parallel tempering otherwise.
    """

    kind: str = "auto"
    pt: PtParams = field(default_factory=lambda: PtParams(sweeps=10_000))

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown solver kind {self.kind!r}; expected one of {KINDS}")

    def resolve(self, instance: Instance) -> str:
        if self.kind != "auto":
            return self.kind
        if instance.family is Family.SQUARE_GRID:
            return "grid-dp"
        try:
            width = plan_for(instance).width
        except SolverGuardError:
            return "pt"
        return "elimination" if width <= AUTO_ELIMINATION_WIDTH else "pt"

    def solve(self, instance: Instance, stream: tuple[int, ...] = (0,)) -> SolveResult:
        kind = self.resolve(instance)
        if kind == "exact":
            return exhaustive_solve(instance)[0]
        if kind == "grid-dp":
            return grid_dp_solve(instance)
        if kind == "elimination":
            return elimination_solve(instance)
        return pt_solve(instance, self.pt, stream)

    def solve_many(self, instances: list[Instance], stream_list: list[tuple[int, ...]]) -> list[SolveResult]:
        """Solve several instances; same-layout batches go through elimination together."""
        if not instances:
            return []
        kind = self.resolve(instances[0])
        same_layout = all(i.structure_key == instances[0].structure_key for i in instances)
        if kind != "elimination" or not same_layout:
            return [self.solve(i, s) for i, s in zip(instances, stream_list)]
        couplings = np.stack([i.couplings for i in instances])
        configs, _ = elimination_solve_batch(instances[0], couplings)
        out = []
        for inst, cfg in zip(instances, configs):
            out.append(
                SolveResult(cfg, float(energies(inst, cfg[None, :])[0]), True, {"width": plan_for(inst).width})
            )
        return out


def make_solver(kind: str = "auto", pt: PtParams | None = None) -> SolverProfile:
    return SolverProfile(kind, pt) if pt is not None else SolverProfile(kind)
