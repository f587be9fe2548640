from __future__ import annotations

import numpy as np

from ..errors import SolverGuardError, ValidationError
from ..model import Family, Instance, energy
from .base import SolveResult

MAX_GRID_WIDTH = 16


def _grid_layout(instance: Instance):
    rows = int(instance.metadata.get("rows", instance.metadata.get("L", 0)))
    cols = int(instance.metadata.get("cols", instance.metadata.get("L", 0)))
    if rows * cols != instance.n_spins:
        raise ValidationError("grid metadata does not match the spin count")
    return rows, cols


def grid_dp_solve(instance: Instance, max_width: int = MAX_GRID_WIDTH) -> SolveResult:
    """Exact ground state of an open-boundary grid by raster-order DP.

    Spins are added one at a time along rows of the narrower dimension; the
    DP state is the last ``width`` spins, so the spin directly above the new
    one is the oldest state bit and its left neighbour the newest.
    """
    if instance.family is not Family.SQUARE_GRID:
        raise SolverGuardError(f"grid DP needs a square-grid instance, got {instance.family.value}")
    rows, cols = _grid_layout(instance)
    transpose = cols > rows
    width, height = (rows, cols) if transpose else (cols, rows)
    if width > max_width:
        raise SolverGuardError(f"grid width {width} exceeds the DP limit {max_width}")

    def order_of(site: int) -> int:
        r, c = divmod(site, cols)
        return c * rows + r if transpose else site

    n = instance.n_spins
    h = np.zeros(n)
    j_up = np.zeros(n)
    j_left = np.zeros(n)
    for k in range(instance.n_terms):
        s = sorted(order_of(i) for i in instance.term_sites(k))
        J = float(instance.couplings[k])
        if len(s) == 1:
            h[s[0]] += J
        elif len(s) == 2 and s[1] - s[0] == 1 and s[1] % width != 0:
            j_left[s[1]] += J
        elif len(s) == 2 and s[1] - s[0] == width:
            j_up[s[1]] += J
        else:
            raise ValidationError(f"term on sites {instance.term_sites(k)} is not a grid bond")

    half = 1 << (width - 1)
    rest = np.arange(half)
    if width >= 2:
        s_left = 1 - 2 * ((rest >> (width - 2)) & 1)
    else:
        s_left = np.zeros(half)
    cost = np.full(1 << width, np.inf)
    cost[0] = 0.0
    choice = np.empty((n, 1 << width), dtype=np.uint8)
    for t in range(n):
        old = cost.reshape(half, 2)
        new = np.empty_like(cost)
        for b, sb in ((0, 1.0), (1, -1.0)):
            base = h[t] * sb + j_left[t] * s_left * sb
            via_up = old[:, 0] + base + j_up[t] * sb
            via_down = old[:, 1] + base - j_up[t] * sb
            pick = via_down < via_up
            new[b * half : (b + 1) * half] = np.where(pick, via_down, via_up)
            choice[t, b * half : (b + 1) * half] = pick
        cost = new

    state = int(np.argmin(cost))
    ordered = np.empty(n, dtype=np.int8)
    for t in range(n - 1, -1, -1):
        ordered[t] = 1 - 2 * ((state >> (width - 1)) & 1)
        state = ((state & (half - 1)) << 1) | int(choice[t, state])
    config = np.array([ordered[order_of(i)] for i in range(n)], dtype=np.int8)
    return SolveResult(
        best_config=config,
        best_energy=energy(instance, config),
        exact=True,
        diagnostics={"width": width, "states": 1 << width},
    )
