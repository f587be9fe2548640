"""Instance families: uniform chains, +-1 square grids, 3-regular 3-XORSAT,
and planted-solution Chimera instances built from frustrated loop pairs."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import streams
from .errors import GenerationError, ValidationError
from .model import Family, Instance

CHIMERA_LOOP_DENSITY_PERCENT = 13  # loop pairs per 100 Chimera qubits
CHIMERA_MAX_ACCUMULATED = 3
LOOP_LENGTH = 6


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return streams.generator(int(seed), "instance")


# -- chain ---------------------------------------------------------------


def gen_chain(n: int, J: float = 1.0, antiferromagnetic: bool = True) -> Instance:
    if n < 2:
        raise ValidationError("a chain needs at least 2 spins")
    if not J > 0:
        raise ValidationError("J must be positive; the sign comes from antiferromagnetic")
    coupling = J if antiferromagnetic else -J
    sites = [(i, i + 1) for i in range(n - 1)]
    if antiferromagnetic:
        up = np.where(np.arange(n) % 2 == 0, 1, -1)
    else:
        up = np.ones(n, dtype=int)
    return Instance.from_arrays(
        n,
        sites,
        [coupling] * (n - 1),
        Family.CHAIN,
        {"J": float(J), "antiferromagnetic": bool(antiferromagnetic)},
        [up, -up],
    )


# -- square grid ---------------------------------------------------------


def grid_edges(rows: int, cols: int) -> list[tuple[int, int]]:
    """Open-boundary nearest-neighbour edges in raster order (right, then down)."""
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1))
            if r + 1 < rows:
                edges.append((i, i + cols))
    return edges


def gen_square_grid(L: int, seed) -> Instance:
    if L < 2:
        raise ValidationError("grid side must be at least 2")
    rng = _rng(seed)
    edges = grid_edges(L, L)
    couplings = rng.choice(np.array([-1.0, 1.0]), size=len(edges))
    return Instance.from_arrays(
        L * L, edges, couplings, Family.SQUARE_GRID, {"L": L, "rows": L, "cols": L}
    )


# -- 3-regular 3-XORSAT --------------------------------------------------


def _gf2_kernel(rows: list[int], n: int) -> list[int]:
    """Basis (as bitmasks over n variables) of the null space of a GF(2) matrix."""
    pivots: dict[int, int] = {}
    for row in rows:
        r = row
        for col, prow in pivots.items():
            if r >> col & 1:
                r ^= prow
        if r:
            col = r.bit_length() - 1
            for c2 in list(pivots):
                if pivots[c2] >> col & 1:
                    pivots[c2] ^= r
            pivots[col] = r
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        vec = 1 << f
        for col, prow in pivots.items():
            if prow >> f & 1:
                vec |= 1 << col
        basis.append(vec)
    return basis


def xorsat_ground_states(n: int, clauses, max_kernel_dim: int = 10) -> tuple[list[np.ndarray], int]:
    """All states satisfying every antiferromagnetic clause, if few enough.

    With ``x_i = (1 - s_i) / 2`` a clause is satisfied when the three ``x``
    sum to 1 mod 2, so the ground states are all-down shifted by the GF(2)
    null space of the clause incidence matrix. Returns the states (only
    all-down when the null space is too large to list) and its dimension.
    """
    rows = [sum(1 << i for i in c) for c in clauses]
    basis = _gf2_kernel(rows, n)
    down = -np.ones(n, dtype=np.int8)
    if len(basis) > max_kernel_dim:
        return [down], len(basis)
    states = []
    for combo in itertools.product((0, 1), repeat=len(basis)):
        mask = 0
        for bit, vec in zip(combo, basis):
            if bit:
                mask ^= vec
        s = down.copy()
        flips = [i for i in range(n) if mask >> i & 1]
        s[flips] = 1
        states.append(s)
    return states, len(basis)


def gen_xorsat(n: int, seed, max_pairings: int = 1000) -> Instance:
    """3-regular 3-uniform clause set by configuration-model stub pairing."""
    if n < 6 or n % 2:
        raise ValidationError("XORSAT size must be even and at least 6")
    rng = _rng(seed)
    stubs = np.repeat(np.arange(n), 3)
    for attempt in range(max_pairings):
        clauses = rng.permutation(stubs).reshape(n, 3)
        clauses.sort(axis=1)
        if np.any(clauses[:, 0] == clauses[:, 1]) or np.any(clauses[:, 1] == clauses[:, 2]):
            continue
        if len({tuple(c) for c in clauses}) != n:
            continue
        break
    else:
        raise GenerationError(f"no valid 3-regular pairing after {max_pairings} attempts")
    sites = [tuple(int(x) for x in c) for c in clauses]
    gs, dim = xorsat_ground_states(n, sites)
    return Instance.from_arrays(
        n,
        sites,
        np.ones(n),
        Family.XORSAT3,
        {"pairings": attempt + 1, "gs_kernel_dim": dim},
        gs,
    )


# -- Chimera -------------------------------------------------------------


@dataclass(frozen=True)
class ChimeraGraph:
    """L x L grid of K_{4,4} unit cells.

    Qubit ``8 * (r * L + c) + k``: ``k < 4`` couple to the same ``k`` in the
    cell below, ``k >= 4`` to the same ``k`` in the cell to the right.
    """

    L: int

    @property
    def n_nodes(self) -> int:
        return 8 * self.L * self.L

    def node(self, r: int, c: int, k: int) -> int:
        return 8 * (r * self.L + c) + k

    def cell(self, node: int) -> int:
        return node // 8

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        L = self.L
        out = []
        for r in range(L):
            for c in range(L):
                for a in range(4):
                    for b in range(4, 8):
                        out.append((self.node(r, c, a), self.node(r, c, b)))
                if r + 1 < L:
                    out.extend((self.node(r, c, k), self.node(r + 1, c, k)) for k in range(4))
                if c + 1 < L:
                    out.extend((self.node(r, c, k), self.node(r, c + 1, k)) for k in range(4, 8))
        return tuple(sorted(out))

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return tuple(tuple(sorted(x)) for x in nbrs)


def _edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class LoopPair:
    loop_a: tuple[tuple[int, int], ...]
    loop_b: tuple[tuple[int, int], ...]
    shared_edge: tuple[int, int]

    @property
    def edges(self) -> set[tuple[int, int]]:
        return set(self.loop_a) | set(self.loop_b)

    @property
    def spins(self) -> set[int]:
        return {x for e in self.edges for x in e}


def sample_loop(
    graph: ChimeraGraph,
    rng: np.random.Generator,
    start_edge: tuple[int, int] | None = None,
    forbidden: frozenset = frozenset(),
    attempts: int = 10_000,
) -> tuple[tuple[int, int], ...] | None:
    """Length-6 cycle from a self-avoiding random walk, leaving its start cell.

    The walk starts on ``start_edge`` (random orientation) or on a uniformly
    random edge, and must close onto its first node after six steps. Cycles
    using any edge in ``forbidden`` are rejected. Returns ``None`` when no
    cycle is found within ``attempts`` walks.
    """
    adj = graph.adjacency
    all_edges = graph.edges
    for _ in range(attempts):
        if start_edge is None:
            u, v = all_edges[rng.integers(len(all_edges))]
        else:
            u, v = start_edge
        if rng.integers(2):
            u, v = v, u
        path = [u, v]
        for _step in range(LOOP_LENGTH - 2):
            options = [w for w in adj[path[-1]] if w not in path]
            if not options:
                break
            path.append(options[rng.integers(len(options))])
        else:
            if u not in adj[path[-1]]:
                continue
            if len({graph.cell(x) for x in path}) < 2:
                continue
            cycle = tuple(_edge(path[i], path[(i + 1) % LOOP_LENGTH]) for i in range(LOOP_LENGTH))
            if forbidden.intersection(cycle):
                continue
            return cycle
    return None


def sample_loop_pair(graph: ChimeraGraph, rng: np.random.Generator, attempts: int = 10_000) -> LoopPair | None:
    first = sample_loop(graph, rng, attempts=attempts)
    if first is None:
        return None
    shared = first[rng.integers(LOOP_LENGTH)]
    second = sample_loop(
        graph, rng, start_edge=shared, forbidden=frozenset(first) - {shared}, attempts=attempts
    )
    if second is None:
        return None
    return LoopPair(first, second, shared)


def loop_pair_count(L: int) -> int:
    """``ceil(0.13 * 8 L^2)`` in exact integer arithmetic."""
    return -(-CHIMERA_LOOP_DENSITY_PERCENT * 8 * L * L // 100)


def _pairs_connected(pairs: list[LoopPair]) -> bool:
    parent: dict[int, int] = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p in pairs:
        spins = sorted(p.spins)
        for x in spins[1:]:
            parent[find(x)] = find(spins[0])
    return len({find(x) for x in parent}) == 1


@dataclass
class _PlantedDraw:
    pairs: list[LoopPair] = field(default_factory=list)
    accumulated: dict[tuple[int, int], int] = field(default_factory=dict)
    rejected: int = 0


def _draw_planted(graph: ChimeraGraph, rng, target: int, max_failures: int) -> _PlantedDraw:
    draw = _PlantedDraw()
    acc = draw.accumulated
    while len(draw.pairs) < target:
        if draw.rejected > max_failures:
            raise GenerationError(
                f"placed only {len(draw.pairs)}/{target} loop pairs before giving up"
            )
        pair = sample_loop_pair(graph, rng)
        if pair is None:
            draw.rejected += 1
            continue
        contrib = {e: (1 if e == pair.shared_edge else -1) for e in pair.edges}
        if any(abs(acc.get(e, 0) + d) > CHIMERA_MAX_ACCUMULATED for e, d in contrib.items()):
            draw.rejected += 1
            continue
        for e, d in contrib.items():
            acc[e] = acc.get(e, 0) + d
        draw.pairs.append(pair)
    return draw


def gen_planted_chimera(L: int, seed, max_restarts: int = 200, max_failures: int = 10_000) -> Instance:
    """Planted instance whose only ground states are all-up and all-down.

    Each loop pair puts +1 on its shared edge and -1 on its other ten edges,
    so every pair alone is minimised exactly by uniform states. Draws whose
    pairs do not form one connected block, or whose largest accumulated
    coupler is below the cap, are redrawn so that the ground state pair is
    unique and the rescaled magnitudes are exactly {1/3, 2/3, 1}.
    """
    if L < 2:
        raise ValidationError("Chimera side must be at least 2")
    rng = _rng(seed)
    graph = ChimeraGraph(L)
    target = loop_pair_count(L)
    for restart in range(max_restarts):
        draw = _draw_planted(graph, rng, target, max_failures)
        nonzero = {e: j for e, j in draw.accumulated.items() if j != 0}
        if max(abs(j) for j in nonzero.values()) != CHIMERA_MAX_ACCUMULATED:
            continue
        if not _pairs_connected(draw.pairs):
            continue
        break
    else:
        raise GenerationError(f"no valid planted Chimera draw in {max_restarts} restarts")

    active = sorted(set().union(*(p.spins for p in draw.pairs)))
    index = {q: i for i, q in enumerate(active)}
    edges = sorted(nonzero)
    sites = [(index[u], index[v]) for u, v in edges]
    couplings = [nonzero[e] / CHIMERA_MAX_ACCUMULATED for e in edges]
    n = len(active)
    up = np.ones(n, dtype=np.int8)
    return Instance.from_arrays(
        n,
        sites,
        couplings,
        Family.CHIMERA,
        {
            "L": L,
            "loop_pairs": len(draw.pairs),
            "active_sites": active,
            "restarts": restart,
            "rejected_pairs": draw.rejected,
        },
        [up, -up],
    )


def nominal_size(family: Family | str, size: int) -> int:
    """Problem size ``n`` used for grouping: ``8 L^2`` for Chimera, ``L^2`` for grids."""
    family = Family(family)
    if family is Family.CHIMERA:
        return 8 * size * size
    if family is Family.SQUARE_GRID:
        return size * size
    return size


def generate(family: Family | str, size: int, seed, **params) -> Instance:
    """Dispatch on family; ``size`` is n for chains/XORSAT and L for grids/Chimera."""
    family = Family(family)
    if family is Family.CHAIN:
        return gen_chain(size, **params)
    if family is Family.SQUARE_GRID:
        return gen_square_grid(size, seed)
    if family is Family.XORSAT3:
        return gen_xorsat(size, seed)
    return gen_planted_chimera(size, seed, **params)
