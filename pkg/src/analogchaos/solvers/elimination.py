"""Exact min-sum variable elimination over a greedy min-fill order.

The elimination plan depends only on the term layout, so it is computed once
per structure and reused for every coupling vector sharing it (all noise
realizations of one instance). Coupling vectors are solved in batches:
every table carries a leading batch axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import SolverGuardError
from ..model import Instance, energies
from .base import SolveResult

MAX_TABLE_VARS = 22
_BATCH_BYTES = 1 << 26


@dataclass(frozen=True)
class _Step:
    var: int
    scope: tuple[int, ...]  # sorted union scope including ``var``
    terms: np.ndarray  # term indices first absorbed at this step
    signs: np.ndarray  # (len(terms), 2**len(scope)) products of +-1 over each term
    messages: tuple[tuple[int, tuple[int, ...]], ...]  # (step index, broadcast shape)
    axis: int  # position of ``var`` in ``scope``


@dataclass(frozen=True)
class EliminationPlan:
    n_spins: int
    steps: tuple[_Step, ...]
    width: int  # largest table scope (variables)
    free_vars: tuple[int, ...]  # spins in no term


def _min_fill_order(n: int, scopes: list[tuple[int, ...]]) -> list[int]:
    nbrs = [set() for _ in range(n)]
    for s in scopes:
        for a in s:
            nbrs[a].update(x for x in s if x != a)
    remaining = {v for v in range(n) if nbrs[v] or any(v in s for s in scopes)}
    order = []
    while remaining:
        best = None
        for v in remaining:
            nb = nbrs[v]
            fill = 0
            nb_list = list(nb)
            for i, a in enumerate(nb_list):
                for b in nb_list[i + 1 :]:
                    if b not in nbrs[a]:
                        fill += 1
            key = (fill, len(nb), v)
            if best is None or key < best:
                best = key
        v = best[2]
        nb = list(nbrs[v])
        for a in nb:
            nbrs[a].discard(v)
            nbrs[a].update(x for x in nb if x != a)
        nbrs[v] = set()
        remaining.discard(v)
        order.append(v)
    return order


def _sign_table(scope: tuple[int, ...], term_sites: list[tuple[int, ...]]) -> np.ndarray:
    u = len(scope)
    idx = np.arange(1 << u)
    # bit for scope position j is the C-order axis j: most significant first
    spins = 1 - 2 * ((idx[None, :] >> (u - 1 - np.arange(u))[:, None]) & 1)
    pos = {v: j for j, v in enumerate(scope)}
    out = np.empty((len(term_sites), 1 << u), dtype=np.float64)
    for k, ts in enumerate(term_sites):
        out[k] = np.prod(spins[[pos[v] for v in ts]], axis=0)
    return out


@lru_cache(maxsize=64)
def build_plan(structure_key: tuple) -> EliminationPlan:
    n, term_sites = structure_key
    scopes = [tuple(sorted(s)) for s in term_sites]
    order = _min_fill_order(n, scopes)
    rank = {v: r for r, v in enumerate(order)}
    pending_terms: dict[int, list[int]] = {}
    for t, s in enumerate(scopes):
        first = min(s, key=rank.__getitem__)
        pending_terms.setdefault(first, []).append(t)
    pending_msgs: dict[int, list[tuple[int, tuple[int, ...]]]] = {}
    steps = []
    width = 0
    for v in order:
        terms = pending_terms.get(v, [])
        msgs = pending_msgs.get(v, [])
        scope_set = {v}
        for t in terms:
            scope_set.update(scopes[t])
        for _, ms in msgs:
            scope_set.update(ms)
        scope = tuple(sorted(scope_set))
        width = max(width, len(scope))
        if len(scope) > MAX_TABLE_VARS:
            raise SolverGuardError(
                f"elimination width {len(scope)} exceeds the limit {MAX_TABLE_VARS}"
            )
        pos = {x: j for j, x in enumerate(scope)}
        messages = []
        for step_idx, ms in msgs:
            shape = [1] * len(scope)
            for x in ms:
                shape[pos[x]] = 2
            messages.append((step_idx, tuple(shape)))
        signs = _sign_table(scope, [scopes[t] for t in terms])
        steps.append(
            _Step(v, scope, np.array(terms, dtype=np.int64), signs, tuple(messages), pos[v])
        )
        out_scope = tuple(x for x in scope if x != v)
        if out_scope:
            nxt = min(out_scope, key=rank.__getitem__)
            pending_msgs.setdefault(nxt, []).append((len(steps) - 1, out_scope))
    free = tuple(v for v in range(n) if v not in rank)
    return EliminationPlan(n, tuple(steps), width, free)


def plan_for(instance: Instance) -> EliminationPlan:
    return build_plan(instance.structure_key)


def _solve_chunk(plan: EliminationPlan, couplings: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    B = couplings.shape[0]
    results: list[np.ndarray | None] = [None] * len(plan.steps)
    argmins: list[np.ndarray] = [None] * len(plan.steps)
    constant = np.zeros(B)
    for k, step in enumerate(plan.steps):
        u = len(step.scope)
        if step.terms.size:
            table = couplings[:, step.terms] @ step.signs
        else:
            table = np.zeros((B, 1 << u))
        table = table.reshape((B,) + (2,) * u)
        for src, shape in step.messages:
            table = table + results[src].reshape((B,) + shape)
            results[src] = None
        arg = np.argmin(table, axis=step.axis + 1).astype(np.uint8)
        reduced = np.take_along_axis(table, np.expand_dims(arg, step.axis + 1), axis=step.axis + 1)
        reduced = np.squeeze(reduced, axis=step.axis + 1)
        argmins[k] = arg.reshape(B, -1)
        if u == 1:
            constant += reduced.reshape(B)
        else:
            results[k] = reduced.reshape(B, -1)
    assign = np.zeros((B, plan.n_spins), dtype=np.int64)
    rows = np.arange(B)
    for step, arg in zip(reversed(plan.steps), reversed(argmins)):
        rest = [x for x in step.scope if x != step.var]
        idx = np.zeros(B, dtype=np.int64)
        for x in rest:
            idx = idx * 2 + assign[:, x]
        assign[:, step.var] = arg[rows, idx]
    return (1 - 2 * assign).astype(np.int8), constant


def elimination_solve_batch(instance: Instance, couplings: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact ground states for a ``(B, m)`` batch of coupling vectors on one layout.

    Returns ``(configs, energies)`` with shapes ``(B, n)`` and ``(B,)``.
    Ties resolve toward ``+1`` spins; spins in no term are set to ``+1``.
    """
    couplings = np.atleast_2d(np.asarray(couplings, dtype=np.float64))
    plan = plan_for(instance)
    per_item = 8 * (1 << plan.width) * 3
    chunk = max(1, _BATCH_BYTES // per_item)
    configs = []
    values = []
    for start in range(0, couplings.shape[0], chunk):
        c, e = _solve_chunk(plan, couplings[start : start + chunk])
        configs.append(c)
        values.append(e)
    return np.concatenate(configs), np.concatenate(values)


def elimination_solve(instance: Instance) -> SolveResult:
    configs, _ = elimination_solve_batch(instance, instance.couplings[None, :])
    config = configs[0]
    plan = plan_for(instance)
    return SolveResult(
        best_config=config,
        best_energy=float(energies(instance, config[None, :])[0]),
        exact=True,
        diagnostics={"width": plan.width},
    )
