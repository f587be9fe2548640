"""Ground-state survival experiment: perturb, re-solve, classify, tabulate."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from . import streams
from .errors import InsufficientDataError, ValidationError
from .generators import generate, nominal_size
from .model import Family, Instance, energies, energy, overlaps
from .noise import NoiseSpec, NoiseTargets, perturb
from .solvers import SolverProfile, grid_dp_solve, steepest_descent
from .solvers.base import ENERGY_TOL

DEFAULT_TARGETS = {
    Family.CHAIN: NoiseTargets.COUPLINGS_ONLY,
    Family.SQUARE_GRID: NoiseTargets.COUPLINGS_ONLY,
    Family.CHIMERA: NoiseTargets.COUPLINGS_AND_FIELDS,
    Family.XORSAT3: NoiseTargets.COUPLINGS_AND_FIELDS,
}


class Outcome(str, enum.Enum):
    PRESERVED = "preserved"
    TRIVIAL = "trivial"
    CHAOS = "chaos"


@dataclass(frozen=True)
class ChaosRecord:
    """One (instance, noise realization, sigma) cell.

    The chaos-event fields are NaN unless ``outcome`` is ``CHAOS``; they
    describe the descended state against the nearest intended ground state.
    """

    family: Family
    n: int
    sigma: float
    instance_id: int
    realization_id: int
    outcome: Outcome
    delta_e0: float = math.nan
    D: float = math.nan
    W: float = math.nan
    z: float = math.nan
    e_intended: float = math.nan

    @property
    def key(self) -> tuple:
        return (self.family.value, self.n, self.sigma, self.instance_id, self.realization_id)

    @property
    def success(self) -> bool:
        return self.outcome is not Outcome.CHAOS


@dataclass
class ResultTable:
    records: list[ChaosRecord] = field(default_factory=list)
    manifest_hash: str = ""

    def __post_init__(self):
        keys = [r.key for r in self.records]
        if len(set(keys)) != len(keys):
            raise ValidationError("duplicate (family, n, sigma, instance, realization) rows")

    def __len__(self) -> int:
        return len(self.records)

    def keys(self) -> set[tuple]:
        return {r.key for r in self.records}

    def sorted(self) -> "ResultTable":
        return ResultTable(sorted(self.records, key=lambda r: r.key), self.manifest_hash)

    def select(self, family=None, n=None, sigma=None) -> list[ChaosRecord]:
        fam = Family(family) if family is not None else None
        return [
            r
            for r in self.records
            if (fam is None or r.family is fam)
            and (n is None or r.n == n)
            and (sigma is None or math.isclose(r.sigma, sigma, rel_tol=1e-12, abs_tol=1e-15))
        ]

    def groups(self) -> list[tuple[Family, int, float]]:
        return sorted({(r.family, r.n, r.sigma) for r in self.records}, key=lambda g: (g[0].value, g[1], g[2]))


# -- classification ------------------------------------------------------


def _reference_ground_state(known: tuple[np.ndarray, ...], state: np.ndarray) -> np.ndarray:
    dists = [int(np.count_nonzero(g != state)) for g in known]
    return known[int(np.argmin(dists))]


def classify_solution(
    intended: Instance,
    implemented: Instance,
    returned: np.ndarray,
    sigma: float,
    descent_sweeps: int = 100,
    ids: tuple[int, int] = (0, 0),
    n_label: int | None = None,
) -> ChaosRecord:
    """Classify a solver's answer on the implemented Hamiltonian.

    The intended ground state is taken to have changed only if the returned
    state beats every known intended ground state on the implemented
    Hamiltonian and is itself not an intended ground state. Such states are
    then relaxed by descent on the intended Hamiltonian; if that reaches a
    ground state the excitation is trivial, otherwise it is a chaos event.
    """
    known = intended.known_ground_states
    if not known:
        raise ValidationError("classification needs at least one known intended ground state")
    n_label = intended.n_spins if n_label is None else n_label
    e_gs = energy(intended, known[0])
    e_ref = float(np.min(energies(implemented, np.stack(known))))
    base = dict(
        family=intended.family,
        n=n_label,
        sigma=float(sigma),
        instance_id=ids[0],
        realization_id=ids[1],
    )
    returned = np.asarray(returned, dtype=np.int8)
    beats = energy(implemented, returned) < e_ref - ENERGY_TOL
    if not beats or energy(intended, returned) <= e_gs + ENERGY_TOL:
        return ChaosRecord(outcome=Outcome.PRESERVED, **base)
    settled = steepest_descent(intended, returned, descent_sweeps)
    e_settled = energy(intended, settled)
    if e_settled <= e_gs + ENERGY_TOL:
        return ChaosRecord(outcome=Outcome.TRIVIAL, **base)
    ref = _reference_ground_state(known, settled)
    stats = overlaps(intended, ref, settled, sigma)
    return ChaosRecord(
        outcome=Outcome.CHAOS,
        delta_e0=stats.delta_e0,
        D=stats.D,
        W=stats.W,
        z=stats.z,
        e_intended=e_settled,
        **base,
    )


def classify_realization(
    intended: Instance,
    spec: NoiseSpec,
    solver: SolverProfile | Callable | None = None,
    descent_sweeps: int = 100,
    n_label: int | None = None,
) -> ChaosRecord:
    """Perturb ``intended`` per ``spec``, solve, and classify the result."""
    solver = solver or SolverProfile()
    implemented = perturb(intended, spec)
    stream = (spec.master_seed, spec.size_label, spec.instance_id, spec.realization)
    if isinstance(solver, SolverProfile):
        result = solver.solve(implemented, stream)
    else:
        result = solver(implemented)
    return classify_solution(
        intended,
        implemented,
        result.best_config,
        spec.sigma,
        descent_sweeps,
        (spec.instance_id, spec.realization),
        n_label,
    )


# -- sweeps --------------------------------------------------------------


@dataclass(frozen=True)
class ChaosRunConfig:
    family: Family
    sizes: tuple[int, ...]
    sigmas: tuple[float, ...]
    n_instances: int
    n_realizations: int
    master_seed: int = 0
    solver: SolverProfile = field(default_factory=SolverProfile)
    descent_sweeps: int = 100
    targets: NoiseTargets | None = None
    clamp: float | None = None
    family_params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        if self.n_instances < 1 or self.n_realizations < 1:
            raise ValidationError("instance and realization counts must be positive")
        if not self.sizes or not self.sigmas:
            raise ValidationError("need at least one size and one sigma")
        if any(s < 0 for s in self.sigmas):
            raise ValidationError("sigmas must be non-negative")

    @property
    def noise_targets(self) -> NoiseTargets:
        return NoiseTargets(self.targets) if self.targets is not None else DEFAULT_TARGETS[self.family]


def build_instance(config: ChaosRunConfig, size: int, instance_id: int) -> Instance:
    """Intended instance for one (size, id), with ground states attached."""
    seed = streams.int_seed(config.master_seed, "instance", size, instance_id)
    inst = generate(config.family, size, seed, **config.family_params)
    if not inst.known_ground_states:
        gs = grid_dp_solve(inst) if inst.family is Family.SQUARE_GRID else config.solver.solve(
            inst, (config.master_seed, size, instance_id)
        )
        inst = Instance.from_arrays(
            inst.n_spins,
            inst.structure_key[1],
            inst.couplings,
            inst.family,
            {**inst.metadata, "gs_from_solver": True},
            [gs.best_config],
            validate=False,
        )
    return inst


def _run_instance(config: ChaosRunConfig, size: int, instance_id: int, done: frozenset) -> list[ChaosRecord]:
    intended = build_instance(config, size, instance_id)
    n_label = nominal_size(config.family, size)
    out = []
    for sigma in config.sigmas:
        todo = [
            r
            for r in range(config.n_realizations)
            if (config.family.value, n_label, sigma, instance_id, r) not in done
        ]
        if not todo:
            continue
        specs = [
            NoiseSpec(sigma, config.noise_targets, config.clamp, config.master_seed, instance_id, r, size)
            for r in todo
        ]
        implemented = [perturb(intended, s) for s in specs]
        stream_list = [(config.master_seed, size, instance_id, r) for r in todo]
        results = config.solver.solve_many(implemented, stream_list)
        for spec, impl, res in zip(specs, implemented, results):
            out.append(
                classify_solution(
                    intended,
                    impl,
                    res.best_config,
                    sigma,
                    config.descent_sweeps,
                    (instance_id, spec.realization),
                    n_label,
                )
            )
    return out


def run_sweep(
    config: ChaosRunConfig,
    existing: ResultTable | None = None,
    jobs: int = 1,
    on_instance: Callable[[list[ChaosRecord]], None] | None = None,
) -> ResultTable:
    """Run every (size, instance, sigma, realization) cell not already in ``existing``.

    Each cell's randomness depends only on its own labels, so extending a
    partial table gives the same rows as a fresh run. ``on_instance`` is
    called with each instance's new records as they complete (in task
    order), which is how callers checkpoint.
    """
    done = frozenset(existing.keys()) if existing is not None else frozenset()
    tasks = [(size, k) for size in config.sizes for k in range(config.n_instances)]
    records = list(existing.records) if existing is not None else []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_instance, config, s, k, done) for s, k in tasks]
            for fut in futures:
                new = fut.result()
                records.extend(new)
                if on_instance and new:
                    on_instance(new)
    else:
        for s, k in tasks:
            new = _run_instance(config, s, k, done)
            records.extend(new)
            if on_instance and new:
                on_instance(new)
    return ResultTable(records, existing.manifest_hash if existing is not None else "").sorted()


# -- success probability ---------------------------------------------------


def per_instance_ps(records: Iterable[ChaosRecord]) -> dict[int, float]:
    totals: dict[int, list[int]] = {}
    for r in records:
        t = totals.setdefault(r.instance_id, [0, 0])
        t[0] += r.success
        t[1] += 1
    return {k: s / c for k, (s, c) in sorted(totals.items())}


def bootstrap_median(values, n_boot: int = 1000, seed: int = 0) -> tuple[float, tuple[float, float]]:
    """Median with a +-2 bootstrap-standard-deviation interval, clipped to [0, 1]."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise InsufficientDataError("need at least two instances for a bootstrap interval")
    med = float(np.median(v))
    rng = streams.generator(seed, "bootstrap", v.size)
    resampled = np.median(v[rng.integers(0, v.size, size=(n_boot, v.size))], axis=1)
    sd = float(np.std(resampled, ddof=1))
    return med, (max(0.0, med - 2 * sd), min(1.0, med + 2 * sd))


def estimate_ps(table: ResultTable, family, n: int, sigma: float, n_boot: int = 1000, seed: int = 0):
    """Median per-instance success probability and its bootstrap interval.

    Success means the outcome is preserved or a trivial excitation.
    """
    recs = table.select(family, n, sigma)
    if not recs:
        raise InsufficientDataError(f"no records for {family}, n={n}, sigma={sigma}")
    ps = per_instance_ps(recs)
    return bootstrap_median(list(ps.values()), n_boot, seed)


def with_manifest(table: ResultTable, manifest_hash: str) -> ResultTable:
    return replace(table, manifest_hash=manifest_hash)
