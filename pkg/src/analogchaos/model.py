"""Ising / XORSAT Hamiltonians, energies and ground-state/excited-state overlaps.

A Hamiltonian is a sum of product terms ``J_t * prod(s_i for i in sites_t)``
with arity 1 (fields), 2 (couplers) or 3 (XORSAT clauses). Positive
couplings are antiferromagnetic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationSizeError, StructureMismatchError, ValidationError

# Above this many terms energies are summed with math.fsum instead of numpy's
# pairwise reduction.
_COMPENSATED_SUM_THRESHOLD = 10_000


class Family(str, enum.Enum):
    CHAIN = "chain"
    SQUARE_GRID = "grid"
    CHIMERA = "chimera"
    XORSAT3 = "xorsat"


@dataclass(frozen=True)
class InteractionTerm:
    sites: tuple[int, ...]
    coupling: float

    @property
    def arity(self) -> int:
        return len(self.sites)


def as_config(spins, n_spins: int | None = None) -> np.ndarray:
    """Validate and convert a spin assignment to an ``int8`` array of +-1."""
    arr = np.asarray(spins)
    if arr.ndim != 1:
        raise ValidationError("a spin configuration must be one-dimensional")
    if n_spins is not None and arr.shape[0] != n_spins:
        raise ConfigurationSizeError(
            f"configuration has {arr.shape[0]} spins, instance has {n_spins}"
        )
    if not np.all((arr == 1) | (arr == -1)):
        raise ValidationError("spin values must be exactly +1 or -1")
    return arr.astype(np.int8)


class Instance:
    """An Ising-type Hamiltonian over ``n_spins`` spins.

    Terms are stored as a padded ``(m, 3)`` site array (padding value
    ``n_spins``) plus a coupling vector; :attr:`terms` rebuilds the
    :class:`InteractionTerm` view on demand.
    """

    def __init__(
        self,
        n_spins: int,
        terms: Iterable[InteractionTerm],
        family: Family | str,
        metadata: Mapping | None = None,
        known_ground_states: Sequence | None = None,
    ):
        terms = list(terms)
        sites = [tuple(int(i) for i in t.sites) for t in terms]
        couplings = [float(t.coupling) for t in terms]
        self._init(n_spins, sites, couplings, family, metadata, known_ground_states)
        self.validate()

    @classmethod
    def from_arrays(
        cls,
        n_spins: int,
        sites: Sequence[tuple[int, ...]],
        couplings,
        family: Family | str,
        metadata: Mapping | None = None,
        known_ground_states: Sequence | None = None,
        validate: bool = True,
    ) -> "Instance":
        obj = cls.__new__(cls)
        obj._init(n_spins, sites, couplings, family, metadata, known_ground_states)
        if validate:
            obj.validate()
        return obj

    def _init(self, n_spins, sites, couplings, family, metadata, known_ground_states):
        n_spins = int(n_spins)
        if n_spins < 1:
            raise ValidationError("n_spins must be positive")
        self.n_spins = n_spins
        self.family = Family(family)
        self.metadata = dict(metadata or {})
        m = len(sites)
        padded = np.full((m, 3), n_spins, dtype=np.int64)
        arity = np.empty(m, dtype=np.int64)
        for k, s in enumerate(sites):
            if not 1 <= len(s) <= 3:
                raise ValidationError(f"term {k} has arity {len(s)}; expected 1-3")
            padded[k, : len(s)] = s
            arity[k] = len(s)
        c = np.array(couplings, dtype=np.float64).reshape(m)
        padded.flags.writeable = False
        arity.flags.writeable = False
        c.flags.writeable = False
        self._sites = padded
        self._arity = arity
        self._couplings = c
        gs = tuple(as_config(g, n_spins) for g in (known_ground_states or ()))
        for g in gs:
            g.flags.writeable = False
        self.known_ground_states = gs

    def validate(self) -> None:
        n = self.n_spins
        if not np.all(np.isfinite(self._couplings)):
            raise ValidationError("couplings must be finite")
        seen = set()
        for k in range(self.n_terms):
            s = self.term_sites(k)
            if any(i < 0 or i >= n for i in s):
                raise ValidationError(f"term {k} references a site outside [0, {n})")
            if len(set(s)) != len(s):
                raise ValidationError(f"term {k} repeats a site")
            key = frozenset(s)
            if key in seen:
                raise ValidationError(f"duplicate term on sites {sorted(key)}")
            seen.add(key)

    # -- structure -------------------------------------------------------
    @property
    def n_terms(self) -> int:
        return self._couplings.shape[0]

    @property
    def sites(self) -> np.ndarray:
        """Padded ``(m, 3)`` site array; unused slots hold ``n_spins``."""
        return self._sites

    @property
    def arity(self) -> np.ndarray:
        return self._arity

    @property
    def couplings(self) -> np.ndarray:
        return self._couplings

    def term_sites(self, k: int) -> tuple[int, ...]:
        return tuple(int(i) for i in self._sites[k, : self._arity[k]])

    @property
    def terms(self) -> tuple[InteractionTerm, ...]:
        return tuple(
            InteractionTerm(self.term_sites(k), float(self._couplings[k]))
            for k in range(self.n_terms)
        )

    @cached_property
    def structure_key(self) -> tuple:
        """Hashable description of the term layout (sites only, no couplings)."""
        return (self.n_spins, tuple(self.term_sites(k) for k in range(self.n_terms)))

    @cached_property
    def max_arity(self) -> int:
        return int(self._arity.max()) if self.n_terms else 0

    @cached_property
    def incidence(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR map site -> incident term indices as ``(offsets, term_ids)``."""
        n = self.n_spins
        counts = np.zeros(n + 1, dtype=np.int64)
        for k in range(self.n_terms):
            for i in self._sites[k, : self._arity[k]]:
                counts[i + 1] += 1
        offsets = np.cumsum(counts)
        fill = offsets[:-1].copy()
        ids = np.empty(offsets[-1], dtype=np.int64)
        for k in range(self.n_terms):
            for i in self._sites[k, : self._arity[k]]:
                ids[fill[i]] = k
                fill[i] += 1
        return offsets, ids

    def with_couplings(self, couplings, extra_sites=(), extra_couplings=()) -> "Instance":
        """Same layout with new coupling values, optionally appending terms.

        Planted ground states are not carried over: they belong to the
        original couplings. The site arrays are shared, not copied.
        """
        couplings = np.asarray(couplings, dtype=np.float64)
        if couplings.shape != (self.n_terms,):
            raise StructureMismatchError("coupling vector does not match term count")
        extra = [tuple(int(i) for i in s) for s in extra_sites]
        values = np.concatenate([couplings, np.asarray(extra_couplings, dtype=np.float64)])
        if values.shape[0] != self.n_terms + len(extra):
            raise StructureMismatchError("extra couplings do not match extra sites")
        out = Instance.__new__(Instance)
        out.n_spins = self.n_spins
        out.family = self.family
        out.metadata = dict(self.metadata)
        out.known_ground_states = ()
        if extra:
            if any(not 1 <= len(t) <= 3 or min(t) < 0 or max(t) >= self.n_spins for t in extra):
                raise ValidationError("appended terms must have arity 1-3 and valid sites")
            pad = np.full((len(extra), 3), self.n_spins, dtype=np.int64)
            for k, t in enumerate(extra):
                pad[k, : len(t)] = t
            sites = np.concatenate([self._sites, pad])
            arity = np.concatenate([self._arity, [len(t) for t in extra]]).astype(np.int64)
            sites.flags.writeable = False
            arity.flags.writeable = False
            out.__dict__["structure_key"] = (self.n_spins, self.structure_key[1] + tuple(extra))
        else:
            sites, arity = self._sites, self._arity
            out.__dict__["structure_key"] = self.structure_key
        values.flags.writeable = False
        out._sites = sites
        out._arity = arity
        out._couplings = values
        return out

    # -- comparison -------------------------------------------------------
    def __eq__(self, other) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.n_spins == other.n_spins
            and self.family == other.family
            and self.metadata == other.metadata
            and np.array_equal(self._sites, other._sites)
            and np.array_equal(self._couplings, other._couplings)
            and len(self.known_ground_states) == len(other.known_ground_states)
            and all(
                np.array_equal(a, b)
                for a, b in zip(self.known_ground_states, other.known_ground_states)
            )
        )

    __hash__ = None

    def __repr__(self) -> str:
        return (
            f"Instance(family={self.family.value}, n_spins={self.n_spins}, "
            f"n_terms={self.n_terms})"
        )


# -- energies ------------------------------------------------------------


def _term_products(instance: Instance, spins: np.ndarray) -> np.ndarray:
    """Products of spins over each term; works on ``(n,)`` or ``(B, n)``."""
    ext = np.concatenate([spins, np.ones(spins.shape[:-1] + (1,), spins.dtype)], axis=-1)
    picked = ext[..., instance.sites]
    return np.prod(picked, axis=-1, dtype=np.int64)


def energy(instance: Instance, config) -> float:
    """Energy ``sum_t J_t prod_{i in t} s_i`` of a single configuration."""
    s = as_config(config, instance.n_spins)
    contrib = instance.couplings * _term_products(instance, s)
    if instance.n_terms > _COMPENSATED_SUM_THRESHOLD:
        return math.fsum(contrib)
    return float(np.sum(contrib))


def energies(instance: Instance, configs) -> np.ndarray:
    """Vectorised :func:`energy` over a ``(B, n)`` batch."""
    arr = np.asarray(configs, dtype=np.int8)
    if arr.ndim != 2 or arr.shape[1] != instance.n_spins:
        raise ConfigurationSizeError("expected a (B, n_spins) batch of configurations")
    return _term_products(instance, arr) @ instance.couplings


def energy_gap(instance: Instance, gs, es) -> float:
    """``energy(es) - energy(gs)``."""
    return energy(instance, es) - energy(instance, gs)


# -- overlaps -------------------------------------------------------------


@dataclass(frozen=True)
class OverlapStats:
    """Spin and link overlaps between a reference state and an excited state.

    ``z`` is ``inf`` when the two states share every spin and every link
    (no exposure to noise) and ``nan`` when no noise level was given.
    """

    q: np.ndarray
    q_link: np.ndarray
    D: int
    W: int
    delta_e0: float
    z: float


def z_parameter(delta_e0: float, w: int, d: int, sigma: float) -> float:
    if sigma <= 0:
        return math.nan
    if w + d == 0:
        return math.inf
    return delta_e0 / (2.0 * sigma * math.sqrt(w + d))


def overlaps(instance: Instance, gs, es, sigma: float = 0.0) -> OverlapStats:
    g = as_config(gs, instance.n_spins)
    e = as_config(es, instance.n_spins)
    q = (g * e).astype(np.int8)
    multi = instance.arity >= 2
    link = _term_products(instance, q)[multi].astype(np.int8)
    d = int(np.count_nonzero(q == -1))
    w = int(np.count_nonzero(link == -1))
    gap = energy_gap(instance, g, e)
    return OverlapStats(q=q, q_link=link, D=d, W=w, delta_e0=gap, z=z_parameter(gap, w, d, sigma))


def gap_decomposition_check(intended: Instance, implemented: Instance, gs, es) -> tuple[float, float]:
    """Return the implemented gap computed directly and via the overlap expansion.

    The expansion is ``dE0 - sum_t dJ_t * prod_t(s^G) * (1 - q_t)`` where
    ``q_t`` is the product of spin overlaps over the term's sites; for
    fields this is ``q_i`` and for couplers the link overlap. Terms present
    only in ``implemented`` count as intended coupling 0.
    """
    if intended.n_spins != implemented.n_spins:
        raise StructureMismatchError("instances have different spin counts")
    index = {frozenset(s): k for k, s in enumerate(implemented.structure_key[1])}
    delta = implemented.couplings.copy()
    for k, s in enumerate(intended.structure_key[1]):
        j = index.get(frozenset(s))
        if j is None:
            raise StructureMismatchError(f"term on sites {s} missing from implemented instance")
        delta[j] -= intended.couplings[k]
    g = as_config(gs, intended.n_spins)
    e = as_config(es, intended.n_spins)
    lhs = energy_gap(implemented, g, e)
    q_t = _term_products(implemented, (g * e).astype(np.int8))
    g_t = _term_products(implemented, g)
    rhs = energy_gap(intended, g, e) - float(np.sum(delta * g_t * (1 - q_t)))
    return lhs, rhs
