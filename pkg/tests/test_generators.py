from collections import Counter

import numpy as np
import pytest

from analogchaos.errors import GenerationError, ValidationError
from analogchaos.generators import (
    ChimeraGraph,
    gen_chain,
    gen_planted_chimera,
    gen_square_grid,
    gen_xorsat,
    generate,
    grid_edges,
    loop_pair_count,
    sample_loop_pair,
    xorsat_ground_states,
)
from analogchaos.model import Family, energy
from analogchaos.solvers import elimination_solve, exhaustive_solve

from conftest import brute_force


def test_chain_examples():
    inst = gen_chain(3, 1.0)
    assert [(t.sites, t.coupling) for t in inst.terms] == [((0, 1), 1.0), ((1, 2), 1.0)]
    assert energy(inst, [1, -1, 1]) == -2.0
    ferro = gen_chain(2, 1.0, antiferromagnetic=False)
    assert energy(ferro, [1, 1]) == -1.0
    assert [g.tolist() for g in ferro.known_ground_states] == [[1, 1], [-1, -1]]


def test_chain_has_two_ground_states():
    inst = gen_chain(10)
    best, gs = brute_force(inst)
    assert best == -9.0 and len(gs) == 2
    assert {tuple(g) for g in gs} == {tuple(g) for g in inst.known_ground_states}


def test_chain_rejects_short():
    with pytest.raises(ValidationError):
        gen_chain(1)


def test_square_grid():
    for L in (2, 3, 5):
        inst = gen_square_grid(L, seed=L)
        assert inst.n_terms == 2 * L * (L - 1) == len(grid_edges(L, L))
        assert set(np.abs(inst.couplings)) == {1.0}
        assert not inst.known_ground_states
    inst = gen_square_grid(4, seed=3)
    best, _ = brute_force(inst)
    assert exhaustive_solve(inst)[0].best_energy == best


def test_square_grid_all_ferro_ground_energy():
    # draws are uniform over signs; find an all-ferro 2x2 draw
    for seed in range(200):
        inst = gen_square_grid(2, seed)
        if np.all(inst.couplings == -1):
            assert brute_force(inst)[0] == -4.0
            return
    pytest.fail("no all-ferro 2x2 draw in 200 seeds")


@pytest.mark.parametrize("n", [6, 12, 24, 60])
def test_xorsat_regularity(n):
    inst = gen_xorsat(n, seed=n)
    assert inst.n_terms == n
    assert all(len(t.sites) == 3 for t in inst.terms)
    degree = Counter(i for t in inst.terms for i in t.sites)
    assert all(degree[i] == 3 for i in range(n))
    assert np.all(inst.couplings == 1.0)
    assert energy(inst, -np.ones(n)) == -n


def test_xorsat_ground_states_exact():
    inst = gen_xorsat(12, seed=5)
    best, gs = brute_force(inst)
    assert best == -12
    assert {tuple(g) for g in gs} == {tuple(g) for g in inst.known_ground_states}
    assert tuple([-1] * 12) in {tuple(g) for g in gs}


def test_xorsat_kernel_matches_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(10):
        inst = gen_xorsat(10, seed=int(rng.integers(1 << 30)))
        _, gs = brute_force(inst)
        ours, dim = xorsat_ground_states(10, [t.sites for t in inst.terms])
        assert len(gs) == len(ours) == 2**dim


def test_xorsat_rejects_odd_or_small():
    for n in (5, 7, 4):
        with pytest.raises(ValidationError):
            gen_xorsat(n, 0)


def test_loop_pair_counts():
    assert loop_pair_count(2) == 5
    assert loop_pair_count(8) == 67
    assert loop_pair_count(12) == 150


def test_chimera_graph():
    g = ChimeraGraph(3)
    assert g.n_nodes == 72
    assert len(g.edges) == 16 * 9 + 2 * 4 * 3 * 2
    for node in range(g.n_nodes):
        same_cell = [v for v in g.adjacency[node] if g.cell(v) == g.cell(node)]
        assert len(same_cell) == 4


def test_loop_pairs_are_valid():
    g = ChimeraGraph(3)
    rng = np.random.default_rng(1)
    edges = set(g.edges)
    for _ in range(50):
        p = sample_loop_pair(g, rng)
        for loop in (p.loop_a, p.loop_b):
            assert len(set(loop)) == 6 and set(loop) <= edges
            assert len({g.cell(x) for e in loop for x in e}) >= 2
            degree = Counter(x for e in loop for x in e)
            assert set(degree.values()) == {2} and len(degree) == 6
        assert set(p.loop_a) & set(p.loop_b) == {p.shared_edge}


@pytest.mark.parametrize("L", [2, 3])
def test_planted_chimera_structure(L):
    inst = gen_planted_chimera(L, seed=11 + L)
    assert inst.metadata["loop_pairs"] == loop_pair_count(L)
    mags = set(np.round(np.abs(inst.couplings) * 3, 12))
    assert mags <= {1.0, 2.0, 3.0} and 3.0 in mags
    up = np.ones(inst.n_spins)
    # every pair contributes -10 + 1 on uniform states, rescaled by 3
    assert energy(inst, up) == pytest.approx(energy(inst, -up))
    assert energy(inst, up) == pytest.approx(-9 * loop_pair_count(L) / 3)
    active = inst.metadata["active_sites"]
    assert len(active) == inst.n_spins and active == sorted(active)


def test_planted_chimera_l2_exact_ground_states():
    checked = 0
    for seed in range(12):
        inst = gen_planted_chimera(2, seed)
        if inst.n_spins > 26:
            continue
        _, gs = exhaustive_solve(inst)
        assert {tuple(g) for g in gs} == {tuple(g) for g in inst.known_ground_states}
        checked += 1
        if checked == 3:
            break
    assert checked == 3


def test_planted_chimera_l3_ground_energy():
    inst = gen_planted_chimera(3, 4)
    assert elimination_solve(inst).best_energy == pytest.approx(energy(inst, inst.known_ground_states[0]))


def test_planted_chimera_size_statistics():
    for L in (4, 5):
        spins = []
        couplers = []
        for seed in range(15):
            inst = gen_planted_chimera(L, seed)
            spins.append(inst.n_spins)
            couplers.append(inst.n_terms)
        assert 0.6 * 8 * L * L <= np.median(spins) <= 0.8 * 8 * L * L
        assert 0.8 * 8.5 * L * L <= np.median(couplers) <= 1.2 * 8.5 * L * L


def test_generators_are_deterministic():
    for fam, size in ((Family.CHIMERA, 3), (Family.XORSAT3, 12), (Family.SQUARE_GRID, 4), (Family.CHAIN, 5)):
        a = generate(fam, size, seed=99)
        b = generate(fam, size, seed=99)
        assert a == b and a.metadata == b.metadata


def test_chimera_generation_error_when_impossible(monkeypatch):
    from analogchaos import generators

    monkeypatch.setattr(generators, "CHIMERA_LOOP_DENSITY_PERCENT", 10_000)
    with pytest.raises(GenerationError):
        generators.gen_planted_chimera(2, 0, max_restarts=2, max_failures=50)
