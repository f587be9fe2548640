import itertools

import numpy as np
import pytest

from analogchaos.errors import SolverGuardError, ValidationError
from analogchaos.generators import gen_chain, gen_planted_chimera, gen_square_grid, gen_xorsat
from analogchaos.model import Family, Instance, InteractionTerm, energy
from analogchaos.noise import NoiseSpec, NoiseTargets, perturb
from analogchaos.solvers import (
    PtParams,
    SolverProfile,
    elimination_solve,
    elimination_solve_batch,
    exhaustive_solve,
    grid_dp_solve,
    houdayer_move,
    is_flip_stable,
    pt_solve,
    steepest_descent,
)
from analogchaos.solvers.elimination import plan_for

from conftest import brute_force


def ferro_grid(L):
    edges = []
    for r in range(L):
        for c in range(L):
            i = r * L + c
            if c + 1 < L:
                edges.append(InteractionTerm((i, i + 1), -1.0))
            if r + 1 < L:
                edges.append(InteractionTerm((i, i + L), -1.0))
    return Instance(L * L, edges, Family.SQUARE_GRID, {"L": L, "rows": L, "cols": L})


def random_mixed(rng, n):
    seen = set()
    terms = []
    while len(terms) < 2 * n:
        a = int(rng.integers(1, min(n, 3) + 1))
        s = tuple(sorted(rng.choice(n, a, replace=False).tolist()))
        if s not in seen:
            seen.add(s)
            terms.append(InteractionTerm(s, float(rng.normal())))
    return Instance(n, terms, Family.XORSAT3)


# -- descent ---------------------------------------------------------------


def test_descent_fixed_point_and_monotone(rng):
    inst = gen_planted_chimera(2, 0)
    up = np.ones(inst.n_spins, dtype=np.int8)
    assert np.array_equal(steepest_descent(inst, up), up)
    for _ in range(20):
        s = rng.choice([-1, 1], inst.n_spins)
        out = steepest_descent(inst, s)
        assert energy(inst, out) <= energy(inst, s)
        assert is_flip_stable(inst, out)


def _downhill(inst, s):
    e0 = energy(inst, s)
    out = []
    for j in range(inst.n_spins):
        t = s.copy()
        t[j] *= -1
        if energy(inst, t) < e0 - 1e-12:
            out.append(j)
    return out


def test_descent_recovers_single_flip():
    # when flipping the spin back is the only downhill move, descent must find the
    # planted state; strongly bound pairs can otherwise drag a neighbour along
    recovered = 0
    for seed in range(3):
        inst = gen_planted_chimera(3, seed)
        for i in range(inst.n_spins):
            s = np.ones(inst.n_spins, dtype=np.int8)
            s[i] = -1
            out = steepest_descent(inst, s)
            assert energy(inst, out) < energy(inst, s) and is_flip_stable(inst, out)
            if _downhill(inst, s) == [i]:
                assert np.array_equal(out, np.ones(inst.n_spins))
                recovered += 1
    assert recovered > 100


def test_descent_rejects_zero_change_flips():
    # spin 2 is free: flipping it changes nothing and must not happen
    inst = Instance(3, [InteractionTerm((0, 1), -1.0), InteractionTerm((2,), 0.0)], Family.CHAIN)
    assert steepest_descent(inst, [1, 1, -1]).tolist() == [1, 1, -1]


def test_descent_ascending_order():
    # spin 0 flips first, after which spin 1 is satisfied
    inst = Instance(3, [InteractionTerm((0, 1), 1.0), InteractionTerm((1, 2), 1.0)], Family.CHAIN)
    assert steepest_descent(inst, [1, 1, -1], sweeps=1).tolist() == [-1, 1, -1]


# -- exhaustive ------------------------------------------------------------


def test_exhaustive_examples():
    res, gs = exhaustive_solve(gen_chain(3))
    assert res.best_energy == -2.0 and len(gs) == 2 and res.exact
    res, gs = exhaustive_solve(ferro_grid(2))
    assert res.best_energy == -4.0 and len(gs) == 2


def test_exhaustive_matches_brute_force(rng):
    for _ in range(15):
        inst = random_mixed(rng, int(rng.integers(3, 11)))
        best, all_gs = brute_force(inst)
        res, gs = exhaustive_solve(inst)
        assert res.best_energy == pytest.approx(best, abs=1e-9)
        assert {tuple(g) for g in gs} == {tuple(g) for g in all_gs}
        assert res.best_energy == pytest.approx(energy(inst, res.best_config))


def test_exhaustive_guard():
    with pytest.raises(SolverGuardError):
        exhaustive_solve(gen_chain(31))


# -- grid DP ---------------------------------------------------------------


def test_grid_dp_examples():
    assert grid_dp_solve(ferro_grid(2)).best_energy == -4.0
    inst = gen_square_grid(4, 17)
    assert grid_dp_solve(inst).best_energy == exhaustive_solve(inst)[0].best_energy


def test_grid_dp_perturbed_5x5():
    inst = gen_square_grid(5, 3)
    for r in range(3):
        noisy = perturb(inst, NoiseSpec(0.4, NoiseTargets.COUPLINGS_AND_FIELDS, realization=r))
        dp = grid_dp_solve(noisy)
        assert dp.exact
        assert dp.best_energy == pytest.approx(exhaustive_solve(noisy)[0].best_energy, abs=1e-9)
        assert dp.best_energy == pytest.approx(energy(noisy, dp.best_config), abs=1e-12)


def test_grid_dp_rectangular():
    from analogchaos.generators import grid_edges

    rng = np.random.default_rng(4)
    for rows, cols in ((2, 7), (6, 3)):
        terms = [InteractionTerm(e, float(rng.normal())) for e in grid_edges(rows, cols)]
        inst = Instance(rows * cols, terms, Family.SQUARE_GRID, {"rows": rows, "cols": cols})
        assert grid_dp_solve(inst).best_energy == pytest.approx(brute_force(inst)[0], abs=1e-9)


def test_grid_dp_guards():
    with pytest.raises(SolverGuardError):
        grid_dp_solve(gen_chain(4))
    with pytest.raises(SolverGuardError):
        grid_dp_solve(gen_square_grid(17, 0))


# -- elimination -----------------------------------------------------------


def test_elimination_matches_exhaustive(rng):
    for _ in range(15):
        inst = random_mixed(rng, int(rng.integers(3, 14)))
        res = elimination_solve(inst)
        assert res.best_energy == pytest.approx(exhaustive_solve(inst)[0].best_energy, abs=1e-9)


def test_elimination_batch_and_plan_reuse():
    inst = gen_planted_chimera(3, 1)
    noisy = [perturb(inst, NoiseSpec(0.2, realization=r)) for r in range(6)]
    configs, values = elimination_solve_batch(noisy[0], np.stack([x.couplings for x in noisy]))
    for x, c, v in zip(noisy, configs, values):
        assert energy(x, c) == pytest.approx(v, abs=1e-9)
        assert v == pytest.approx(elimination_solve(x).best_energy, abs=1e-9)
    assert plan_for(noisy[0]) is plan_for(noisy[5])


def test_elimination_guard():
    inst = gen_square_grid(24, 0)
    with pytest.raises(SolverGuardError):
        elimination_solve(inst)


# -- parallel tempering ----------------------------------------------------


def test_pt_params():
    p = PtParams()
    assert (p.n_replicas, p.beta_min, p.beta_max, p.exchange_period) == (32, 0.1, 20.0, 10)
    assert p.betas[0] == pytest.approx(0.1) and p.betas[-1] == pytest.approx(20.0)
    assert np.allclose(np.diff(np.log(p.betas)), np.log(200) / 31)
    with pytest.raises(ValidationError):
        PtParams(n_replicas=1)
    with pytest.raises(ValidationError):
        PtParams(beta_min=2.0, beta_max=1.0)


def test_pt_chain():
    res = pt_solve(gen_chain(32), PtParams(sweeps=10_000), (1,))
    assert res.best_energy == -31.0 and not res.exact
    assert res.best_energy == energy(gen_chain(32), res.best_config)


def test_pt_xorsat_matches_exhaustive():
    hits = 0
    for seed in range(20):
        inst = gen_xorsat(12, seed)
        res = pt_solve(inst, PtParams(sweeps=2_000), (seed,))
        hits += res.best_energy == pytest.approx(exhaustive_solve(inst)[0].best_energy)
    assert hits >= 19


def test_pt_grids_match_dp():
    for seed in range(20):
        inst = gen_square_grid(4, seed)
        res = pt_solve(inst, PtParams(sweeps=2_000), (seed,))
        assert res.best_energy == grid_dp_solve(inst).best_energy


def test_pt_best_is_descent_stable():
    inst = gen_xorsat(30, 0)
    res = pt_solve(inst, PtParams(sweeps=500), (0,))
    assert energy(inst, res.best_config) <= energy(inst, steepest_descent(inst, res.best_config))


def test_pt_deterministic():
    inst = gen_xorsat(24, 1)
    a = pt_solve(inst, PtParams(sweeps=300), (5, 1))
    b = pt_solve(inst, PtParams(sweeps=300), (5, 1))
    assert np.array_equal(a.best_config, b.best_config) and a.diagnostics == b.diagnostics


def test_exchange_detailed_balance():
    """Per-temperature mean energies on a 2x2 ferro grid match exact Gibbs averages."""
    inst = ferro_grid(2)
    params = PtParams(n_replicas=4, beta_min=0.2, beta_max=1.5, sweeps=50_000, replica_pairs=False)
    states = np.array(list(itertools.product((1, -1), repeat=4)))
    e = np.array([energy(inst, s) for s in states])
    exact = [(e * np.exp(-b * e)).sum() / np.exp(-b * e).sum() for b in params.betas]
    runs = np.array([pt_solve(inst, params, (run,)).diagnostics["mean_energy"] for run in range(20)])
    se = runs.std(axis=0, ddof=1) / np.sqrt(len(runs))
    assert np.all(np.abs(runs.mean(axis=0) - exact) <= 3 * se + 1e-12)


# -- Houdayer --------------------------------------------------------------


def test_houdayer_noop_on_equal_replicas():
    inst = gen_square_grid(4, 0)
    a = np.ones(16, dtype=np.int8)
    na, nb, acc = houdayer_move(inst, a, a.copy())
    assert not acc and np.array_equal(na, a) and np.array_equal(nb, a)


def test_houdayer_isoenergetic_on_pairwise(rng):
    inst = perturb(gen_square_grid(5, 1), NoiseSpec(0.3, NoiseTargets.COUPLINGS_ONLY))
    for k in range(200):
        a = rng.choice([-1, 1], 25).astype(np.int8)
        b = rng.choice([-1, 1], 25).astype(np.int8)
        na, nb, acc = houdayer_move(inst, a, b, (k,))
        assert acc
        assert energy(inst, na) + energy(inst, nb) == pytest.approx(energy(inst, a) + energy(inst, b), abs=1e-9)
        changed = na != a
        assert np.array_equal(changed, nb != b) and np.all(a[changed] != b[changed])


def test_houdayer_three_body_acceptance(rng):
    """With only 3-body terms each cluster is one site; acceptance follows Metropolis."""
    inst = gen_xorsat(12, 3)
    beta = 1.0
    accepted = 0
    expected = 0.0
    variance = 0.0
    for k in range(1000):
        a = rng.choice([-1, 1], 12).astype(np.int8)
        b = rng.choice([-1, 1], 12).astype(np.int8)
        neg = np.flatnonzero(a != b)
        if neg.size == 0:
            continue
        e0 = energy(inst, a) + energy(inst, b)
        probs = []
        for i in neg:
            fa, fb = a.copy(), b.copy()
            fa[i] *= -1
            fb[i] *= -1
            probs.append(min(1.0, np.exp(-beta * (energy(inst, fa) + energy(inst, fb) - e0))))
        p = float(np.mean(probs))
        expected += p
        variance += p * (1 - p)
        na, nb, acc = houdayer_move(inst, a, b, (k,), beta)
        accepted += acc
        if acc:
            assert np.count_nonzero(na != a) == 1
        else:
            assert np.array_equal(na, a) and np.array_equal(nb, b)
    assert abs(accepted - expected) <= 4 * np.sqrt(variance)


# -- registry --------------------------------------------------------------


def test_profile_resolution():
    auto = SolverProfile()
    assert auto.resolve(gen_square_grid(4, 0)) == "grid-dp"
    assert auto.resolve(gen_planted_chimera(2, 0)) == "elimination"
    assert auto.resolve(gen_xorsat(60, 0)) == "pt"
    with pytest.raises(ValidationError):
        SolverProfile("annealing")


def test_solve_many_matches_solve():
    inst = gen_planted_chimera(2, 3)
    noisy = [perturb(inst, NoiseSpec(0.2, realization=r)) for r in range(4)]
    prof = SolverProfile()
    many = prof.solve_many(noisy, [(0, r) for r in range(4)])
    for x, res in zip(noisy, many):
        assert res.best_energy == pytest.approx(prof.solve(x).best_energy, abs=1e-9)
