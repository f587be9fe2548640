import numpy as np
import pytest
from scipy import stats

from analogchaos import streams
from analogchaos.errors import ValidationError
from analogchaos.generators import gen_chain, gen_planted_chimera, gen_square_grid, gen_xorsat
from analogchaos.model import Family, Instance, InteractionTerm
from analogchaos.noise import NoiseSpec, NoiseTargets, draw_deltas, field_free_sites, perturb


def test_zero_sigma_is_identity():
    inst = gen_xorsat(12, 1)
    assert perturb(inst, NoiseSpec(0.0)) is inst


def test_negative_or_bad_sigma_rejected():
    for bad in (-0.1, float("nan"), float("inf")):
        with pytest.raises(ValidationError):
            NoiseSpec(bad)
    with pytest.raises(ValidationError):
        NoiseSpec(0.1, clamp=0.0)


def test_clamp():
    inst = Instance(2, [InteractionTerm((0, 1), 1.2)], Family.CHAIN)
    spec = NoiseSpec(1e-300, NoiseTargets.COUPLINGS_ONLY, clamp=1.0)
    assert perturb(inst, spec).couplings.tolist() == [1.0]
    inst = Instance(2, [InteractionTerm((0, 1), -1.2)], Family.CHAIN)
    assert perturb(inst, spec).couplings.tolist() == [-1.0]


def test_noise_statistics():
    spec = NoiseSpec(0.1, master_seed=3)
    d = draw_deltas(spec, 100_000)
    assert abs(d.mean()) <= 3 * 0.1 / np.sqrt(d.size)
    assert d.var() == pytest.approx(0.01, rel=0.05)
    assert stats.kstest(d / 0.1, "norm").pvalue > 1e-3


def test_couplings_only_leaves_fields():
    inst = Instance(
        3, [InteractionTerm((0,), 0.5), InteractionTerm((0, 1), 1.0), InteractionTerm((1, 2), -1.0)], Family.SQUARE_GRID
    )
    out = perturb(inst, NoiseSpec(0.3, NoiseTargets.COUPLINGS_ONLY))
    assert out.structure_key == inst.structure_key
    assert out.couplings[0] == 0.5
    assert np.all(out.couplings[1:] != inst.couplings[1:])


def test_fields_materialised_in_site_order():
    inst = gen_xorsat(12, 2)
    out = perturb(inst, NoiseSpec(0.2, NoiseTargets.COUPLINGS_AND_FIELDS))
    m = inst.n_terms
    assert out.structure_key[1][:m] == inst.structure_key[1]
    assert out.structure_key[1][m:] == tuple((i,) for i in range(12))
    assert not out.known_ground_states


def test_chimera_fields_only_on_active_spins():
    inst = gen_planted_chimera(2, 0)
    assert field_free_sites(inst).tolist() == list(range(inst.n_spins))
    with_field = Instance(4, [InteractionTerm((0, 1), 1.0), InteractionTerm((1,), 0.2)], Family.CHAIN)
    assert field_free_sites(with_field).tolist() == [0]


def test_determinism_and_label_sensitivity():
    inst = gen_square_grid(5, 0)
    spec = NoiseSpec(0.1, NoiseTargets.COUPLINGS_ONLY, master_seed=1, instance_id=2, realization=3)
    a = perturb(inst, spec)
    b = perturb(inst, spec)
    assert np.array_equal(a.couplings, b.couplings)
    c = perturb(inst, spec.for_realization(2, 4))
    assert not np.array_equal(a.couplings, c.couplings)


def test_common_random_numbers_across_sigma():
    inst = gen_chain(10)
    a = perturb(inst, NoiseSpec(0.1, NoiseTargets.COUPLINGS_ONLY, realization=5))
    b = perturb(inst, NoiseSpec(0.2, NoiseTargets.COUPLINGS_ONLY, realization=5))
    assert np.allclose(b.couplings - 1.0, 2 * (a.couplings - 1.0))


def test_stream_independence():
    n = 1_000_000
    x = streams.standard_normals(streams.generator(0, "noise", 0, 0, 0), n)
    for labels in ((0, 0, 1), (0, 1, 0), (1, 0, 0)):
        y = streams.standard_normals(streams.generator(0, "noise", *labels), n)
        assert abs(np.corrcoef(x, y)[0, 1]) < 3 / np.sqrt(n)


def test_random_access_matches_sequential_labels():
    # realization 7 does not depend on drawing 0..6 first
    spec = NoiseSpec(1.0, realization=7)
    first = draw_deltas(spec, 5)
    for r in range(7):
        draw_deltas(spec.for_realization(0, r), 5)
    assert np.array_equal(first, draw_deltas(spec, 5))


def test_open_uniforms_never_hit_endpoints():
    u = streams.open_uniforms(streams.generator(0, "noise"), 10_000)
    assert u.min() > 0 and u.max() < 1
    assert np.all(np.isfinite(streams.standard_normals(streams.generator(0, "noise"), 10_000)))


def test_stream_labels_must_be_non_negative():
    with pytest.raises(ValueError):
        streams.generator(-1, "noise")
