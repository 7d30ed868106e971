import numpy as np
import pytest

from photon_wm.errors import ConfigurationError, UndefinedDensityError
from photon_wm.fields import C_LIGHT, EPS0, MU0, BispinorField, Grid3, MediumMap, Vec3Field, db_from_rs, rs_from_db
from photon_wm.single_photon import PropagationConfig, densities, divergence_residual, energy_expectation, evolve_free
from photon_wm.two_photon import (
    TwoPhotonState,
    assemble,
    coherence_matrix,
    detection_amplitude,
    evolve,
    four_term_tensor,
    joint_density,
    joint_density_grid,
    joint_energy,
    oam_pair_state,
    product_state,
    symmetrized_pair,
)

import oracles
from test_single_photon import random_transverse

L = 1e-6
G8 = Grid3.cubic(8, L)


def unit(psi):
    return psi * (1 / np.sqrt(energy_expectation(psi)))


def random_points(grid, rng, n):
    idx = rng.integers(0, grid.shape[0], size=(n, 3))
    return [grid.node(tuple(i)) for i in idx]


def test_state_validation():
    a = random_transverse(G8, 1)
    with pytest.raises(ConfigurationError):
        TwoPhotonState((a, a), np.array([[0, 1], [0, 0]]))
    with pytest.raises(ConfigurationError):
        TwoPhotonState((a,), np.eye(2))
    with pytest.raises(ConfigurationError):
        TwoPhotonState((), np.zeros((0, 0)))


def test_assemble_symmetric_pair_and_exchange():
    a, b = random_transverse(G8, 2), random_transverse(G8, 3)
    st = symmetrized_pair(a, b)
    rng = np.random.default_rng(0)
    for x1, x2 in zip(random_points(G8, rng, 5), random_points(G8, rng, 5)):
        want = (np.outer(a.sample(x1), b.sample(x2)) + np.outer(b.sample(x1), a.sample(x2))) / np.sqrt(2)
        got = assemble(st, x1, x2).value
        assert np.max(np.abs(got - want)) < 1e-14 * np.max(np.abs(want))
        assert np.max(np.abs(got - assemble(st, x2, x1).value.T)) < 1e-14 * np.max(np.abs(got))


def test_assemble_random_basis_triple_loop():
    rng = np.random.default_rng(1)
    basis = [random_transverse(G8, s) for s in (4, 5, 6)]
    c = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    st = TwoPhotonState(basis, c + c.T)
    x1, x2 = random_points(G8, rng, 2)
    want = np.zeros((6, 6), dtype=complex)
    for l in range(3):
        for m in range(3):
            v1, v2 = basis[l].sample(x1), basis[m].sample(x2)
            for i in range(6):
                for j in range(6):
                    want[i, j] += st.coeffs[l, m] * v1[i] * v2[j]
    got = assemble(st, x1, x2)
    assert np.max(np.abs(got.value - want)) < 1e-14 * np.max(np.abs(want))
    assert np.array_equal(got.block(-1, 1), got.value[3:, :3])
    with pytest.raises(ValueError):
        assemble(st, (2 * L, 0, 0), x2)


def test_evolve_identity_and_product_factorisation():
    a = random_transverse(G8, 7)
    st = product_state(a)
    x1, x2 = G8.node((1, 2, 3)), G8.node((5, 0, 7))
    assert np.allclose(assemble(evolve(st, 0.0), x1, x2).value, assemble(st, x1, x2).value, rtol=0, atol=1e-14 * np.max(np.abs(a.as_array())) ** 2)
    t = 0.3 * L / C_LIGHT
    out = evolve(st, t)
    assert out.t == t
    a_t = evolve_free(a, t)
    want = np.outer(a_t.sample(x1), a_t.sample(x2))
    assert np.max(np.abs(assemble(out, x1, x2).value - want)) < 1e-10 * np.max(np.abs(want))


def test_evolve_in_medium_uses_each_basis_medium():
    m = MediumMap.sinusoidal_epsilon(G8, 0.1)
    a = rs_from_db(*db_from_rs(random_transverse(G8, 8, kmax=1)), m)
    b = random_transverse(G8, 9, kmax=1)
    st = symmetrized_pair(a, b, (m, None))
    t = 0.1 * L / C_LIGHT
    cfg = PropagationConfig(t / 20)
    out = evolve(st, t, cfg)
    from photon_wm.single_photon import evolve_medium

    assert np.allclose(out.basis[0].as_array(), evolve_medium(a, m, t, cfg).as_array())
    assert np.allclose(out.basis[1].as_array(), evolve_medium(b, MediumMap.vacuum(G8), t, cfg).as_array())


def entangled_vacuum_pair(grid):
    a = unit(random_transverse(grid, 11, kmax=1))
    b = unit(random_transverse(grid, 12, kmax=1))
    c = np.array([[0.3, 0.8 - 0.2j], [0.8 - 0.2j, -0.4j]])
    return TwoPhotonState((a, b), c)


def full_tensor(state):
    n = state.grid.size
    v = np.stack([b.as_array().reshape(6, n) for b in state.basis])
    return np.einsum("lai,lm,mbj->aibj", v, state.coeffs, v)


def test_basis_evolution_matches_tensor_pde_oracle():
    # 4^3 pair here; the 8^3 pair runs in the acceptance suite
    g = Grid3.cubic(4, L)
    st = entangled_vacuum_pair(g)
    t = 0.05 * L / C_LIGHT
    ref = oracles.two_photon_tensor_rk4(full_tensor(st), g.shape, g.extent, t, 40)
    got = full_tensor(evolve(st, t))
    assert np.linalg.norm(got - ref) < 1e-8 * np.linalg.norm(ref)


def test_evolution_is_linear_in_coefficients():
    st = entangled_vacuum_pair(G8)
    t = 0.2 * L / C_LIGHT
    c2 = np.array([[1.0, 0.5j], [0.5j, 0.2]])
    combo = st.with_coeffs(2 * st.coeffs + (1 - 1j) * c2)
    lhs = full_tensor(evolve(combo, t))
    rhs = 2 * full_tensor(evolve(st, t)) + (1 - 1j) * full_tensor(evolve(st.with_coeffs(c2), t))
    assert np.linalg.norm(lhs - rhs) < 1e-12 * np.linalg.norm(rhs)


def test_joint_energy_cases():
    a = random_transverse(G8, 13)
    e = energy_expectation(a)
    assert joint_energy(product_state(a)) == pytest.approx(e * e, rel=1e-12)
    st = entangled_vacuum_pair(G8)
    assert joint_energy(st.with_coeffs(np.zeros((2, 2)))) == 0
    # orthogonal unit-energy fields, |C_ab|^2 summed over both orderings = 1
    from photon_wm.single_photon import plane_wave

    p, q = unit(plane_wave(G8, (1, 0, 0), 1)), unit(plane_wave(G8, (0, 1, 0), -1))
    assert abs(p.inner(q)) < 1e-14
    assert joint_energy(symmetrized_pair(p, q)) == pytest.approx(1.0, rel=1e-14)
    st_t = evolve(st, 0.7 * L / C_LIGHT)
    assert joint_energy(st_t) == pytest.approx(joint_energy(st), rel=1e-12)


def test_joint_density_normalised_and_factorises():
    st = entangled_vacuum_pair(G8)
    rho = joint_density_grid(st)
    assert np.min(rho) >= 0
    assert np.sum(rho) * G8.cell_volume**2 == pytest.approx(1, abs=1e-10)
    a = random_transverse(G8, 15)
    prod = product_state(a)
    r1, _ = densities(a)
    x1, x2 = G8.node((0, 1, 2)), G8.node((3, 4, 5))
    want = r1[(0, 1, 2)] * r1[(3, 4, 5)]
    assert joint_density(prod, x1, x2) == pytest.approx(want, rel=1e-12)
    grid_val = joint_density_grid(prod)
    assert grid_val[np.ravel_multi_index((0, 1, 2), G8.shape), np.ravel_multi_index((3, 4, 5), G8.shape)] == pytest.approx(want, rel=1e-12)
    with pytest.raises(UndefinedDensityError):
        joint_density(st.with_coeffs(np.zeros((2, 2))), x1, x2)


def test_basis_fields_satisfy_divergence_condition():
    st = oam_pair_state(G8, l=1)
    for b in st.basis:
        assert divergence_residual(b) < 1e-12


def test_detection_amplitude_single_and_product():
    d = Vec3Field(G8, random_transverse(G8, 16).plus.values)
    psi = rs_from_db(d, Vec3Field.zeros(G8))
    x = G8.node((2, 3, 4))
    assert np.allclose(detection_amplitude(psi, [x]), d.sample(x), rtol=1e-12)
    m = MediumMap.uniform(G8, 1.3)
    psi_m = rs_from_db(d, Vec3Field.zeros(G8), m)
    assert np.allclose(detection_amplitude(psi_m, [x], m), d.sample(x), rtol=1e-12)
    a = random_transverse(G8, 17)
    y = G8.node((7, 0, 1))
    two = detection_amplitude(product_state(a), [x, y])
    assert np.allclose(two, np.outer(detection_amplitude(a, [x]), detection_amplitude(a, [y])), rtol=1e-12)
    with pytest.raises(ValueError):
        detection_amplitude(product_state(a), [x, y, x])
    with pytest.raises(ValueError):
        detection_amplitude(a, [x, y])
    with pytest.raises(TypeError):
        detection_amplitude("nope", [x])


def test_detection_amplitude_vanishes_on_beam_axis():
    g = Grid3.cubic(16, L)
    st = oam_pair_state(g, l=1)
    on_axis = g.node((8, 8, 5))
    off = g.node((10, 9, 3))
    amp_axis = detection_amplitude(st, [on_axis, off])
    amp_off = detection_amplitude(st, [off, g.node((6, 9, 11))])
    assert np.max(np.abs(amp_axis)) < 1e-12 * np.max(np.abs(amp_off))


def dfields(psi, medium=None):
    return db_from_rs(psi, medium)


def test_coherence_matrix_basic_properties():
    a = random_transverse(G8, 18)
    d, b = dfields(a)
    x1, x2 = G8.node((1, 1, 1)), G8.node((4, 2, 6))
    assert np.allclose(coherence_matrix([(d, b)], x1, x2), np.outer(d.sample(x1).conj(), b.sample(x2)))
    ens = [dfields(random_transverse(G8, s))[0] for s in (19, 20, 21)]
    w = coherence_matrix([(f, f) for f in ens], x1, x1)
    assert np.max(np.abs(w - w.conj().T)) < 1e-12 * np.max(np.abs(w))
    assert np.min(np.linalg.eigvalsh(w)) > -1e-10 * np.max(np.abs(w))
    with pytest.raises(ValueError):
        coherence_matrix([], x1, x2)


def test_four_coherence_terms_reassemble_positive_helicity_tensor():
    m = MediumMap(G8, EPS0 * (1 + 0.3 * np.sin(2 * np.pi * G8.mesh[0] / L)), MU0 * (1 + 0.1 * np.cos(2 * np.pi * G8.mesh[2] / L)))
    a = rs_from_db(*db_from_rs(random_transverse(G8, 22)), m)
    st = product_state(a, m)
    d, b = db_from_rs(a, m)
    x1, x2 = G8.node((1, 2, 3)), G8.node((6, 5, 0))
    # coherence_matrix conjugates its first member, so feed it conj(F) to get <F (x) G>
    terms = {}
    for n1, f in (("d", d), ("b", b)):
        for n2, gf in (("d", d), ("b", b)):
            terms[n1 + n2] = coherence_matrix([(f.conj(), gf)], x1, x2)
    eps1, mu1 = m.at(x1)
    eps2, mu2 = m.at(x2)
    got = four_term_tensor(terms["dd"], terms["db"], terms["bd"], terms["bb"], eps1, mu1, eps2, mu2)
    want = assemble(st, x1, x2).block(1, 1)
    assert np.max(np.abs(got - want)) < 1e-12 * np.max(np.abs(want))


def _evolve_slot2(w, grid, t):
    """Propagate the second slot of a two-point function ``w[i, a, j, b]``."""
    n = grid.size
    out = np.empty_like(w)
    for i in range(n):
        for a in range(6):
            f = BispinorField.from_array(grid, w[i, a].T.reshape(2, 3, *grid.shape))
            out[i, a] = evolve_free(f, t).as_array().reshape(6, n).T
    return out


def test_first_order_wolf_equivalence():
    g = Grid3.cubic(4, L)
    ens = [random_transverse(g, s, kmax=1) for s in (23, 24)]
    t = 0.4 * L / C_LIGHT
    n = g.size

    def two_point(fields):
        v = [f.as_array().reshape(6, n).T for f in fields]  # (node, component)
        return sum(np.einsum("ia,jb->iajb", f.conj(), f) for f in v) / len(v)

    after = two_point([evolve_free(f, t) for f in ens])
    w = two_point(ens)
    w = _evolve_slot2(w, g, t)
    # the first slot is conjugated: propagate conj(w) with slots swapped, then undo
    w = np.conj(_evolve_slot2(np.conj(w).transpose(2, 3, 0, 1), g, t)).transpose(2, 3, 0, 1)
    assert np.max(np.abs(w - after)) < 1e-12 * np.max(np.abs(after))
    x1, x2 = g.node((0, 1, 2)), g.node((3, 3, 1))
    i1, i2 = np.ravel_multi_index((0, 1, 2), g.shape), np.ravel_multi_index((3, 3, 1), g.shape)
    plus = coherence_matrix([(evolve_free(f, t).plus, evolve_free(f, t).plus) for f in ens], x1, x2)
    assert np.allclose(plus, w[i1, :3, i2, :3], rtol=0, atol=1e-12 * np.max(np.abs(plus)))


def test_oam_demo_state_is_normalised_and_symmetric():
    st = oam_pair_state(G8, l=2)
    assert joint_energy(st) == pytest.approx(1.0, rel=1e-12)
    assert np.allclose(st.coeffs, st.coeffs.T)
