import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photon_wm.errors import ConfigurationError, GridMismatchError
from photon_wm.fields import (
    EPS0,
    MU0,
    C_LIGHT,
    BispinorField,
    Grid3,
    MediumMap,
    Vec3Field,
    db_from_rs,
    fft3,
    medium_L_gradients,
    rs_from_db,
    spectral_curl,
    spectral_divergence,
    spectral_gradient,
)


def band_limited(grid, seed, kmax=3, rows=3):
    """Random field containing only modes with |n_i| <= kmax."""
    rng = np.random.default_rng(seed)
    spec = np.zeros((rows, *grid.shape), dtype=complex)
    idx = np.r_[0 : kmax + 1, -kmax:0]
    sub = rng.standard_normal((rows, idx.size, idx.size, idx.size)) + 1j * rng.standard_normal((rows, idx.size, idx.size, idx.size))
    spec[np.ix_(range(rows), idx, idx, idx)] = sub
    return np.fft.ifftn(spec, axes=(-3, -2, -1))


GRID = Grid3((8, 12, 16), (1.0, 1.5, 2.0))


def test_grid_basics():
    g = Grid3.cubic(8, 2.0)
    assert g.spacing == (0.25, 0.25, 0.25)
    assert g.size == 512
    assert g.cell_volume == pytest.approx(0.25**3)
    assert np.allclose(g.axis(0)[[0, -1]], [-1.0, 0.75])
    with pytest.raises(ValueError):
        Grid3((8, 8, 8), (1.0, -1.0, 1.0))


def test_nearest_index_rejects_off_grid():
    g = Grid3.cubic(8, 1.0)
    assert g.nearest_index((0.0, 0.0, 0.0)) == (4, 4, 4)
    with pytest.raises(ValueError):
        g.nearest_index((0.9, 0.0, 0.0))


def test_wavenumbers_are_dft_dual():
    g = Grid3.cubic(8, 2.0)
    kx = g.wavenumbers[0][:, 0, 0]
    assert np.allclose(kx, 2 * np.pi * np.fft.fftfreq(8, 0.25))


def test_curl_of_constant_is_zero():
    f = Vec3Field(GRID, np.ones((3, *GRID.shape)) * np.array([1, 2j, 3])[:, None, None, None])
    assert np.max(np.abs(spectral_curl(f).values)) < 1e-12
    assert np.max(np.abs(spectral_divergence(f))) < 1e-12


def test_plane_wave_curl_and_divergence():
    x = GRID.mesh[0]
    k = 2 * np.pi * 2 / GRID.extent[0]
    ph = np.exp(1j * k * x)
    zero = np.zeros_like(ph)
    c = spectral_curl(Vec3Field(GRID, np.stack([zero, ph, zero]))).values
    assert np.allclose(c[2], 1j * k * ph, atol=1e-10)
    assert np.max(np.abs(c[:2])) < 1e-10
    d = spectral_divergence(Vec3Field(GRID, np.stack([ph, zero, zero])))
    assert np.allclose(d, 1j * k * ph, atol=1e-10)
    assert np.max(np.abs(spectral_divergence(Vec3Field(GRID, np.stack([zero, ph, zero]))))) < 1e-12


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_div_curl_and_curl_grad_vanish(seed):
    f = Vec3Field(GRID, band_limited(GRID, seed))
    c = spectral_curl(f)
    scale = np.sqrt(np.mean(np.abs(c.values) ** 2))
    assert np.sqrt(np.mean(np.abs(spectral_divergence(c)) ** 2)) < 1e-12 * scale
    phi = band_limited(GRID, seed + 1, rows=1)[0]
    g = Vec3Field(GRID, spectral_gradient(phi, GRID))
    gs = np.sqrt(np.mean(np.abs(g.values) ** 2))
    assert np.sqrt(np.mean(np.abs(spectral_curl(g).values) ** 2)) < 1e-12 * gs


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.complex_numbers(max_magnitude=10, allow_nan=False), st.complex_numbers(max_magnitude=10, allow_nan=False))
def test_operators_are_linear(seed, a, b):
    f = Vec3Field(GRID, band_limited(GRID, seed))
    g = Vec3Field(GRID, band_limited(GRID, seed + 7))
    lhs = spectral_curl(f * a + g * b).values
    rhs = a * spectral_curl(f).values + b * spectral_curl(g).values
    scale = max(1.0, np.max(np.abs(rhs)))
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * scale
    lhs = spectral_divergence(f * a + g * b)
    rhs = a * spectral_divergence(f) + b * spectral_divergence(g)
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1.0, np.max(np.abs(rhs)))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_parseval(seed):
    f = Vec3Field(GRID, band_limited(GRID, seed, kmax=4))
    pos = np.sum(np.abs(f.values) ** 2)
    dual = np.sum(np.abs(fft3(f.values)) ** 2) / GRID.size
    assert abs(pos - dual) <= 1e-12 * pos


def test_field_arithmetic_and_grid_checks():
    f = Vec3Field(GRID, band_limited(GRID, 1))
    other = Vec3Field(Grid3.cubic(8, 1.0), np.zeros((3, 8, 8, 8)))
    with pytest.raises(GridMismatchError):
        f + other
    psi = BispinorField(f, f * 2)
    assert np.allclose(psi.as_array()[1], 2 * f.values)
    assert np.allclose(BispinorField.from_array(GRID, psi.as_array()).minus.values, psi.minus.values)
    assert psi.inner(psi).real == pytest.approx(5 * f.norm_squared())


def test_rs_from_db_limits():
    g = Grid3.cubic(8, 1e-6)
    d = Vec3Field(g, band_limited(g, 3))
    zero = Vec3Field.zeros(g)
    psi = rs_from_db(d, zero)
    assert np.allclose(psi.plus.values, d.values / np.sqrt(2 * EPS0), rtol=0, atol=1e-12 * np.max(np.abs(psi.plus.values)))
    assert np.array_equal(psi.plus.values, psi.minus.values)
    psi = rs_from_db(zero, d)
    assert np.allclose(psi.plus.values, 1j * d.values / np.sqrt(2 * MU0))
    assert np.allclose(psi.plus.values, -psi.minus.values)
    with pytest.raises(GridMismatchError):
        rs_from_db(d, Vec3Field.zeros(Grid3.cubic(4, 1e-6)))


def test_rs_roundtrip_in_medium():
    g = Grid3.cubic(8, 1e-6)
    m = MediumMap.sinusoidal_epsilon(g, 0.3)
    d, b = Vec3Field(g, band_limited(g, 4)), Vec3Field(g, band_limited(g, 5))
    d2, b2 = db_from_rs(rs_from_db(d, b, m), m)
    assert np.allclose(d2.values, d.values) and np.allclose(b2.values, b.values)


def test_circular_plane_wave_has_single_helicity():
    # D = D0 (x + i y) e^{ikz}, B = z_hat x D / (eps0 c) for propagation along +z.
    g = Grid3.cubic(16, 1e-6)
    k = 2 * np.pi * 3 / g.extent[2]
    ph = np.exp(1j * k * g.mesh[2])
    for pol, vanishing in ((np.array([1, 1j, 0]), "minus"), (np.array([1, -1j, 0]), "plus")):
        dv = pol[:, None, None, None] * ph
        bv = np.cross(np.array([0, 0, 1.0]), dv, axis=0) / (EPS0 * C_LIGHT)
        psi = rs_from_db(Vec3Field(g, dv), Vec3Field(g, bv))
        gone = getattr(psi, vanishing).values
        kept = psi.minus.values if vanishing == "plus" else psi.plus.values
        assert np.max(np.abs(gone)) < 1e-12 * np.max(np.abs(kept))


def test_medium_validation_and_vacuum():
    g = Grid3.cubic(8, 1.0)
    with pytest.raises(ConfigurationError):
        MediumMap(g, -1.0, MU0)
    vac = MediumMap.vacuum(g)
    assert vac.is_vacuum
    assert np.allclose(vac.speed, C_LIGHT)
    g1, g2 = medium_L_gradients(vac)
    assert np.max(np.abs(vac.half_log_product)) == 0 and np.max(np.abs(vac.half_log_ratio)) == 0
    assert np.max(np.abs(g1)) == 0 and np.max(np.abs(g2)) == 0


def test_impedance_matched_medium_has_no_ratio_gradient():
    g = Grid3.cubic(8, 1.0)
    prof = 1 + 0.3 * np.sin(2 * np.pi * g.mesh[1])
    m = MediumMap(g, EPS0 * prof, MU0 * prof)
    _, g2 = medium_L_gradients(m)
    assert np.max(np.abs(g2)) < 1e-14
    g1, _ = medium_L_gradients(m)
    assert np.max(np.abs(g1)) > 0.1


def test_sinusoidal_gradients_match_analytic():
    n, L, a = 64, 1.0, 0.1
    g = Grid3((n, 4, 4), (L, L, L))
    m = MediumMap.sinusoidal_epsilon(g, a)
    x = g.mesh[0] - g.origin[0]
    s = np.sin(2 * np.pi * x / L)
    dlog = a * (2 * np.pi / L) * np.cos(2 * np.pi * x / L) / (1 + a * s)
    g1, g2 = medium_L_gradients(m)
    assert np.max(np.abs(g1[0] - dlog / 4)) < 1e-10
    assert np.max(np.abs(g2[0] - dlog / 4)) < 1e-10
    assert np.max(np.abs(g1[1:])) < 1e-14
