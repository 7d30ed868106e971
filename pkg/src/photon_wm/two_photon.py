"""Two-photon wave functions built from single-photon solutions.

A :class:`TwoPhotonState` stores a basis of single-photon fields and a
symmetric coefficient matrix ``C``; the six-index tensor
``Psi(x1, x2) = sum_lm C_lm psi_l(x1) (x) psi_m(x2)`` is only ever formed
at the points asked for.  Because the two-photon Hamiltonian is the sum of
one-photon Hamiltonians acting on separate tensor slots, evolving every
basis field with the one-photon propagator and keeping ``C`` fixed is an
exact solution of the two-photon equation of motion.

"Orthogonal" and "normalised" refer to the energy inner product
``integral psi^dagger phi d^3x`` throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, GridMismatchError, UndefinedDensityError
from .fields import EPS0, BispinorField, MediumMap, Vec3Field
from .single_photon import PropagationConfig, evolve as evolve_one, helicity_eigenvectors, transverse_part

__all__ = [
    "TwoPhotonState",
    "JointSample",
    "product_state",
    "symmetrized_pair",
    "assemble",
    "evolve",
    "gram_matrix",
    "joint_energy",
    "joint_density",
    "joint_density_grid",
    "electric_content",
    "detection_amplitude",
    "coherence_matrix",
    "four_term_tensor",
    "lg_beam",
    "oam_pair_state",
]


@dataclass(frozen=True, eq=False)
class TwoPhotonState:
    """Symmetric superposition of products of single-photon basis fields.

    ``media[l]`` is the medium ``basis[l]`` propagates in (``None`` means
    vacuum).  All basis fields share one grid.
    """

    basis: tuple
    coeffs: np.ndarray
    media: tuple = field(default=None)
    t: float = 0.0

    def __post_init__(self):
        basis = tuple(self.basis)
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        n = len(basis)
        if n == 0:
            raise ConfigurationError("a two-photon state needs at least one basis field")
        if coeffs.shape != (n, n):
            raise ConfigurationError(f"coefficient matrix must be {n}x{n}, got {coeffs.shape}")
        scale = max(float(np.max(np.abs(coeffs))), 1e-300)
        if np.max(np.abs(coeffs - coeffs.T)) > 1e-12 * scale:
            raise ConfigurationError("coefficient matrix must be symmetric (bosonic photons)")
        grid = basis[0].grid
        for b in basis[1:]:
            if b.grid != grid:
                raise GridMismatchError("all basis fields must share one grid")
        media = (None,) * n if self.media is None else tuple(self.media)
        if len(media) != n:
            raise ConfigurationError("need one medium entry per basis field")
        for m in media:
            if m is not None and m.grid != grid:
                raise GridMismatchError("basis medium lives on a different grid")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "media", media)

    @property
    def grid(self):
        return self.basis[0].grid

    def with_coeffs(self, coeffs) -> TwoPhotonState:
        return TwoPhotonState(self.basis, coeffs, self.media, self.t)


def product_state(psi: BispinorField, medium: MediumMap | None = None) -> TwoPhotonState:
    """Both photons in the single-photon state ``psi``."""
    return TwoPhotonState((psi,), np.ones((1, 1)), (medium,))


def symmetrized_pair(a: BispinorField, b: BispinorField, media=None) -> TwoPhotonState:
    """``(a (x) b + b (x) a)/sqrt(2)``."""
    c = np.array([[0, 1], [1, 0]]) / np.sqrt(2)
    return TwoPhotonState((a, b), c, media)


@dataclass(frozen=True)
class JointSample:
    """Two-photon tensor at ``(x1, x2)``.

    ``value[a, b]`` with ``a = 3 * (0 if sigma1 == +1 else 1) + i`` indexes
    helicity and Cartesian component of photon 1, likewise ``b`` for
    photon 2.
    """

    x1: np.ndarray
    x2: np.ndarray
    value: np.ndarray

    def block(self, sigma1: int, sigma2: int) -> np.ndarray:
        i = 0 if sigma1 == 1 else 3
        j = 0 if sigma2 == 1 else 3
        return self.value[i : i + 3, j : j + 3]


def _samples(state: TwoPhotonState, point) -> np.ndarray:
    return np.stack([b.sample(point) for b in state.basis])


def assemble(state: TwoPhotonState, x1, x2) -> JointSample:
    """``sum_lm C_lm psi_l(x1) (x) psi_m(x2)`` at the nearest grid nodes."""
    v1 = _samples(state, x1)
    v2 = _samples(state, x2)
    value = np.einsum("la,lm,mb->ab", v1, state.coeffs, v2)
    return JointSample(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float), value)


def evolve(state: TwoPhotonState, t: float, cfg: PropagationConfig | None = None) -> TwoPhotonState:
    """Advance every basis field by ``t``; coefficients are unchanged."""
    basis = tuple(evolve_one(b, t, m, cfg) for b, m in zip(state.basis, state.media))
    return TwoPhotonState(basis, state.coeffs, state.media, state.t + t)


def gram_matrix(state: TwoPhotonState) -> np.ndarray:
    """Energy inner products ``G[l, l'] = <psi_l | psi_l'>``."""
    a = np.stack([b.as_array().ravel() for b in state.basis])
    return (a.conj() @ a.T) * state.grid.cell_volume


def joint_energy(state: TwoPhotonState) -> float:
    """``<E1 E2> = sum conj(C_lm) C_l'm' G_ll' G_mm'``."""
    g = gram_matrix(state)
    c = state.coeffs
    return float(np.sum(c.conj() * (g @ c @ g.T)).real)


def joint_density(state: TwoPhotonState, x1, x2, energy: float | None = None) -> float:
    """``Tr[Psi^dagger Psi](x1, x2) / <E1 E2>``."""
    energy = joint_energy(state) if energy is None else energy
    if energy <= 0:
        raise UndefinedDensityError("joint density of a zero-energy state is undefined")
    v = assemble(state, x1, x2).value
    return float(np.sum(np.abs(v) ** 2) / energy)


def joint_density_grid(state: TwoPhotonState) -> np.ndarray:
    """Joint density at every node pair, shape ``(N, N)`` with ``N = grid.size``.

    Memory grows as ``36 N^2``; intended for grids up to about ``8^3``.
    """
    energy = joint_energy(state)
    if energy <= 0:
        raise UndefinedDensityError("joint density of a zero-energy state is undefined")
    npts = state.grid.size
    v = np.stack([b.as_array().reshape(6, npts) for b in state.basis])  # (l, a, x)
    left = np.einsum("lax,lm->max", v, state.coeffs)
    rho = np.zeros((npts, npts))
    for a in range(6):
        t = np.einsum("mx,mby->bxy", left[:, a, :], v)
        rho += np.sum(t.real**2 + t.imag**2, axis=0)
    return rho / energy


def electric_content(psi: BispinorField, medium: MediumMap | None, point) -> np.ndarray:
    """``D = sqrt(eps/2) (psi_+ + psi_-)`` at the nearest node."""
    eps = EPS0 if medium is None else medium.at(point)[0]
    v = psi.sample(point)
    return np.sqrt(eps / 2) * (v[:3] + v[3:])


def detection_amplitude(state, points, medium: MediumMap | None = None) -> np.ndarray:
    """Electric-field-only detection amplitude.

    For a single-photon :class:`BispinorField` and one point this is the
    3-vector ``D(x)``; for a :class:`TwoPhotonState` and two points it is
    the ``3 x 3`` tensor ``sum_lm C_lm D_l(x1) (x) D_m(x2)``.  Higher photon
    numbers are not supported.
    """
    points = list(points)
    n = len(points)
    if n > 2:
        raise ValueError("detection amplitudes are implemented for n <= 2 photons only")
    if isinstance(state, BispinorField):
        if n != 1:
            raise ValueError("a single-photon field takes exactly one detection point")
        return electric_content(state, medium, points[0])
    if isinstance(state, TwoPhotonState):
        if n != 2:
            raise ValueError("a two-photon state takes exactly two detection points")
        d1 = np.stack([electric_content(b, m, points[0]) for b, m in zip(state.basis, state.media)])
        d2 = np.stack([electric_content(b, m, points[1]) for b, m in zip(state.basis, state.media)])
        return np.einsum("li,lm,mj->ij", d1, state.coeffs, d2)
    raise TypeError(f"unsupported state type {type(state).__name__}")


def coherence_matrix(ensemble, x1, x2) -> np.ndarray:
    """Ensemble mean of ``F*(x1) (x) G(x2)`` over ``(F, G)`` realisations."""
    ensemble = list(ensemble)
    if not ensemble:
        raise ValueError("coherence matrix of an empty ensemble is undefined")
    acc = np.zeros((3, 3), dtype=np.complex128)
    for f, g in ensemble:
        if not isinstance(f, Vec3Field) or not isinstance(g, Vec3Field):
            raise TypeError("ensemble members must be (Vec3Field, Vec3Field) pairs")
        acc += np.outer(f.sample(x1).conj(), g.sample(x2))
    return acc / len(ensemble)


def four_term_tensor(a_dd, a_db, a_bd, a_bb, eps1, mu1, eps2, mu2) -> np.ndarray:
    """Positive-helicity two-photon tensor from the four D/B coherence matrices.

    ``a_fg`` must hold ``<F(x1) (x) G(x2)>``, i.e. coherence matrices formed
    from realisations whose first member is supplied already conjugated
    (``coherence_matrix`` conjugates it back).  The result is
    ``[D1/sqrt(2 eps1) + i B1/sqrt(2 mu1)] (x) [D2/sqrt(2 eps2) + i B2/sqrt(2 mu2)]``
    expanded term by term.
    """
    return (
        a_dd / (2 * np.sqrt(eps1 * eps2))
        + 1j * a_db / (2 * np.sqrt(eps1 * mu2))
        + 1j * a_bd / (2 * np.sqrt(mu1 * eps2))
        - a_bb / (2 * np.sqrt(mu1 * mu2))
    )


def lg_beam(grid, l: int, waist: float, cycles_z: int = 2, helicity: int = 1) -> BispinorField:
    """Paraxial ``p = 0`` Laguerre-Gauss beam along ``+z``, unit energy.

    The transverse profile ``(r/w)^|l| exp(-r^2/w^2) exp(i l θ)`` about the
    grid centre carries the circular polarisation of the requested
    helicity and is made divergence-free by transverse projection.
    """
    kz = 2 * np.pi * cycles_z / grid.extent[2]
    e_plus, e_minus, _ = helicity_eigenvectors(np.array([0.0, 0.0, kz]))
    x, y, z = grid.mesh
    cx = grid.origin[0] + grid.extent[0] / 2
    cy = grid.origin[1] + grid.extent[1] / 2
    u, v = (x - cx) / waist, (y - cy) / waist
    r2 = u * u + v * v
    profile = (u + 1j * np.sign(l) * v) ** abs(l) * np.exp(-r2) * np.exp(1j * kz * z)
    # The planes x = -L/2 and y = -L/2 have no mirror partner on a periodic
    # grid; clearing them keeps the profile exactly covariant under
    # quarter turns about the axis.
    profile[0, :, :] = 0
    profile[:, 0, :] = 0
    zero = Vec3Field.zeros(grid)
    if helicity == 1:
        psi = BispinorField(Vec3Field(grid, e_plus[:, None, None, None] * profile), zero)
    elif helicity == -1:
        psi = BispinorField(zero, Vec3Field(grid, e_minus[:, None, None, None] * profile))
    else:
        raise ValueError(f"helicity must be +1 or -1, got {helicity}")
    psi = transverse_part(psi)
    return psi * (1 / np.sqrt(psi.inner(psi).real))


def oam_pair_state(grid, l: int = 1, waist: float | None = None, cycles_z: int = 2) -> TwoPhotonState:
    """``(|l,+> |-l,-> + |-l,-> |l,+>)/sqrt(2)`` built from :func:`lg_beam`.

    With ``l`` odd each factor has total angular momentum ``+/-2`` about
    the beam axis, so every field component vanishes there exactly on a
    grid with an even number of nodes per transverse axis.  Amplitudes
    vanish at the axis only for a beam centred on a node.
    """
    waist = grid.extent[0] / 6 if waist is None else waist
    a = lg_beam(grid, l, waist, cycles_z, helicity=1)
    b = lg_beam(grid, -l, waist, cycles_z, helicity=-1)
    return symmetrized_pair(a, b)
