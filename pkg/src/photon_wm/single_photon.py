"""Single-photon wave mechanics on a periodic grid.

The photon wave function is a :class:`~photon_wm.fields.BispinorField`.
Evolution follows ``i d/dt psi = (H/hbar) psi`` with ``hbar`` divided out:

* vacuum: ``H/hbar = c Sigma_3 curl``;
* linear medium: ``H/hbar = v Sigma_3 (curl - grad L x)`` acting on each
  helicity row, where ``grad L x`` couples a row to itself through the
  gradient of ``ln(eps mu)/4`` and to the opposite row through the
  gradient of ``ln(eps/mu)/4``.

The minus sign in front of ``grad L`` is what follows from substituting
``psi = D/sqrt(2 eps) +/- i B/sqrt(2 mu)`` into the source-free Maxwell
equations; the accompanying constraint is ``(div + grad L .) psi = 0``
with a plus sign.  Both are checked against the classical Maxwell
equations in the test-suite.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import CFLError, ConfigurationError, GridMismatchError, UndefinedDensityError
from .fields import (
    C_LIGHT,
    BispinorField,
    Grid3,
    MediumMap,
    Vec3Field,
    fft3,
    ifft3,
    medium_L_gradients,
)

log = logging.getLogger(__name__)

__all__ = [
    "SPIN_MATRICES",
    "spin_matrices",
    "PropagationConfig",
    "helicity_eigenvectors",
    "plane_wave",
    "gaussian_packet",
    "transverse_part",
    "longitudinal_norm",
    "apply_free_hamiltonian",
    "apply_medium_hamiltonian",
    "evolve_free",
    "evolve_medium",
    "evolve",
    "energy_expectation",
    "densities",
    "divergence_residual",
]


def spin_matrices() -> np.ndarray:
    """The spin-1 matrices ``(s_k)_ij = -i eps_kij`` stacked as ``(3, 3, 3)``."""
    s = np.zeros((3, 3, 3), dtype=np.complex128)
    for k, i, j in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
        s[k, i, j] = -1j
        s[k, j, i] = 1j
    return s


SPIN_MATRICES = spin_matrices()


@dataclass(frozen=True)
class PropagationConfig:
    """Time-stepping parameters.

    ``integrator`` is ``"spectral"`` (exact propagator, vacuum only) or
    ``"rk4"``.  For RK4 the step must satisfy
    ``dt <= cfl_safety * min(spacing) / max(v)``.
    """

    dt: float
    integrator: str = "rk4"
    cfl_safety: float = 0.5

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError(f"time step must be positive, got {self.dt}")
        if self.integrator not in ("spectral", "rk4"):
            raise ConfigurationError(f"unknown integrator {self.integrator!r}")
        if not self.cfl_safety > 0:
            raise ConfigurationError("cfl_safety must be positive")

    def max_stable_dt(self, grid: Grid3, medium: MediumMap | None = None) -> float:
        vmax = C_LIGHT if medium is None else float(np.max(medium.speed))
        return self.cfl_safety * min(grid.spacing) / vmax


def helicity_eigenvectors(k) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigenvectors of ``k.s`` (equivalently of ``i k x``) for a nonzero ``k``.

    Returns ``(e_plus, e_minus, e_long)`` with eigenvalues ``+|k|``,
    ``-|k|`` and ``0``.  The phase of each vector is fixed by making its
    largest-modulus component real and positive.
    """
    k = np.asarray(k, dtype=float)
    kn = np.linalg.norm(k)
    if kn == 0:
        raise ValueError("helicity is undefined at k = 0")
    w, v = np.linalg.eigh(np.einsum("i,ijk->jk", k / kn, SPIN_MATRICES))
    out = []
    for target in (1.0, -1.0, 0.0):
        e = v[:, int(np.argmin(np.abs(w - target)))]
        j = int(np.argmax(np.abs(e)))
        out.append(e * (abs(e[j]) / e[j]))
    return tuple(out)


def plane_wave(grid: Grid3, mode: tuple[int, int, int], helicity: int = 1, amplitude: complex = 1.0) -> BispinorField:
    """Transverse positive-frequency plane wave on a commensurate wavevector.

    ``mode`` gives integer cycles per box along each axis.  A helicity +1
    photon occupies the ``plus`` row with polarisation ``e_plus(k)``; a
    helicity -1 photon occupies the ``minus`` row with ``e_minus(k)``.
    Either way the field evolves as ``exp(-i c|k| t)``.
    """
    k = np.array([2 * np.pi * n / L for n, L in zip(mode, grid.extent)])
    e_plus, e_minus, _ = helicity_eigenvectors(k)
    x, y, z = grid.mesh
    phase = np.exp(1j * (k[0] * x + k[1] * y + k[2] * z))
    zero = Vec3Field.zeros(grid)
    if helicity == 1:
        return BispinorField(Vec3Field(grid, amplitude * e_plus[:, None, None, None] * phase), zero)
    if helicity == -1:
        return BispinorField(zero, Vec3Field(grid, amplitude * e_minus[:, None, None, None] * phase))
    raise ValueError(f"helicity must be +1 or -1, got {helicity}")


def gaussian_packet(grid: Grid3, width: float, polarization=(1.0, 0.0, 0.0), center=(0.0, 0.0, 0.0)) -> BispinorField:
    """Isotropic Gaussian packet ``pol * exp(-|x - x0|^2 / (2 width^2))`` in both rows.

    Not transverse in general; combine with :func:`transverse_part` when a
    divergence-free starting field is needed.
    """
    x, y, z = grid.mesh
    r2 = (x - center[0]) ** 2 + (y - center[1]) ** 2 + (z - center[2]) ** 2
    env = np.exp(-r2 / (2 * width**2))
    pol = np.asarray(polarization, dtype=np.complex128)[:, None, None, None]
    f = Vec3Field(grid, pol * env)
    return BispinorField(f, f)


def _transverse_k(fk: np.ndarray, khat: np.ndarray, nonzero: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    kdot = np.sum(khat * fk, axis=0)
    kdot = np.where(nonzero, kdot, 0.0)
    return fk - khat * kdot, kdot


def _unit_k(grid: Grid3) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    k = grid.derivative_wavenumbers
    kmag = grid.k_magnitude
    nonzero = kmag > 0
    khat = np.divide(k, kmag, out=np.zeros_like(k), where=nonzero)
    return khat, kmag, nonzero


def transverse_part(psi: BispinorField) -> BispinorField:
    """Project each helicity row onto its divergence-free part (``k = 0`` kept)."""
    khat, _, nonzero = _unit_k(psi.grid)
    rows = [ifft3(_transverse_k(fft3(f.values), khat, nonzero)[0]) for f in (psi.plus, psi.minus)]
    return BispinorField(Vec3Field(psi.grid, rows[0]), Vec3Field(psi.grid, rows[1]))


def longitudinal_norm(psi: BispinorField) -> float:
    """Energy-norm of the longitudinal (curl-free, ``k != 0``) content."""
    khat, _, nonzero = _unit_k(psi.grid)
    total = 0.0
    for f in (psi.plus, psi.minus):
        _, kdot = _transverse_k(fft3(f.values), khat, nonzero)
        total += float(np.sum(np.abs(kdot) ** 2))
    return math.sqrt(total * psi.grid.cell_volume / psi.grid.size)


def _curl_array(a: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Curl along the last three axes of ``(..., 3, nx, ny, nz)``."""
    ak = np.fft.fftn(a, axes=(-3, -2, -1))
    ck = 1j * np.stack(
        [
            k[1] * ak[..., 2, :, :, :] - k[2] * ak[..., 1, :, :, :],
            k[2] * ak[..., 0, :, :, :] - k[0] * ak[..., 2, :, :, :],
            k[0] * ak[..., 1, :, :, :] - k[1] * ak[..., 0, :, :, :],
        ],
        axis=-4,
    )
    return np.fft.ifftn(ck, axes=(-3, -2, -1))


def _cross(g: np.ndarray, f: np.ndarray) -> np.ndarray:
    return np.stack(
        [
            g[1] * f[..., 2, :, :, :] - g[2] * f[..., 1, :, :, :],
            g[2] * f[..., 0, :, :, :] - g[0] * f[..., 2, :, :, :],
            g[0] * f[..., 1, :, :, :] - g[1] * f[..., 0, :, :, :],
        ],
        axis=-4,
    )


_SIGMA3 = np.array([1.0, -1.0])[:, None, None, None, None]


def _free_h(a: np.ndarray, grid: Grid3) -> np.ndarray:
    return C_LIGHT * _SIGMA3 * _curl_array(a, grid.derivative_wavenumbers)


def _medium_h(a: np.ndarray, medium: MediumMap) -> np.ndarray:
    g_prod, g_ratio = medium_L_gradients(medium)
    curl = _curl_array(a, medium.grid.derivative_wavenumbers)
    same = _cross(g_prod, a)
    swapped = _cross(g_ratio, a[::-1])
    return medium.speed * _SIGMA3 * (curl - same - swapped)


def apply_free_hamiltonian(psi: BispinorField) -> BispinorField:
    """``(H/hbar) psi = c (curl psi_+, -curl psi_-)``."""
    return BispinorField.from_array(psi.grid, _free_h(psi.as_array(), psi.grid))


def apply_medium_hamiltonian(psi: BispinorField, medium: MediumMap) -> BispinorField:
    """In-medium Hamiltonian (divided by ``hbar``) applied to ``psi``."""
    if psi.grid != medium.grid:
        raise GridMismatchError("wave function and medium live on different grids")
    return BispinorField.from_array(psi.grid, _medium_h(psi.as_array(), medium))


def evolve_free(psi: BispinorField, t: float, return_longitudinal: bool = False):
    """Exact vacuum propagator.

    Per wavevector the transverse part of each row is rotated by the
    eigenphases of ``c Sigma_3 k.s``; longitudinal content is discarded and
    its norm is logged (and returned when ``return_longitudinal`` is set).
    """
    grid = psi.grid
    khat, kmag, nonzero = _unit_k(grid)
    wt = C_LIGHT * kmag * t
    cos, sin = np.cos(wt), np.sin(wt)
    rows = []
    longitudinal = 0.0
    for f, sign in ((psi.plus, 1.0), (psi.minus, -1.0)):
        fk = fft3(f.values)
        ft, kdot = _transverse_k(fk, khat, nonzero)
        longitudinal += float(np.sum(np.abs(kdot) ** 2))
        kxf = np.stack(
            [
                khat[1] * ft[2] - khat[2] * ft[1],
                khat[2] * ft[0] - khat[0] * ft[2],
                khat[0] * ft[1] - khat[1] * ft[0],
            ]
        )
        rows.append(ifft3(cos * ft + sign * sin * kxf))
    longitudinal = math.sqrt(longitudinal * grid.cell_volume / grid.size)
    if longitudinal > 0:
        log.debug("evolve_free discarded longitudinal content of norm %.3e", longitudinal)
    out = BispinorField(Vec3Field(grid, rows[0]), Vec3Field(grid, rows[1]))
    return (out, longitudinal) if return_longitudinal else out


def _rk4(a: np.ndarray, rhs, t: float, dt: float) -> np.ndarray:
    nsteps = max(1, math.ceil(t / dt - 1e-9))
    h = t / nsteps
    for _ in range(nsteps):
        k1 = rhs(a)
        k2 = rhs(a + 0.5 * h * k1)
        k3 = rhs(a + 0.5 * h * k2)
        k4 = rhs(a + h * k3)
        a = a + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return a


def evolve_medium(psi: BispinorField, medium: MediumMap, t: float, cfg: PropagationConfig) -> BispinorField:
    """Classical RK4 integration of the in-medium equation over time ``t``.

    Uses ``ceil(t / cfg.dt)`` equal steps.  Raises :class:`CFLError` when
    ``cfg.dt`` exceeds the stability bound.
    """
    if psi.grid != medium.grid:
        raise GridMismatchError("wave function and medium live on different grids")
    dt_max = cfg.max_stable_dt(psi.grid, medium)
    if cfg.dt > dt_max:
        raise CFLError(f"dt = {cfg.dt:.3e} s exceeds the CFL bound {dt_max:.3e} s")
    if t == 0:
        return psi

    def rhs(a):
        return -1j * _medium_h(a, medium)

    return BispinorField.from_array(psi.grid, _rk4(psi.as_array(), rhs, t, cfg.dt))


def evolve(psi: BispinorField, t: float, medium: MediumMap | None = None, cfg: PropagationConfig | None = None) -> BispinorField:
    """Dispatch to the exact vacuum propagator or to RK4.

    The exact propagator is used when the medium is vacuum (or absent) and
    either no configuration is given or it requests ``"spectral"``.
    """
    vacuum = medium is None or medium.is_vacuum
    if vacuum and (cfg is None or cfg.integrator == "spectral"):
        return evolve_free(psi, t)
    if cfg is None:
        raise ConfigurationError("RK4 evolution needs a PropagationConfig")
    if medium is None:
        medium = MediumMap.vacuum(psi.grid)
    return evolve_medium(psi, medium, t, cfg)


def energy_expectation(psi: BispinorField) -> float:
    """``integral psi^dagger psi d^3x`` (joules)."""
    a = psi.as_array()
    return float(np.sum(a.real**2 + a.imag**2) * psi.grid.cell_volume)


def _spin_bilinear(f: np.ndarray) -> np.ndarray:
    return np.einsum("a...,kab,b...->k...", f.conj(), SPIN_MATRICES, f)


def densities(psi: BispinorField, medium: MediumMap | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Energy-based probability density and current.

    ``rho = psi^dagger psi / <E>``,
    ``j = v (psi_+^dagger s psi_+ - psi_-^dagger s psi_-) / <E>``.

    The helicity sign and the local speed ``v`` make ``(rho, j)`` satisfy
    ``d rho/dt + div j = 0``; for a plane wave ``j = c rho khat``.
    """
    energy = energy_expectation(psi)
    if energy == 0:
        raise UndefinedDensityError("densities of a zero-energy field are undefined")
    a = psi.as_array()
    rho = np.sum(a.real**2 + a.imag**2, axis=(0, 1)) / energy
    j = (_spin_bilinear(a[0]) - _spin_bilinear(a[1])).real / energy
    v = C_LIGHT if medium is None else medium.speed
    return rho, v * j


def divergence_residual(psi: BispinorField, medium: MediumMap | None = None) -> float:
    """Dimensionless violation of ``(div + grad L .) psi = 0``.

    The L2 norm of the constraint over both rows divided by
    ``||psi|| * k_rms``, where ``k_rms`` is the field's own rms wavenumber
    (floored at the box's fundamental wavenumber).  A purely longitudinal
    plane wave scores 1.
    """
    grid = psi.grid
    a = psi.as_array()
    k = grid.derivative_wavenumbers
    ak = np.fft.fftn(a, axes=(-3, -2, -1))
    div = np.fft.ifftn(1j * np.sum(k * ak, axis=1), axes=(-3, -2, -1))
    if medium is not None:
        if medium.grid != grid:
            raise GridMismatchError("wave function and medium live on different grids")
        g_prod, g_ratio = medium_L_gradients(medium)
        div = div + np.sum(g_prod * a, axis=1) + np.sum(g_ratio * a[::-1], axis=1)
    power = np.abs(ak) ** 2
    total = float(np.sum(power))
    if total == 0:
        return 0.0
    k_rms = math.sqrt(float(np.sum(power * grid.k_magnitude**2)) / total)
    k_rms = max(k_rms, 2 * np.pi / max(grid.extent))
    norm = math.sqrt(float(np.sum(np.abs(a) ** 2)))
    return math.sqrt(float(np.sum(np.abs(div) ** 2))) / (norm * k_rms)
