"""Periodic grids, complex vector fields and pseudospectral derivatives.

Everything here is SI.  Fields are stored as complex arrays of shape
``(3, nx, ny, nz)``; derivatives are taken by multiplying Fourier
coefficients by ``i k`` on the discrete dual grid, with the Nyquist
wavenumber of even-sized axes set to zero so that derivatives of real
data stay real.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.constants import c as C_LIGHT
from scipy.constants import epsilon_0 as EPS0
from scipy.constants import hbar as HBAR  # noqa: F401  (carried, divided out of all evolution)
from scipy.constants import mu_0 as MU0

from .errors import ConfigurationError, GridMismatchError

__all__ = [
    "C_LIGHT",
    "EPS0",
    "MU0",
    "HBAR",
    "Grid3",
    "Vec3Field",
    "BispinorField",
    "MediumMap",
    "fft3",
    "ifft3",
    "spectral_curl",
    "spectral_divergence",
    "spectral_gradient",
    "rs_from_db",
    "db_from_rs",
    "medium_L_gradients",
]

_AXES = (-3, -2, -1)


@dataclass(frozen=True)
class Grid3:
    """Uniform periodic grid on a box.

    Parameters
    ----------
    shape : tuple of int
        Samples per axis.  Powers of two keep the FFTs fast.
    extent : tuple of float
        Physical box length per axis (metres).
    origin : tuple of float, optional
        Coordinate of node ``(0, 0, 0)``.  Defaults to ``-extent/2`` so the
        box is centred on the coordinate origin.
    """

    shape: tuple[int, int, int]
    extent: tuple[float, float, float]
    origin: tuple[float, float, float] | None = None

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        extent = tuple(float(e) for e in self.extent)
        if len(shape) != 3 or len(extent) != 3:
            raise ConfigurationError("Grid3 needs three samples and three extents")
        if any(n <= 0 for n in shape):
            raise ConfigurationError(f"samples per axis must be positive, got {shape}")
        if any(not e > 0 for e in extent):
            raise ConfigurationError(f"extent must be positive on every axis, got {extent}")
        origin = self.origin
        origin = tuple(-e / 2 for e in extent) if origin is None else tuple(float(o) for o in origin)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "extent", extent)
        object.__setattr__(self, "origin", origin)

    @classmethod
    def cubic(cls, n: int, length: float) -> Grid3:
        return cls((n, n, n), (length, length, length))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def spacing(self) -> tuple[float, float, float]:
        return tuple(e / n for e, n in zip(self.extent, self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis(self, i: int) -> np.ndarray:
        return self.origin[i] + self.spacing[i] * np.arange(self.shape[i])

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(self.axis(0), self.axis(1), self.axis(2), indexing="ij"))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Angular wavenumbers on the FFT dual grid, broadcastable to ``shape``."""
        ks = []
        for i in range(3):
            k = 2 * np.pi * np.fft.fftfreq(self.shape[i], d=self.spacing[i])
            bshape = [1, 1, 1]
            bshape[i] = self.shape[i]
            ks.append(k.reshape(bshape))
        return tuple(ks)

    @cached_property
    def derivative_wavenumbers(self) -> np.ndarray:
        """``(3, nx, ny, nz)`` array of ``k`` used for differentiation.

        Identical to :attr:`wavenumbers` except that the unpaired Nyquist
        mode of an even axis is zeroed.
        """
        out = np.zeros((3,) + self.shape)
        for i, k in enumerate(self.wavenumbers):
            k = k.copy()
            n = self.shape[i]
            if n % 2 == 0:
                k.flat[n // 2] = 0.0
            out[i] = np.broadcast_to(k, self.shape)
        return out

    @cached_property
    def k_magnitude(self) -> np.ndarray:
        k = self.derivative_wavenumbers
        return np.sqrt(np.sum(k * k, axis=0))

    def nearest_index(self, point) -> tuple[int, int, int]:
        """Index of the grid node nearest to ``point``.

        Raises ``ValueError`` for points outside the box.
        """
        point = np.asarray(point, dtype=float)
        if point.shape != (3,):
            raise ValueError(f"expected a 3-vector point, got shape {point.shape}")
        idx = []
        for i in range(3):
            j = int(np.rint((point[i] - self.origin[i]) / self.spacing[i]))
            if not 0 <= j < self.shape[i]:
                raise ValueError(f"point {tuple(point)} lies outside the grid along axis {i}")
            idx.append(j)
        return tuple(idx)

    def node(self, index) -> np.ndarray:
        return np.array([self.origin[i] + self.spacing[i] * index[i] for i in range(3)])


def fft3(a: np.ndarray) -> np.ndarray:
    return np.fft.fftn(a, axes=_AXES)


def ifft3(a: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(a, axes=_AXES)


def _check_same_grid(*grids: Grid3) -> Grid3:
    first = grids[0]
    for g in grids[1:]:
        if g != first:
            raise GridMismatchError(f"grid mismatch: {first} vs {g}")
    return first


@dataclass(frozen=True, eq=False)
class Vec3Field:
    """Complex 3-vector field sampled on a :class:`Grid3`."""

    grid: Grid3
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != (3,) + self.grid.shape:
            raise ValueError(f"values must have shape {(3,) + self.grid.shape}, got {values.shape}")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: Grid3) -> Vec3Field:
        return cls(grid, np.zeros((3,) + grid.shape, dtype=np.complex128))

    def _other(self, other) -> np.ndarray:
        if isinstance(other, Vec3Field):
            _check_same_grid(self.grid, other.grid)
            return other.values
        return NotImplemented

    def __add__(self, other):
        v = self._other(other)
        return NotImplemented if v is NotImplemented else Vec3Field(self.grid, self.values + v)

    def __sub__(self, other):
        v = self._other(other)
        return NotImplemented if v is NotImplemented else Vec3Field(self.grid, self.values - v)

    def __mul__(self, a):
        if isinstance(a, Vec3Field):
            return NotImplemented
        return Vec3Field(self.grid, self.values * a)

    __rmul__ = __mul__

    def __truediv__(self, a):
        return Vec3Field(self.grid, self.values / a)

    def __neg__(self):
        return Vec3Field(self.grid, -self.values)

    def conj(self) -> Vec3Field:
        return Vec3Field(self.grid, self.values.conj())

    def sample(self, point) -> np.ndarray:
        i, j, k = self.grid.nearest_index(point)
        return self.values[:, i, j, k].copy()

    def norm_squared(self) -> float:
        """``sum |f|^2`` times the cell volume."""
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume)

    def spectrum(self) -> np.ndarray:
        return fft3(self.values)


@dataclass(frozen=True, eq=False)
class BispinorField:
    """Photon wave function: positive- and negative-helicity 3-vector fields."""

    plus: Vec3Field
    minus: Vec3Field

    def __post_init__(self):
        _check_same_grid(self.plus.grid, self.minus.grid)

    @classmethod
    def from_array(cls, grid: Grid3, array: np.ndarray) -> BispinorField:
        """Build from a ``(2, 3, nx, ny, nz)`` array, row 0 being helicity +1."""
        array = np.asarray(array)
        return cls(Vec3Field(grid, array[0]), Vec3Field(grid, array[1]))

    @classmethod
    def zeros(cls, grid: Grid3) -> BispinorField:
        return cls(Vec3Field.zeros(grid), Vec3Field.zeros(grid))

    @property
    def grid(self) -> Grid3:
        return self.plus.grid

    def as_array(self) -> np.ndarray:
        return np.stack([self.plus.values, self.minus.values])

    def component(self, sigma: int) -> Vec3Field:
        if sigma == 1:
            return self.plus
        if sigma == -1:
            return self.minus
        raise ValueError(f"helicity must be +1 or -1, got {sigma}")

    def __add__(self, other):
        if not isinstance(other, BispinorField):
            return NotImplemented
        return BispinorField(self.plus + other.plus, self.minus + other.minus)

    def __sub__(self, other):
        if not isinstance(other, BispinorField):
            return NotImplemented
        return BispinorField(self.plus - other.plus, self.minus - other.minus)

    def __mul__(self, a):
        if isinstance(a, BispinorField):
            return NotImplemented
        return BispinorField(self.plus * a, self.minus * a)

    __rmul__ = __mul__

    def __neg__(self):
        return BispinorField(-self.plus, -self.minus)

    def sample(self, point) -> np.ndarray:
        """Six-component value ``(plus_xyz, minus_xyz)`` at the nearest node."""
        i, j, k = self.grid.nearest_index(point)
        return np.concatenate([self.plus.values[:, i, j, k], self.minus.values[:, i, j, k]])

    def inner(self, other: BispinorField) -> complex:
        """Energy inner product ``integral psi^dagger phi d^3x``."""
        _check_same_grid(self.grid, other.grid)
        s = np.vdot(self.plus.values, other.plus.values) + np.vdot(self.minus.values, other.minus.values)
        return complex(s * self.grid.cell_volume)


def spectral_gradient(f: np.ndarray, grid: Grid3) -> np.ndarray:
    """Gradient of a scalar array of shape ``grid.shape``; returns ``(3, ...)``."""
    fk = fft3(np.asarray(f))
    out = ifft3(1j * grid.derivative_wavenumbers * fk)
    if np.isrealobj(f):
        out = out.real
    return out


def _curl_k(k: np.ndarray, fk: np.ndarray) -> np.ndarray:
    return 1j * np.stack(
        [
            k[1] * fk[2] - k[2] * fk[1],
            k[2] * fk[0] - k[0] * fk[2],
            k[0] * fk[1] - k[1] * fk[0],
        ]
    )


def spectral_curl(f: Vec3Field) -> Vec3Field:
    """Pseudospectral curl, exact for band-limited periodic fields."""
    k = f.grid.derivative_wavenumbers
    return Vec3Field(f.grid, ifft3(_curl_k(k, fft3(f.values))))


def spectral_divergence(f: Vec3Field) -> np.ndarray:
    """Pseudospectral divergence as a complex scalar array."""
    k = f.grid.derivative_wavenumbers
    fk = fft3(f.values)
    return ifft3(1j * np.sum(k * fk, axis=0))


@dataclass(frozen=True, eq=False)
class MediumMap:
    """Linear isotropic non-dispersive medium on a grid.

    The two logarithmic fields are taken relative to vacuum,
    ``ln(eps_r mu_r)/4`` and ``ln(eps_r/mu_r)/4``, so that they vanish
    identically in vacuum.  Only their gradients enter the dynamics, so
    the constant offset relative to the absolute logarithms is immaterial.
    """

    grid: Grid3
    epsilon: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        eps = np.broadcast_to(np.asarray(self.epsilon, dtype=float), self.grid.shape).copy()
        mu = np.broadcast_to(np.asarray(self.mu, dtype=float), self.grid.shape).copy()
        if not np.all(eps > 0) or not np.all(mu > 0):
            raise ConfigurationError("permittivity and permeability must be strictly positive")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "mu", mu)

    @classmethod
    def vacuum(cls, grid: Grid3) -> MediumMap:
        return cls(grid, EPS0, MU0)

    @classmethod
    def uniform(cls, grid: Grid3, n: float) -> MediumMap:
        """Non-magnetic dielectric of refractive index ``n``."""
        return cls(grid, EPS0 * n**2, MU0)

    @classmethod
    def sinusoidal_epsilon(cls, grid: Grid3, amplitude: float, axis: int = 0, harmonic: int = 1) -> MediumMap:
        """``eps = eps0 (1 + a sin(2 pi h x / L))`` along one axis, ``mu = mu0``."""
        x = grid.mesh[axis] - grid.origin[axis]
        eps = EPS0 * (1 + amplitude * np.sin(2 * np.pi * harmonic * x / grid.extent[axis]))
        return cls(grid, eps, MU0)

    @cached_property
    def speed(self) -> np.ndarray:
        # relative to c so that vacuum gives exactly c (CODATA eps0 mu0 c^2 = 1 only to ~1e-12)
        return C_LIGHT / np.sqrt((self.epsilon / EPS0) * (self.mu / MU0))

    @cached_property
    def is_vacuum(self) -> bool:
        return bool(np.all(self.epsilon == EPS0) and np.all(self.mu == MU0))

    @cached_property
    def half_log_product(self) -> np.ndarray:
        return 0.25 * np.log((self.epsilon / EPS0) * (self.mu / MU0))

    @cached_property
    def half_log_ratio(self) -> np.ndarray:
        return 0.25 * np.log((self.epsilon / EPS0) / (self.mu / MU0))

    @cached_property
    def grad_half_log_product(self) -> np.ndarray:
        return spectral_gradient(self.half_log_product, self.grid)

    @cached_property
    def grad_half_log_ratio(self) -> np.ndarray:
        return spectral_gradient(self.half_log_ratio, self.grid)

    def at(self, point) -> tuple[float, float]:
        i, j, k = self.grid.nearest_index(point)
        return float(self.epsilon[i, j, k]), float(self.mu[i, j, k])


def medium_L_gradients(medium: MediumMap) -> tuple[np.ndarray, np.ndarray]:
    """Spectral gradients of the identity and helicity-swap parts of ``L``.

    Returns real arrays of shape ``(3, nx, ny, nz)``; cached on the medium.
    """
    return medium.grad_half_log_product, medium.grad_half_log_ratio


def rs_from_db(d: Vec3Field, b: Vec3Field, medium: MediumMap | None = None) -> BispinorField:
    """Riemann-Silberstein wave function ``D/sqrt(2 eps) +/- i B/sqrt(2 mu)``."""
    grid = _check_same_grid(d.grid, b.grid)
    if medium is None:
        eps, mu = EPS0, MU0
    else:
        _check_same_grid(grid, medium.grid)
        eps, mu = medium.epsilon, medium.mu
    e_part = d.values / np.sqrt(2 * eps)
    b_part = 1j * b.values / np.sqrt(2 * mu)
    return BispinorField(Vec3Field(grid, e_part + b_part), Vec3Field(grid, e_part - b_part))


def db_from_rs(psi: BispinorField, medium: MediumMap | None = None) -> tuple[Vec3Field, Vec3Field]:
    """Invert :func:`rs_from_db`, returning ``(D, B)``."""
    grid = psi.grid
    if medium is None:
        eps, mu = EPS0, MU0
    else:
        _check_same_grid(grid, medium.grid)
        eps, mu = medium.epsilon, medium.mu
    p, m = psi.plus.values, psi.minus.values
    d = np.sqrt(2 * eps) * (p + m) / 2
    b = np.sqrt(2 * mu) * (p - m) / 2j
    return Vec3Field(grid, d), Vec3Field(grid, b)
