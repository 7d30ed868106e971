"""OAM-entangled photon pairs through thin Gaussian phase screens.

Each photon of the pair ``(|l,-l> + |-l,l>)/sqrt(2)`` crosses its own
statistically homogeneous, rotationally stationary phase screen.  The
screen scatters OAM ``n -> n - m`` with probability ``s_m``, obtained by
averaging the circular-harmonic transform of the phase correlation
function over the radial power density of the LG mode.  Restricting the
output to ``{|l>, |-l>}`` per photon gives a two-qubit X-state whose
concurrence and fidelity are the quantities of interest.

Two correlation models are provided:

``"closed-form-consistent"`` (default)
    ``C(r, dθ) = exp[-2 (r/r0)^2 (1 - cos dθ)]``, whose transform is
    ``2π exp(-2ζ) I_m(2ζ)`` with ``ζ = (r/r0)^2``.
``"as-printed"``
    ``C(r, dθ) = exp[-(r/r0)^2 (1 - cos 2dθ)]`` i.e. ``exp(-D/2)`` with
    ``D = [2 r sin(dθ) / r0]^2``; transform ``2π exp(-ζ) I_{m/2}(ζ)`` for
    even ``m`` and zero for odd ``m``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import ConfigurationError, NumericalError, TruncationError

__all__ = [
    "CLOSED_FORM",
    "AS_PRINTED",
    "VARIANTS",
    "LgMode",
    "AtmosphereModel",
    "TurbulenceChannel",
    "DensityMatrix4",
    "SweepRow",
    "SweepResult",
    "phase_correlation",
    "circular_harmonic_transform",
    "radial_average",
    "transfer_probability",
    "channel_coefficients",
    "post_selected_output",
    "output_density_matrix",
    "input_state",
    "concurrence",
    "concurrence_x_state",
    "fidelity",
    "sweep",
]

CLOSED_FORM = "closed-form-consistent"
AS_PRINTED = "as-printed"
VARIANTS = (CLOSED_FORM, AS_PRINTED)

TAIL_TOLERANCE = 1e-8


@dataclass(frozen=True)
class LgMode:
    """Laguerre-Gauss mode with ``p = 0``.

    ``psi(r, θ) = R(r) exp(i l θ) / sqrt(2π)`` with
    ``R(r) ∝ (sqrt(2) r / w)^|l| exp(-r^2 / w^2)`` and
    ``integral r |R|^2 dr = 1``.
    """

    l: int
    w: float = 1.0
    p: int = 0

    def __post_init__(self):
        if self.p != 0:
            raise ConfigurationError("only radial quantum number p = 0 is supported")
        if not self.w > 0:
            raise ConfigurationError(f"beam waist must be positive, got {self.w}")
        object.__setattr__(self, "l", int(self.l))

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        al = abs(self.l)
        norm = 2.0 / (self.w * math.sqrt(math.factorial(al)))
        return norm * (math.sqrt(2) * r / self.w) ** al * np.exp(-(r**2) / self.w**2)

    def radial_density(self, r):
        """``r |R(r)|^2``; integrates to one over ``r >= 0``."""
        r = np.asarray(r, dtype=float)
        return r * self.radial(r) ** 2

    def __call__(self, r, theta):
        return self.radial(r) * np.exp(1j * self.l * np.asarray(theta)) / math.sqrt(2 * math.pi)


@dataclass(frozen=True)
class AtmosphereModel:
    """Thin phase screen with quadratic structure function and scale ``r0``."""

    r0: float
    variant: str = CLOSED_FORM

    def __post_init__(self):
        if not self.r0 > 0:
            raise ConfigurationError(f"r0 must be positive, got {self.r0}")
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown correlation variant {self.variant!r}; choose from {VARIANTS}")

    def structure_function(self, r, dtheta):
        r = np.asarray(r, dtype=float)
        dtheta = np.asarray(dtheta, dtype=float)
        if self.variant == CLOSED_FORM:
            return (2 * math.sqrt(2) * r * np.sin(dtheta / 2) / self.r0) ** 2
        return (2 * r * np.sin(dtheta) / self.r0) ** 2


def phase_correlation(r, dtheta, atm: AtmosphereModel):
    """``exp(-D(r, dθ)/2)`` for the selected variant."""
    zeta = (np.asarray(r, dtype=float) / atm.r0) ** 2
    dtheta = np.asarray(dtheta, dtype=float)
    if atm.variant == CLOSED_FORM:
        return np.exp(-2 * zeta * (1 - np.cos(dtheta)))
    return np.exp(-zeta * (1 - np.cos(2 * dtheta)))


def _transform_closed(zeta, m, variant):
    zeta = np.asarray(zeta, dtype=float)
    m = np.asarray(m)
    if variant == CLOSED_FORM:
        return 2 * np.pi * special.ive(np.abs(m), 2 * zeta)
    even = (m % 2) == 0
    return np.where(even, 2 * np.pi * special.ive(np.abs(m) // 2, zeta), 0.0)


def _transform_quadrature(r, m, atm, rtol=1e-13, max_points=1 << 16):
    # Trapezoid rule is spectrally accurate for smooth periodic integrands.
    n = 64
    prev = None
    while n <= max_points:
        theta = 2 * np.pi * np.arange(n) / n
        val = (2 * np.pi / n) * np.sum(phase_correlation(r, theta, atm) * np.cos(m * theta))
        # absolute floor relative to |integrand| <= 1 so vanishing harmonics converge
        if prev is not None and abs(val - prev) <= rtol * abs(val) + 1e-15 * 2 * np.pi:
            return float(val)
        prev = val
        n *= 2
    raise NumericalError(f"periodic quadrature did not converge for r={r}, m={m}")


def circular_harmonic_transform(r, m: int, atm: AtmosphereModel, method: str = "closed-form"):
    """``integral_0^{2π} C(r, dθ) exp(-i m dθ) ddθ`` (real, since C is even).

    ``method="closed-form"`` uses exponentially scaled Bessel functions;
    ``method="quadrature"`` integrates the definition numerically and
    accepts scalar ``r`` only.
    """
    if method == "closed-form":
        return _transform_closed((np.asarray(r, dtype=float) / atm.r0) ** 2, m, atm.variant)
    if method == "quadrature":
        return _transform_quadrature(float(r), int(m), atm)
    raise ValueError(f"unknown method {method!r}")


def _gauss_legendre_panels(u_max, scale, order):
    edges = [u_max]
    lo = min(1e-3, 1e-2 / scale)
    while edges[-1] > lo:
        edges.append(edges[-1] / 2)
    edges.append(0.0)
    edges = np.array(edges[::-1])
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w
    return nodes.ravel(), weights.ravel()


def radial_average(func, mode: LgMode, scale: float = 1.0, tol: float = 1e-10, max_order: int = 256):
    """``integral r |R_l(r)|^2 func(r) dr`` by composite Gauss-Legendre.

    The integral is done in ``u = 2 r^2 / w^2`` where the radial density is
    the gamma density ``u^|l| e^{-u} / |l|!``.  Panels are refined
    geometrically towards ``u = 0`` down to ``1/scale`` (the variable on
    which ``func`` varies, in units of ``u``), and the per-panel order is
    doubled until successive results agree to ``tol``.  ``func`` receives
    ``r`` and may return an array with trailing axes.
    """
    al = abs(mode.l)
    u_max = max(60.0, 2.0 * al + 60.0)
    log_norm = math.lgamma(al + 1)
    prev = None
    order = 16
    while order <= max_order:
        u, wu = _gauss_legendre_panels(u_max, max(scale, 1.0), order)
        dens = np.exp(al * np.log(np.where(u > 0, u, 1.0)) - u - log_norm) if al else np.exp(-u)
        r = mode.w * np.sqrt(u / 2)
        vals = np.asarray(func(r))
        val = np.tensordot(wu * dens, vals, axes=(0, 0))
        if prev is not None and np.max(np.abs(val - prev)) <= tol:
            return val
        prev = val
        order *= 2
    raise NumericalError("radial quadrature did not reach the requested stability")


def _u_scale(mode: LgMode, atm: AtmosphereModel) -> float:
    # zeta = kappa * u; the transform varies on the scale u ~ 1/kappa.
    return mode.w**2 / (2 * atm.r0**2)


def transfer_probability(mode: LgMode, atm: AtmosphereModel, m) -> np.ndarray:
    """``s_m = (1/2π) ∫ r|R|^2 C~(r, m) dr`` for one or several ``m``."""
    m_arr = np.atleast_1d(np.asarray(m, dtype=int))
    scale = 2 * _u_scale(mode, atm)

    def f(r):
        zeta = (r / atm.r0) ** 2
        return _transform_closed(zeta[:, None], m_arr[None, :], atm.variant) / (2 * np.pi)

    out = radial_average(f, mode, scale=scale)
    return out if np.ndim(m) else float(out[0])


@dataclass(frozen=True)
class TurbulenceChannel:
    """OAM-transfer probabilities ``s[m]`` for ``|m| <= m_max``."""

    s: dict
    mode: LgMode
    atmosphere: AtmosphereModel
    m_max: int
    tail: float

    def __getitem__(self, m: int) -> float:
        return self.s.get(int(m), 0.0)

    def total(self) -> float:
        return float(sum(self.s.values()))


def default_m_max(mode: LgMode, atm: AtmosphereModel) -> int:
    ratio = mode.w / atm.r0
    return max(2 * abs(mode.l), 8 * math.ceil(ratio**2) + 2 * abs(mode.l))


def channel_coefficients(mode: LgMode, atm: AtmosphereModel, m_max: int | None = None, max_m_max: int = 1 << 14) -> TurbulenceChannel:
    """Transfer probabilities for every ``m`` in ``[-m_max, m_max]``.

    ``m_max`` is doubled until the probability mass outside the window is
    below ``1e-8``; :class:`TruncationError` is raised past ``max_m_max``.
    """
    if m_max is None:
        m_max = default_m_max(mode, atm)
    if m_max < 2 * abs(mode.l):
        raise ConfigurationError(f"m_max = {m_max} must be at least 2|l| = {2 * abs(mode.l)}")
    while True:
        ms = np.arange(0, m_max + 1)
        s_pos = transfer_probability(mode, atm, ms)
        total = s_pos[0] + 2 * np.sum(s_pos[1:])
        tail = 1.0 - total
        if abs(tail) < TAIL_TOLERANCE:
            break
        if m_max >= max_m_max:
            raise TruncationError(f"tail mass {tail:.3e} exceeds {TAIL_TOLERANCE} at m_max = {m_max}")
        m_max = min(2 * m_max, max_m_max)
    s = {}
    for m, val in zip(ms, s_pos):
        s[int(m)] = float(val)
        s[-int(m)] = float(val)
    return TurbulenceChannel(s=s, mode=mode, atmosphere=atm, m_max=int(m_max), tail=float(tail))


@dataclass(frozen=True)
class DensityMatrix4:
    """Post-selected two-qubit state in the basis ``(|l,l>, |l,-l>, |-l,l>, |-l,-l>)``.

    ``rho`` is trace-normalised; ``transmission`` is the trace before
    normalisation (the post-selection probability).
    """

    rho: np.ndarray
    transmission: float = 1.0

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=np.complex128)
        if rho.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1) > 1e-10:
            raise ValueError(f"density matrix trace {np.trace(rho).real} != 1")
        if np.min(np.linalg.eigvalsh(rho)) < -1e-10:
            raise ValueError("density matrix is not positive semidefinite")
        if not 0 < self.transmission <= 1 + 1e-12:
            raise ValueError(f"transmission {self.transmission} outside (0, 1]")
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_unnormalized(cls, rho: np.ndarray) -> DensityMatrix4:
        rho = np.asarray(rho, dtype=np.complex128)
        t = float(np.trace(rho).real)
        return cls(rho / t, t)

    @classmethod
    def pure(cls, vec) -> DensityMatrix4:
        vec = np.asarray(vec, dtype=np.complex128)
        vec = vec / np.linalg.norm(vec)
        return cls(np.outer(vec, vec.conj()), 1.0)

    @property
    def unnormalized(self) -> np.ndarray:
        return self.rho * self.transmission


def input_state() -> np.ndarray:
    """``(phi2 + phi3)/sqrt(2) = (|l,-l> + |-l,l>)/sqrt(2)``."""
    return np.array([0, 1, 1, 0], dtype=np.complex128) / math.sqrt(2)


def _photon_superoperator(l: int, s) -> np.ndarray:
    """Channel restricted to ``{|l>, |-l>}`` as ``E[a, a', b, b']``.

    ``E(|b><b'|) = sum_m s_m |b - m><b' - m|``; the entry is the coefficient
    of ``|a><a'|`` in ``E(|b><b'|)``.
    """
    levels = (l, -l)
    e = np.zeros((2, 2, 2, 2))
    for ib, b in enumerate(levels):
        for ibp, bp in enumerate(levels):
            for ia, a in enumerate(levels):
                for iap, ap in enumerate(levels):
                    m, mp = b - a, bp - ap
                    if m == mp:
                        e[ia, iap, ib, ibp] = s(m)
    return e


def post_selected_output(l: int, s_a, s_b, psi_in=None) -> np.ndarray:
    """Unnormalised post-selected output for per-photon transfer maps ``s_a``, ``s_b``.

    ``s_a`` and ``s_b`` are callables ``m -> s_m`` (a
    :class:`TurbulenceChannel` qualifies via ``__getitem__``).
    """
    if l == 0:
        raise ConfigurationError("l = 0 gives a degenerate basis")
    psi_in = input_state() if psi_in is None else np.asarray(psi_in, dtype=np.complex128)
    rho_in = np.outer(psi_in, psi_in.conj()).reshape(2, 2, 2, 2)  # [a, b, a', b']
    ea = _photon_superoperator(l, s_a)
    eb = _photon_superoperator(l, s_b)
    out = np.einsum("AXax,BYby,abxy->ABXY", ea, eb, rho_in)
    return out.reshape(4, 4)


def output_density_matrix(l: int, w_over_r0: float, variant: str = CLOSED_FORM, atmospheres=None) -> DensityMatrix4:
    """Post-selected output state for waist ratio ``w/r0``.

    Both photons see independent screens with the same ``r0``.  An explicit
    ``(A, B)`` pair of :class:`AtmosphereModel` may be passed instead; the
    waist is then ``w_over_r0 * A.r0``.
    """
    if l == 0:
        raise ConfigurationError("l = 0 gives a degenerate basis")
    if not w_over_r0 > 0:
        raise ConfigurationError(f"w/r0 must be positive, got {w_over_r0}")
    if atmospheres is None:
        atmospheres = (AtmosphereModel(1.0, variant), AtmosphereModel(1.0, variant))
    mode = LgMode(l, w=float(w_over_r0) * atmospheres[0].r0)
    needed = [0, 2 * abs(l)]
    per_photon = []
    for atm in atmospheres:
        vals = transfer_probability(mode, atm, needed)
        table = {0: float(vals[0]), 2 * abs(l): float(vals[1]), -2 * abs(l): float(vals[1])}
        per_photon.append(lambda m, t=table: t.get(m, 0.0))
    return DensityMatrix4.from_unnormalized(post_selected_output(l, *per_photon))


_SPIN_FLIP = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


def concurrence(rho) -> float:
    """Wootters concurrence of a two-qubit density matrix.

    With ``rho = A A^dagger`` (``A`` from the eigendecomposition) the
    ``λ_i`` are the singular values of ``A^T (σy ⊗ σy) A``.  This avoids
    square roots of the eigenvalues of ``rho rho~``, which are ``λ_i^2``
    and lose half their digits when small.
    """
    m = rho.rho if isinstance(rho, DensityMatrix4) else np.asarray(rho, dtype=np.complex128)
    if m.shape != (4, 4):
        raise ValueError("concurrence needs a 4x4 density matrix")
    if np.max(np.abs(m - m.conj().T)) > 1e-10:
        raise ValueError("density matrix is not Hermitian")
    m = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(m)
    if w[0] < -1e-10 * max(w[-1], 1e-300):
        raise ValueError("density matrix is not positive semidefinite")
    a = v * np.sqrt(np.clip(w, 0, None) / np.sum(w))
    lam = np.linalg.svd(a.T @ _SPIN_FLIP @ a, compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def concurrence_x_state(s0: float, s2: float) -> float:
    """Closed form ``max(0, s0 (s0 - 2 s2)) / (s0 + s2)^2`` for the channel output."""
    return max(0.0, s0 * (s0 - 2 * s2)) / (s0 + s2) ** 2


def fidelity(rho: DensityMatrix4, use_transmission: bool = True, target=None) -> float:
    """``<psi_in| rho |psi_in>``, on the unnormalised matrix by default."""
    psi = input_state() if target is None else np.asarray(target, dtype=np.complex128)
    m = rho.unnormalized if use_transmission else rho.rho
    return float(np.vdot(psi, m @ psi).real)


@dataclass(frozen=True)
class SweepRow:
    l: int
    w_over_r0: float
    s0: float
    s2: float
    transmission: float
    concurrence: float
    fidelity: float

    COLUMNS = ("l", "w_over_r0", "s0", "s2", "transmission", "concurrence", "fidelity")

    def values(self) -> tuple:
        return tuple(getattr(self, c) for c in self.COLUMNS)


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def column(self, name: str, l: int | None = None) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows if l is None or r.l == l])


def _sweep_point(l: int, ratio: float, variant: str) -> SweepRow:
    mode = LgMode(l, w=ratio)
    atm = AtmosphereModel(1.0, variant)
    s0, s2 = transfer_probability(mode, atm, [0, 2 * abs(l)])
    rho = output_density_matrix(l, ratio, variant)
    return SweepRow(
        l=int(l),
        w_over_r0=float(ratio),
        s0=float(s0),
        s2=float(s2),
        transmission=rho.transmission,
        concurrence=concurrence(rho),
        fidelity=fidelity(rho, use_transmission=True),
    )


def sweep(l_values, w_over_r0, variant: str = CLOSED_FORM, max_workers: int | None = None) -> SweepResult:
    """Concurrence and fidelity on the grid ``l_values x w_over_r0``.

    Points are independent; failures are collected in ``result.failures``
    as ``(l, w/r0, message)`` and the sweep carries on.
    """
    l_values = list(l_values)
    ratios = [float(x) for x in np.atleast_1d(w_over_r0)]
    if not l_values or not ratios:
        raise ConfigurationError("sweep grids must be non-empty")
    if variant not in VARIANTS:
        raise ConfigurationError(f"unknown correlation variant {variant!r}")
    points = [(int(l), r) for l in l_values for r in ratios]

    def run(p):
        try:
            return _sweep_point(p[0], p[1], variant), None
        except Exception as exc:  # noqa: BLE001  (reported per point)
            return None, (p[0], p[1], f"{type(exc).__name__}: {exc}")

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outcomes = list(pool.map(run, points))
    else:
        outcomes = [run(p) for p in points]
    result = SweepResult()
    for row, failure in outcomes:
        if row is not None:
            result.rows.append(row)
        else:
            result.failures.append(failure)
    return result
