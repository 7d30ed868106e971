"""Monte-Carlo phase-screen oracle for the turbulence channel.

The quadratic structure functions are realised exactly by two-coefficient
Gaussian screens:

* closed-form-consistent: ``phi(r, θ) = sqrt(2) (r/r0) (X cos θ + Y sin θ)``
  (a random tilt),
* as-printed: ``phi(r, θ) = (r/r0) (X cos 2θ + Y sin 2θ)``,

with ``X, Y ~ N(0, 1)``.  Angular harmonics of ``exp(i phi)`` are taken by
FFT on a uniform ring (tabulated once per run over the screen amplitude,
see :class:`RingTable`), radial averages by generalised Gauss-Laguerre
quadrature.  Nothing here calls Bessel functions, so agreement with
:mod:`photon_wm.turbulence` is a genuine cross-check.

Random numbers come from numpy's ``PCG64`` seeded through
``SeedSequence(seed).spawn``; samples are processed in fixed-size chunks,
one child seed per chunk, and partial sums are merged in chunk order.
Results are therefore bit-identical for a given seed whatever the number
of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_genlaguerre

from .errors import ConfigurationError
from .turbulence import AS_PRINTED, CLOSED_FORM, VARIANTS, AtmosphereModel, LgMode, input_state

__all__ = [
    "RNG_ALGORITHM",
    "CHUNK_SIZE",
    "TiltScreen",
    "McEstimate",
    "McMatrixEstimate",
    "draw_screens",
    "mc_structure_function",
    "mc_ring_moments",
    "mc_channel",
    "mc_density_matrix",
]

RNG_ALGORITHM = "numpy.random.PCG64 via SeedSequence.spawn (one child per chunk)"
CHUNK_SIZE = 2048


@dataclass(frozen=True)
class TiltScreen:
    """Batch of Gaussian screens; ``x`` and ``y`` are arrays of draws."""

    x: np.ndarray
    y: np.ndarray
    variant: str = CLOSED_FORM

    def phase(self, r_over_r0, theta) -> np.ndarray:
        """Phase of every screen; shape ``(n_screens,) + broadcast(r, theta)``."""
        r = np.asarray(r_over_r0, dtype=float)
        theta = np.asarray(theta, dtype=float)
        x = self.x.reshape(self.x.shape + (1,) * np.broadcast(r, theta).ndim)
        y = self.y.reshape(x.shape)
        if self.variant == CLOSED_FORM:
            return math.sqrt(2) * r * (x * np.cos(theta) + y * np.sin(theta))
        return r * (x * np.cos(2 * theta) + y * np.sin(2 * theta))


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with standard error ``std / sqrt(count)``."""

    mean: float
    stderr: float
    count: int

    @classmethod
    def from_sums(cls, s1, s2, n: int):
        mean = s1 / n
        var = np.maximum(s2 / n - mean**2, 0.0) * n / max(n - 1, 1)
        return cls(mean, np.sqrt(var / n), n)

    def zscore(self, value) -> float:
        diff = abs(self.mean - value)
        if self.stderr == 0:
            return 0.0 if diff == 0 else math.inf
        return float(diff / self.stderr)


@dataclass(frozen=True)
class McMatrixEstimate:
    """Entrywise estimate of a complex matrix (errors for real and imaginary parts)."""

    mean: np.ndarray
    stderr_real: np.ndarray
    stderr_imag: np.ndarray
    count: int

    def zscores(self, value) -> np.ndarray:
        value = np.asarray(value)
        d = self.mean - value

        def z(diff, se):
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(se > 0, np.abs(diff) / np.where(se > 0, se, 1.0), np.where(np.abs(diff) > 1e-14, np.inf, 0.0))

        return np.maximum(z(d.real, self.stderr_real), z(d.imag, self.stderr_imag))


def _check(variant: str, n_samples: int):
    if variant not in VARIANTS:
        raise ConfigurationError(f"unknown correlation variant {variant!r}")
    if n_samples < 2:
        raise ConfigurationError("need at least two samples for an error estimate")


def draw_screens(n: int, rng: np.random.Generator, variant: str = CLOSED_FORM) -> TiltScreen:
    return TiltScreen(rng.standard_normal(n), rng.standard_normal(n), variant)


def _run_chunks(n_samples: int, seed: int, kernel, workers: int | None):
    """Apply ``kernel(rng, n)`` per chunk and merge ``(sum, sum_sq)`` in order."""
    n_chunks = max(1, math.ceil(n_samples / CHUNK_SIZE))
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [min(CHUNK_SIZE, n_samples - i * CHUNK_SIZE) for i in range(n_chunks)]

    def job(i):
        return kernel(np.random.Generator(np.random.PCG64(children[i])), sizes[i])

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(n_chunks)))
    else:
        parts = [job(i) for i in range(n_chunks)]
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    return s1, s2


def _ring_size(amplitude: float, max_m: int, variant: str) -> int:
    # exp(i a cos) has negligible harmonics beyond a + 12 + 2 a^(1/3).
    band = amplitude + 12 + 2 * amplitude ** (1 / 3)
    if variant == AS_PRINTED:
        band *= 2
    n = 16
    while n < 2 * (band + max_m):
        n *= 2
    return n


def _harmonics_direct(screens: TiltScreen, r_over_r0: float, m: np.ndarray) -> np.ndarray:
    """``A_m = (1/2π) ∫ exp(i phi) exp(i m θ) dθ`` by FFT on a ring; shape ``(n, len(m))``."""
    radius = np.hypot(screens.x, screens.y)
    scale = math.sqrt(2) if screens.variant == CLOSED_FORM else 1.0
    amp = scale * r_over_r0 * float(np.max(radius)) if radius.size else 0.0
    n = _ring_size(amp, int(np.max(np.abs(m))), screens.variant)
    theta = 2 * np.pi * np.arange(n) / n
    field = np.exp(1j * screens.phase(r_over_r0, theta))
    return np.fft.ifft(field, axis=-1)[:, np.mod(m, n)]


class RingTable:
    """Harmonics of a screen reduced to one amplitude variable.

    Both screens are ``A cos(k (θ - α))`` with ``k = 1`` (tilt) or ``k = 2``,
    so ``A_m = exp(i m α) B_m(A)`` where ``B_m`` is the harmonic of
    ``exp(i A cos kθ)``.  ``B_m`` is tabulated by ring FFT on a uniform
    amplitude grid of spacing ``step`` and interpolated quadratically
    through the node at or below ``A`` and the next two.  The error is
    below ``step^3 / 15`` and vanishes as ``A -> 0``, where the leading
    small-amplitude behaviour is quadratic.
    """

    def __init__(self, variant: str, m, a_max: float, step: float = 4e-3):
        self.variant = variant
        self.m = np.asarray(m, dtype=int)
        self.k = 1 if variant == CLOSED_FORM else 2
        self.step = step
        amps = np.arange(0.0, a_max + 3 * step, step)
        n = _ring_size(float(amps[-1]), int(np.max(np.abs(self.m))), variant)
        theta = 2 * np.pi * np.arange(n) / n
        table = np.empty((amps.size, self.m.size), dtype=np.complex128)
        cos_k = np.cos(self.k * theta)
        for i in range(0, amps.size, 4096):
            blk = amps[i : i + 4096, None] * cos_k
            table[i : i + 4096] = np.fft.ifft(np.exp(1j * blk), axis=-1)[:, np.mod(self.m, n)]
        self.table = table

    def rotation(self, screens: TiltScreen) -> np.ndarray:
        """``exp(i m α)`` per screen; shape ``(n, len(m))``."""
        alpha = np.arctan2(screens.y, screens.x) / self.k
        return np.exp(1j * np.outer(alpha, self.m))

    def profile(self, screens: TiltScreen, r_over_r0: float) -> np.ndarray:
        """``B_m(A)`` per screen, without the rotation factor."""
        scale = math.sqrt(2) if self.variant == CLOSED_FORM else 1.0
        pos = scale * r_over_r0 * np.hypot(screens.x, screens.y) / self.step
        i0 = pos.astype(int)
        if i0.size and int(i0.max()) > self.table.shape[0] - 3:
            raise ValueError("screen amplitude outside the tabulated range")
        f = (pos - i0)[:, None]
        t = self.table
        return 0.5 * (f - 1) * (f - 2) * t[i0] - f * (f - 2) * t[i0 + 1] + 0.5 * f * (f - 1) * t[i0 + 2]

    def __call__(self, screens: TiltScreen, r_over_r0: float) -> np.ndarray:
        return self.profile(screens, r_over_r0) * self.rotation(screens)


def _max_amplitude(variant: str, r_max: float, n_samples: int) -> float:
    # Gaussian radius exceeds sqrt(2 ln(n) + 20) with probability < 5e-5 / n.
    scale = math.sqrt(2) if variant == CLOSED_FORM else 1.0
    return scale * r_max * math.sqrt(2 * math.log(max(n_samples, 2)) + 20)


def _profiles(table: RingTable, screens: TiltScreen, rr) -> np.ndarray:
    """``B_m`` at every radial node, shape ``(len(rr), n, len(m))``.

    Falls back to the direct ring FFT (with the rotation removed) in the
    rare chunk whose largest screen lies beyond the tabulated amplitude.
    """
    try:
        return np.stack([table.profile(screens, r) for r in rr])
    except ValueError:
        unrot = table.rotation(screens).conj()
        return np.stack([_harmonics_direct(screens, r, table.m) * unrot for r in rr])


def mc_structure_function(r_over_r0: float, dtheta: float, n_samples: int, seed: int, variant: str = CLOSED_FORM) -> McEstimate:
    """Sample mean of ``[phi(r, θ + dθ) - phi(r, θ)]^2`` at ``θ = 0``."""
    _check(variant, n_samples)

    def kernel(rng, n):
        s = draw_screens(n, rng, variant)
        d = (s.phase(r_over_r0, dtheta) - s.phase(r_over_r0, 0.0)) ** 2
        return float(np.sum(d)), float(np.sum(d * d))

    s1, s2 = _run_chunks(n_samples, seed, kernel, None)
    return McEstimate.from_sums(s1, s2, n_samples)


def mc_ring_moments(zeta: float, m_list, n_samples: int, seed: int, variant: str = CLOSED_FORM, workers: int | None = None) -> dict:
    """``<|A_m|^2>`` on a ring with ``(r/r0)^2 = zeta``; tends to ``C~(r, m)/2π``."""
    _check(variant, n_samples)
    m = np.asarray(list(m_list), dtype=int)
    rr = math.sqrt(zeta)

    def kernel(rng, n):
        p = np.abs(_harmonics_direct(draw_screens(n, rng, variant), rr, m)) ** 2
        return p.sum(axis=0), (p * p).sum(axis=0)

    s1, s2 = _run_chunks(n_samples, seed, kernel, workers)
    est = McEstimate.from_sums(s1, s2, n_samples)
    return {int(mi): McEstimate(float(est.mean[i]), float(est.stderr[i]), n_samples) for i, mi in enumerate(m)}


def _radial_nodes(mode: LgMode, r0: float, n_radial: int):
    al = abs(mode.l)
    u, w = roots_genlaguerre(n_radial, al)
    w = w / math.gamma(al + 1)
    keep = w > 1e-15
    r = mode.w * np.sqrt(u[keep] / 2)
    return r / r0, w[keep]


def mc_channel(mode: LgMode, atm: AtmosphereModel, n_samples: int, seed: int, m_list=None, n_radial: int = 32, workers: int | None = None) -> dict:
    """Estimate ``s_m = ∫ r|R|^2 <|A_m(r)|^2> dr`` screen by screen."""
    _check(atm.variant, n_samples)
    if m_list is None:
        span = 2 * abs(mode.l) + 4
        m_list = range(-span, span + 1)
    m = np.asarray(list(m_list), dtype=int)
    rr, wr = _radial_nodes(mode, atm.r0, n_radial)
    table = RingTable(atm.variant, m, _max_amplitude(atm.variant, float(rr.max()), n_samples))

    def kernel(rng, n):
        b = _profiles(table, draw_screens(n, rng, atm.variant), rr)
        acc = np.einsum("r,rsm->sm", wr, b.real**2 + b.imag**2)
        return acc.sum(axis=0), (acc * acc).sum(axis=0)

    s1, s2 = _run_chunks(n_samples, seed, kernel, workers)
    est = McEstimate.from_sums(s1, s2, n_samples)
    return {int(mi): McEstimate(float(est.mean[i]), float(est.stderr[i]), n_samples) for i, mi in enumerate(m)}


def _photon_superoperators(screens: TiltScreen, table: RingTable, rr, wr, radial: str) -> np.ndarray:
    """Per-screen map on the ``{|l>, |-l>}`` block, ``S[s, a, a', b, b']``.

    ``table.m`` must be ``(0, 2l, -2l)``.
    """
    a = _profiles(table, screens, rr) * table.rotation(screens)  # (r, s, m)
    n = screens.x.size
    # rows: outgoing (l, -l); columns: incoming (l, -l); entry A_{n - n'}
    t = np.empty((len(rr), n, 2, 2), dtype=np.complex128)
    t[..., 0, 0] = a[..., 0]
    t[..., 1, 1] = a[..., 0]
    t[..., 0, 1] = a[..., 2]
    t[..., 1, 0] = a[..., 1]
    if radial == "equal-radius":
        return np.einsum("r,rsab,rsxy->saxby", wr, t, t.conj())
    t_sum = np.einsum("r,rsab->sab", wr, t)
    return np.einsum("sab,sxy->saxby", t_sum, t_sum.conj())


def mc_density_matrix(
    l: int,
    w_over_r0: float,
    n_samples: int,
    seed: int,
    variant: str = CLOSED_FORM,
    n_radial: int = 32,
    radial: str = "equal-radius",
    workers: int | None = None,
) -> McMatrixEstimate:
    """Unnormalised post-selected output averaged over independent screen pairs.

    ``radial="equal-radius"`` weights ``|out(r_A, r_B)><out(r_A, r_B)|`` by
    the radial densities of both photons, which is the model behind
    :func:`photon_wm.turbulence.output_density_matrix`.  ``radial="modal"``
    instead projects each photon onto the LG ``p = 0`` mode before squaring
    (amplitude-level radial overlap), exposing radial-mode loss.
    """
    _check(variant, n_samples)
    if l == 0:
        raise ConfigurationError("l = 0 gives a degenerate basis")
    if radial not in ("equal-radius", "modal"):
        raise ConfigurationError(f"unknown radial model {radial!r}")
    mode = LgMode(l, w=float(w_over_r0))
    rr, wr = _radial_nodes(mode, 1.0, n_radial)
    table = RingTable(variant, [0, 2 * l, -2 * l], _max_amplitude(variant, float(rr.max()), n_samples))
    psi = input_state()
    rho_in = np.outer(psi, psi.conj()).reshape(2, 2, 2, 2)

    def kernel(rng, n):
        sa = _photon_superoperators(draw_screens(n, rng, variant), table, rr, wr, radial)
        sb = _photon_superoperators(draw_screens(n, rng, variant), table, rr, wr, radial)
        out = np.einsum("sAXax,sBYby,abxy->sABXY", sa, sb, rho_in).reshape(n, 4, 4)
        re, im = out.real, out.imag
        return np.stack([re.sum(0), im.sum(0)]), np.stack([(re * re).sum(0), (im * im).sum(0)])

    s1, s2 = _run_chunks(n_samples, seed, kernel, workers)
    est = McEstimate.from_sums(s1, s2, n_samples)
    mean = est.mean[0] + 1j * est.mean[1]
    return McMatrixEstimate(mean, est.stderr[0], est.stderr[1], n_samples)
