"""Propagate a Gaussian packet in vacuum and a helicity plane wave through one period.

Run with ``python3 demos/free_propagation.py``.
"""

import math

import numpy as np

from photon_wm.fields import C_LIGHT, Grid3
from photon_wm.single_photon import divergence_residual, energy_expectation, evolve, gaussian_packet, plane_wave, transverse_part

L = 1e-6
grid = Grid3.cubic(32, L)

# a plane wave is an eigenmode, so one period maps it back onto itself
mode = (1, 2, 0)
pw = plane_wave(grid, mode, helicity=1)
k = 2 * math.pi * math.hypot(*mode) / L
out = evolve(pw, 2 * math.pi / (C_LIGHT * k))
err = np.linalg.norm((out.as_array() - pw.as_array()).ravel()) / np.linalg.norm(pw.as_array().ravel())
print(f"plane wave after one period: relative error {err:.2e}")

# a packet spreads, but energy and the transverse constraint are kept
psi = transverse_part(gaussian_packet(grid, 0.1 * L, (1.0, 1j, 0.0)))
e0 = energy_expectation(psi)
for frac in (0.25, 0.5, 1.0):
    t = frac * L / C_LIGHT
    later = evolve(psi, t)
    print(f"t = {frac:4.2f} L/c  energy ratio {energy_expectation(later) / e0:.15f}  divergence {divergence_residual(later):.1e}")
