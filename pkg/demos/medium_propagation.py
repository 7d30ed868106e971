"""Evolve a field through a sinusoidal dielectric with RK4 and check convergence.

Run with ``python3 demos/medium_propagation.py``.
"""

import numpy as np

from photon_wm.fields import C_LIGHT, Grid3, MediumMap, db_from_rs, rs_from_db
from photon_wm.single_photon import PropagationConfig, densities, divergence_residual, energy_expectation, evolve_medium, gaussian_packet, transverse_part

L = 1e-6
grid = Grid3.cubic(16, L)
medium = MediumMap.sinusoidal_epsilon(grid, amplitude=0.2, axis=0)

# build the packet from D and B so its constraint holds in the medium
d, b = db_from_rs(transverse_part(gaussian_packet(grid, 0.12 * L, (0.0, 1.0, 0.0))))
psi = rs_from_db(d, b, medium)

t = 0.3 * L / C_LIGHT
bound = PropagationConfig(1.0).max_stable_dt(grid, medium)
print(f"CFL bound {bound:.3e} s, run time {t:.3e} s")

ref = evolve_medium(psi, medium, t, PropagationConfig(bound / 8))
norm = np.linalg.norm(ref.as_array().ravel())
for div in (1, 2, 4):
    out = evolve_medium(psi, medium, t, PropagationConfig(bound / div))
    err = np.linalg.norm((out.as_array() - ref.as_array()).ravel()) / norm
    print(f"dt = bound/{div}: error vs bound/8 reference {err:.2e}")

rho, j = densities(ref, medium)
print(f"energy ratio {energy_expectation(ref) / energy_expectation(psi):.6f}")
print(f"divergence residual {divergence_residual(ref, medium):.2e}")
print(f"peak probability density {rho.max():.3e} m^-3, peak |j| {np.abs(j).max():.3e}")
