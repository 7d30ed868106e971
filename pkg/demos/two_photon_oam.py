"""Build an OAM-entangled photon pair, evolve it, and read off joint quantities.

Run with ``python3 demos/two_photon_oam.py``.
"""

import numpy as np

from photon_wm.fields import C_LIGHT, Grid3
from photon_wm.two_photon import assemble, detection_amplitude, evolve, joint_density, joint_energy, oam_pair_state

L = 1e-6
grid = Grid3.cubic(16, L)
state = oam_pair_state(grid, l=1, waist=L / 6)
print(f"basis size {len(state.basis)}, coefficients\n{np.round(state.coeffs, 6)}")

later = evolve(state, 0.2 * L / C_LIGHT)
print(f"joint energy ratio after evolution {joint_energy(later) / joint_energy(state):.15f}")

x1, x2 = grid.node((8, 8, 4)), grid.node((10, 8, 4))
sample = assemble(later, x1, x2)
print(f"|Psi(x1, x2)| max entry {np.abs(sample.value).max():.3e}")
print(f"joint detection density {joint_density(later, x1, x2):.3e}")
print(f"detection amplitude norm {np.linalg.norm(detection_amplitude(later, [x1, x2])):.3e}")
