"""Compare analytic channel probabilities with Monte-Carlo phase screens.

Run with ``python3 demos/mc_validation.py``.
"""

from photon_wm.mc_oracle import mc_channel, mc_density_matrix
from photon_wm.turbulence import AtmosphereModel, LgMode, output_density_matrix, transfer_probability

atm = AtmosphereModel(1.0)
for l, ratio in ((1, 0.5), (1, 1.0), (2, 1.0)):
    mode = LgMode(l, ratio)
    s0, s2 = transfer_probability(mode, atm, [0, 2 * l])
    est = mc_channel(mode, atm, 50_000, seed=l * 100 + int(10 * ratio), m_list=[0, 2 * l])
    print(f"l = {l}, w/r0 = {ratio}: s0 {s0:.5f} vs {est[0].mean:.5f} +- {est[0].stderr:.5f}, s{2 * l} {s2:.5f} vs {est[2 * l].mean:.5f} +- {est[2 * l].stderr:.5f}")
    rho = output_density_matrix(l, ratio)
    mc = mc_density_matrix(l, ratio, 50_000, seed=7)
    print(f"    density matrix: max |z| = {mc.zscores(rho.rho * rho.transmission).max():.2f}")
