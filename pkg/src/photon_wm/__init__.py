"""Two-photon wave mechanics.

Riemann-Silberstein single-photon fields on periodic grids, two-photon
states built from them, and the decay of OAM entanglement in Gaussian
phase-randomising turbulence with a Monte-Carlo cross-check.
"""

__version__ = "0.1.0"

from .errors import (
    CFLError,
    ConfigurationError,
    GridMismatchError,
    NumericalError,
    PhotonWMError,
    TruncationError,
    UndefinedDensityError,
)
from .fields import BispinorField, Grid3, MediumMap, Vec3Field, db_from_rs, rs_from_db
from .single_photon import (
    PropagationConfig,
    densities,
    divergence_residual,
    energy_expectation,
    evolve,
    evolve_free,
    evolve_medium,
    gaussian_packet,
    plane_wave,
)
from .turbulence import (
    AtmosphereModel,
    DensityMatrix4,
    LgMode,
    channel_coefficients,
    circular_harmonic_transform,
    concurrence,
    fidelity,
    output_density_matrix,
    sweep,
)
from .two_photon import TwoPhotonState, joint_density, joint_energy

__all__ = [
    "__version__",
    "PhotonWMError",
    "ConfigurationError",
    "GridMismatchError",
    "NumericalError",
    "CFLError",
    "TruncationError",
    "UndefinedDensityError",
    "Grid3",
    "Vec3Field",
    "BispinorField",
    "MediumMap",
    "rs_from_db",
    "db_from_rs",
    "PropagationConfig",
    "plane_wave",
    "gaussian_packet",
    "evolve",
    "evolve_free",
    "evolve_medium",
    "energy_expectation",
    "densities",
    "divergence_residual",
    "LgMode",
    "AtmosphereModel",
    "DensityMatrix4",
    "circular_harmonic_transform",
    "channel_coefficients",
    "output_density_matrix",
    "concurrence",
    "fidelity",
    "sweep",
    "TwoPhotonState",
    "joint_energy",
    "joint_density",
]
