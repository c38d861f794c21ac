"""Spectral laboratory for a quadratic-derivative Schrodinger three-wave system.

Core layers:

* :mod:`qdnls.fields`    -- periodic-grid spectral fields, norms, propagators
* :mod:`qdnls.model`     -- coefficients, resonance algebra, scaling, invariants
* :mod:`qdnls.potential` -- irrotational fields and scalar-potential reconstruction
* :mod:`qdnls.decomp`    -- dyadic / modulation / angular projections, X^{s,b} norms
* :mod:`qdnls.solver`    -- split-step and exponential integrators, Picard iteration
* :mod:`qdnls.blocks`    -- sparse block-localized time-space data for sweeps
* :mod:`qdnls.sweeps`    -- empirical constants for the space-time product estimates
* :mod:`qdnls.geometry`  -- resonance and angular-alignment lattice scans
* :mod:`qdnls.inflation` -- second-iterate growth experiment and its quadrature oracle
* :mod:`qdnls.cli`       -- batch front end (simulate / potential / decompose / verify)
"""

from .fields import (
    Grid2D,
    SobolevIndex,
    SpectralField,
    VectorField,
    dft_roundtrip,
    free_propagator,
    homogeneous_norm,
    is_radial,
    l2_norm,
    radialize,
    sobolev_norm,
)
from .model import (
    SystemCoefficients,
    SystemState,
    make_coefficients,
    quadratic_invariants,
    resonance_phi,
    scaling_transform,
)
from .decomp import (
    AngularSector,
    TimeSpaceField,
    angular_project,
    lp_project,
    modulation_project,
    xsb_norm,
)
from .potential import (
    check_irrotational,
    membership_As,
    reconstruct_line,
    reconstruct_spectral,
)
from .solver import IntegratorConfig, Trajectory, duhamel_iterate, evolve, evolve_radial

__all__ = [
    "Grid2D",
    "SobolevIndex",
    "SpectralField",
    "VectorField",
    "SystemCoefficients",
    "SystemState",
    "dft_roundtrip",
    "free_propagator",
    "homogeneous_norm",
    "is_radial",
    "l2_norm",
    "make_coefficients",
    "quadratic_invariants",
    "radialize",
    "resonance_phi",
    "scaling_transform",
    "sobolev_norm",
]

__version__ = "0.1.0"
