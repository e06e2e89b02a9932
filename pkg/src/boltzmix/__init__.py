"""Two-species kinetic gas-mixture laboratory.

Subpackages cover the discrete velocity space, the bilinear collision
operator and its linearizations, moment projections, transport
coefficients, an IMEX kinetic solver, a pseudo-spectral two-fluid
incompressible Navier-Stokes-Fourier solver, the scaling-regime
classifier, and the hydrodynamic-limit experiment harness.
"""

from boltzmix.velocity_space import VelocityGrid, SphereQuadrature, build_grid
from boltzmix.collision import CollisionKernel, make_operator
from boltzmix.regimes import classify, RegimeId

__all__ = [
    "VelocityGrid",
    "SphereQuadrature",
    "build_grid",
    "CollisionKernel",
    "make_operator",
    "classify",
    "RegimeId",
]

__version__ = "0.1.0"
