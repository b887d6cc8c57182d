"""Numerical laboratory for the sharp-interface limit of Stokes/Cahn-Hilliard.

Submodules: ``profiles`` (1-D interface profiles), ``geometry`` (tubular
charts), ``sharp_limit`` (radial free-boundary solution), ``expansion``
(matched approximate fields), ``diffuse`` (radial Cahn-Hilliard solver),
``residuals`` (remainders, error norms and order fits) and ``harness``
(configuration, CLI and convergence studies).
"""

from .errors import ChlimitError, InvalidInput, NumericalFailure
from .estimators import MatchedAsymptoticApproximation, RadialCahnHilliard, SharpInterfaceLimit
from .profiles import DoubleWell, RhoGrid, build_profile_set, solve_theta0

__version__ = "0.1.0"

__all__ = [
    "ChlimitError",
    "InvalidInput",
    "NumericalFailure",
    "DoubleWell",
    "RhoGrid",
    "build_profile_set",
    "solve_theta0",
    "SharpInterfaceLimit",
    "MatchedAsymptoticApproximation",
    "RadialCahnHilliard",
    "__version__",
]
