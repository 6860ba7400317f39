"""Fractional Laplacian quadrature, a 1-D nonlocal Dirichlet solver for the
coupled system ``(-Delta)^s u = v^p, (-Delta)^t v = u^q``, and margin checks
for the analytic constructions around it."""
from ._kernels import BACKEND
from .exponents import (
    Criticality,
    CriticalityReport,
    ProblemParams,
    classify_exponents,
    scaling_exponents,
    supersolution_exponents,
)
from .profiles import RadialProfile
from .quadrature import (
    QuadratureError,
    QuadratureSpec,
    SupersolutionPair,
    angular_factor,
    normalization_constant,
    pv_radial_fraclap,
    supersolution_constants,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Criticality",
    "CriticalityReport",
    "ProblemParams",
    "QuadratureError",
    "QuadratureSpec",
    "RadialProfile",
    "SupersolutionPair",
    "angular_factor",
    "classify_exponents",
    "normalization_constant",
    "pv_radial_fraclap",
    "scaling_exponents",
    "supersolution_constants",
    "supersolution_exponents",
]
