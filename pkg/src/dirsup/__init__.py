"""Random Dirichlet polynomials: suprema, torus lift and the discrete-cube process."""
from .dirichlet import LiftedPolynomial, PolynomialSpec, SignAssignment, TorusPoint, bohr_lift
from .supremum import EstimatorConfig, MCEstimate, SupEstimate, estimate_sup, expected_sup
from .weights import WeightSpec

__version__ = "0.1.0"

__all__ = [
    "EstimatorConfig",
    "LiftedPolynomial",
    "MCEstimate",
    "PolynomialSpec",
    "SignAssignment",
    "SupEstimate",
    "TorusPoint",
    "WeightSpec",
    "bohr_lift",
    "estimate_sup",
    "expected_sup",
]
