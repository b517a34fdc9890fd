"""conicvol: conic intrinsic volumes, their normal approximations, and phase transitions.

Modules
-------
numerics            random streams, linear algebra, quadrature, root finding
cones               cone catalog with metric and polar projections
intrinsic_volumes   exact laws, closed-form moments, Monte Carlo estimators
normal_approx       Berry-Esseen, total-variation and concentration bounds
phase_transition    l1 / Schatten-1 curves, Crofton bounds, recovery experiments
solver              basis pursuit and a 1-D convex minimizer
cli                 command-line front end (``conicvol``)
"""

__version__ = "0.1.0"

from .cones import (PSD, ChamberA, ChamberBC, Circular, Cone, L1Descent, Negated, Orthant,  # noqa: E402
                    PolarOf, ProjectionResult, SchattenDescent, Subspace, cone_from_dict,
                    face_dimension, polar, project, project_l1_polar, project_schatten_polar)
from .intrinsic_volumes import (IVDistribution, MomentEstimates, VarianceBounds,  # noqa: E402
                                closed_form_moments, estimate_moments, exact_distribution,
                                sample_V, variance_bounds)
from .numerics import RngStream  # noqa: E402

__all__ = [
    "Cone", "Orthant", "Subspace", "Circular", "PSD", "ChamberA", "ChamberBC", "L1Descent",
    "SchattenDescent", "Negated", "PolarOf", "ProjectionResult", "cone_from_dict",
    "face_dimension", "polar", "project", "project_l1_polar", "project_schatten_polar",
    "IVDistribution", "MomentEstimates", "VarianceBounds", "closed_form_moments",
    "estimate_moments", "exact_distribution", "sample_V", "variance_bounds", "RngStream",
    "__version__",
]
