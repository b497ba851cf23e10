"""sphereflow: contracting curvature flows of convex hypersurfaces in the round sphere.

Solvers for geodesic-sphere radii, closed curves on S^2, and axisymmetric
hypersurfaces; gnomonic-projection bridges to planar flows; reflection
symmetry diagnostics; and a verification harness runnable from the CLI
(`sphereflow verify`).
"""

__version__ = "0.1.0"

from .speeds import (SpeedFunction, SpeedCertificate, make_builtin,
                     from_callable, certify, gradient_check, parse_speed_spec)
from .sphere_ode import SphereTrajectory, integrate_sphere, lifespan, avoidance_check
from .curve_flow import (RadialCurve, FlowSpec, StopRules, radial_curve,
                         circle_curve, perturbed_circle_curve, fourier_curve,
                         offset_circle_curve, curvature_of_graph, rhs, step, run)
from .quantities import (QuantitySet, RunRecord, eval_quantities,
                         harnack_monitor, backwards_limit_report)
from .reflection import (ReflectionSetup, reflect_graph, one_sided_reflects,
                         alpha_threshold, roundness, reflection_vector)

__all__ = [
    "SpeedFunction", "SpeedCertificate", "make_builtin", "from_callable",
    "certify", "gradient_check", "parse_speed_spec",
    "SphereTrajectory", "integrate_sphere", "lifespan", "avoidance_check",
    "RadialCurve", "FlowSpec", "StopRules", "radial_curve", "circle_curve",
    "perturbed_circle_curve", "fourier_curve", "offset_circle_curve",
    "curvature_of_graph", "rhs", "step", "run",
    "QuantitySet", "RunRecord", "eval_quantities", "harnack_monitor",
    "backwards_limit_report",
    "ReflectionSetup", "reflect_graph", "one_sided_reflects",
    "alpha_threshold", "roundness", "reflection_vector",
]
