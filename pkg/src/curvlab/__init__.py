"""curvlab: geometry, quadrature and nonexistence criteria for
rotationally symmetric model manifolds.

A model manifold is described by its dimension and a warping function
h(r); all geometric quantities, the radial curvature-equation solver
and the criterion checkers derive from that single input.
"""

from .funcexpr import (DomainError, ExpressionError, Jet2, NonFiniteError,
                       ParseError, eval_jet2, parse, to_source)
from .manifold import (CurvatureReport, EuclideanWarp, ExprRadial,
                       HyperbolicWarp, InvalidDimension, JetRadial,
                       ModelManifold, NonPositiveWarp, PoleError, RadialFn,
                       ValueRadial, WarpValidationError, ball_volume,
                       check_curvature, euclidean, from_warp, hyperbolic,
                       laplacian_r, scalar_curvature, sphere_area_unit,
                       sphere_average, volume_sphere)
from .quadrature import (ClassifyPolicy, CumulativeIntegral, ImproperResult,
                         LimitPolicy, LimitResult, QuadResult,
                         classify_improper, integrate, limit_at_infinity)
from .integrals import (NestedBallIntegral, nested_ball_integral,
                        normalized_ball_integral)
from .radial_ode import (BoundReport, ConformalExponents, InfEstimate,
                         LengthResult, ResidualReport, Solution, SolutionJet,
                         conformal_length, inf_estimate, residual,
                         solve_radial, verify_supersolution_bound)
from .criteria import (CriterionReport, DeltaOutOfRange, GrowthReport,
                       ScanPolicy, Verdict, infimum_zero_integral_check,
                       infimum_zero_limit_check, nonexistence_growth_check,
                       nonexistence_integral_check, volume_growth_check)

__version__ = "0.1.0"
