"""Maximal intersection positions of log-concave functions, convex bodies and measures."""

__version__ = "0.1.0"

from .bodies import (AffineImage, AllSpace, Ball, ConvexBody, Ellipsoid, HPolytope, Region,
                     SurfaceSample, affine_image, box, classify, cube, gauge, outward_normal,
                     regular_polygon, surface_sample)
from .certify import (IsotropyCertificate, boundary_measure, certificate_from_bundle,
                      geometric_certificate, isotropy_certificate, john_limit_measure,
                      residual_form_i, residual_form_ii, sphere_restricted_certificate)
from .errors import (DecayFitError, EmptyRegionError, InputError, InvalidBodyError, PreconditionError,
                     ScenarioError, SingularPointError, UnsupportedBodyError, UnsupportedError,
                     UnsupportedScenarioError)
from .functions import (LogConcaveFunc, exp_gauge, gaussian, indicator, linear_max,
                        restricted_gaussian, standard_gaussian)
from .optimizer import (GridSpec, OptimizeConfig, OptimizeResult, brute_force, max_inscribed_ellipsoid,
                        maximize, sandwich_violations, scan_radius)
from .position import DetMode, Free, FixedDet, Position, UnitDet, sl_path, traceless
from .quadrature import (IntegralEstimate, MomentBundle, barycenter, integrate_product, moment_bundle,
                         paired_difference, polar_identity_check)
from .scenario import Scenario, parse_scenario, scenario_from_dict
from .variation import (Decay, FDCheck, Gradient, closed_form_I, fd_check, fit_linear_decay, gradient,
                        objective, objective_upper_bound, shift_directional_derivative,
                        sl_directional_derivative)
