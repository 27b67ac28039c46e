"""Certified quasihyperbolic distance brackets in punctured p-norm domains."""

from .domains import (Ball, Domain, GeometryError, HalfSpace, Membership,
                      PunctureSet, SchemaError, WholeSpace, ball_puncture_count,
                      contains, d_G, dist_boundary_base, dist_puncture,
                      domain_from_json, domain_to_json, lambda_sigma)
from .normed_space import (NormSpec, PlaneBasis, Polyline, minor_arc, norm,
                           polyline_length, quasiconvexity_constant,
                           segment_point, sphere_circle_point)
from .qh_metric import (DistanceBracket, GraphParams, NearGeodesicResult,
                        j_metric, k_bracket, k_lower, k_upper_direct,
                        logine_check, near_geodesic)
from .quadrature import (CertificationError, QuadratureParams,
                         polyline_qh_length, segment_qh_length)

__version__ = "0.1.0"


def qh_length(domain, poly, quad=None):
    """Certified quasihyperbolic length of a polyline; returns (value, err)."""
    return polyline_qh_length(domain, poly, quad or QuadratureParams())
