"""Norms, segments, polylines, and norm-circle arcs."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qhmetric.normed_space import (DimensionMismatchError, NormSpec, PlaneBasis,
                                   Polyline, minor_arc, norm, polyline_length,
                                   quasiconvexity_constant, segment_point,
                                   sphere_circle_point)

E1 = np.array([1.0, 0.0])
E2 = np.array([0.0, 1.0])
XY = PlaneBasis(E1, E2)

P_GRID = [1.0, 1.5, 2.0, 3.0, math.inf]

coord = st.floats(min_value=-100.0, max_value=100.0,
                  allow_nan=False, allow_infinity=False)


def vec_strategy(dim):
    return st.lists(coord, min_size=dim, max_size=dim).map(np.array)


class TestNorm:
    def test_euclidean_identity(self):
        assert norm(NormSpec(2, 2.0), np.array([3.0, 4.0])) == 5.0

    def test_max_norm(self):
        assert norm(NormSpec(2, math.inf), np.array([3.0, -4.0])) == 4.0

    def test_sum_norm(self):
        assert norm(NormSpec(3, 1.0), np.array([1.0, 1.0, 1.0])) == 3.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            norm(NormSpec(3, 2.0), np.array([1.0, 2.0]))

    @pytest.mark.parametrize("p", P_GRID)
    @given(v=vec_strategy(3), s=st.floats(min_value=-8, max_value=8,
                                          allow_nan=False))
    @settings(max_examples=40, deadline=None)
    def test_homogeneous(self, p, v, s):
        space = NormSpec(3, p)
        assert norm(space, s * v) == pytest.approx(abs(s) * norm(space, v),
                                                   rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("p", P_GRID)
    @given(u=vec_strategy(3), v=vec_strategy(3))
    @settings(max_examples=40, deadline=None)
    def test_subadditive(self, p, u, v):
        space = NormSpec(3, p)
        assert norm(space, u + v) <= norm(space, u) + norm(space, v) + 1e-9

    @pytest.mark.parametrize("p", P_GRID)
    def test_zero_iff_zero(self, p):
        space = NormSpec(2, p)
        assert norm(space, np.zeros(2)) == 0.0
        assert norm(space, np.array([1e-80, 0.0])) > 0.0

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            NormSpec(1, 2.0)
        with pytest.raises(ValueError):
            NormSpec(2, 0.5)


class TestSegment:
    def test_endpoints(self):
        z1, z2 = np.array([1.0, 2.0]), np.array([-3.0, 4.0])
        assert np.allclose(segment_point(z1, z2, 0.0), z1)
        assert np.allclose(segment_point(z1, z2, 1.0), z2)

    def test_midpoint(self):
        mid = segment_point(np.array([0.0, 0.0]), np.array([2.0, 2.0]), 0.5)
        assert np.allclose(mid, [1.0, 1.0])

    def test_parameter_range(self):
        with pytest.raises(ValueError):
            segment_point(np.zeros(2), np.ones(2), 1.5)


class TestPolyline:
    def test_unit_edge(self):
        poly = Polyline(np.array([[0.0, 0.0], [1.0, 0.0]]))
        assert polyline_length(NormSpec(2, 2.0), poly) == 1.0

    def test_two_edges(self):
        poly = Polyline(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]))
        assert polyline_length(NormSpec(2, 2.0), poly) == 2.0

    def test_circumference_oracle(self):
        # analytic circumference of the Euclidean unit circle
        ang = np.linspace(0.0, 2.0 * math.pi, 1025)
        poly = Polyline(np.stack([np.cos(ang), np.sin(ang)], axis=1))
        assert polyline_length(NormSpec(2, 2.0), poly) == pytest.approx(
            2.0 * math.pi, abs=1e-4)

    def test_coincident_vertices_rejected(self):
        with pytest.raises(ValueError):
            Polyline(np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]))

    def test_single_vertex_rejected(self):
        with pytest.raises(ValueError):
            Polyline(np.array([[0.0, 0.0]]))

    @given(k=st.integers(min_value=1, max_value=6))
    @settings(max_examples=20, deadline=None)
    def test_concatenation_additive(self, k):
        pts = np.cumsum(np.ones((2 * k + 1, 2)), axis=0)
        space = NormSpec(2, 2.0)
        whole = polyline_length(space, Polyline(pts))
        left = polyline_length(space, Polyline(pts[:k + 1]))
        right = polyline_length(space, Polyline(pts[k:]))
        assert whole == pytest.approx(left + right, rel=1e-12)

    def test_triangle_inequality_invariant(self):
        space = NormSpec(2, 1.5)
        pts = np.array([[0.0, 0.0], [1.0, 2.0], [-1.0, 0.5], [3.0, 3.0]])
        poly = Polyline(pts)
        chord = norm(space, pts[-1] - pts[0])
        assert polyline_length(space, poly) >= chord - 1e-12


class TestCirclePoints:
    def test_euclidean_axis(self):
        pt = sphere_circle_point(NormSpec(2, 2.0), np.zeros(2), 1.0, XY, 0.0)
        assert np.allclose(pt, E1)

    def test_max_norm_diagonal(self):
        # normalize (sqrt2/2, sqrt2/2) by the max norm: both coords become 1
        pt = sphere_circle_point(NormSpec(2, math.inf), np.zeros(2), 1.0, XY,
                                 math.pi / 4.0)
        assert np.allclose(pt, [1.0, 1.0])

    @pytest.mark.parametrize("p", P_GRID)
    def test_on_sphere(self, p):
        space = NormSpec(2, p)
        for theta in np.linspace(0.0, 2 * math.pi, 17):
            pt = sphere_circle_point(space, np.array([0.5, -0.25]), 0.75, XY,
                                     float(theta))
            assert norm(space, pt - np.array([0.5, -0.25])) == pytest.approx(
                0.75, rel=1e-12)

    def test_degenerate_plane_rejected(self):
        with pytest.raises(ValueError):
            PlaneBasis(E1, 2.0 * E1)


class TestMinorArc:
    def test_quarter_circle_length(self):
        arc = minor_arc(NormSpec(2, 2.0), np.zeros(2), 1.0, XY, 0.0,
                        math.pi / 2.0, 4096)
        assert polyline_length(NormSpec(2, 2.0), arc) == pytest.approx(
            math.pi / 2.0, abs=1e-5)

    def test_half_circle_span(self):
        arc = minor_arc(NormSpec(2, 2.0), np.zeros(2), 1.0, XY, 0.25,
                        0.25 + math.pi, 64)
        assert len(arc) == 65

    def test_resolution_two_accepted(self):
        arc = minor_arc(NormSpec(2, 2.0), np.zeros(2), 1.0, XY, 0.0, 1.0, 2)
        assert len(arc) == 3

    def test_major_arc_rejected_without_override(self):
        with pytest.raises(ValueError):
            minor_arc(NormSpec(2, 2.0), np.zeros(2), 1.0, XY, 0.0, 3.5, 16)
        minor_arc(NormSpec(2, 2.0), np.zeros(2), 1.0, XY, 0.0, 3.5, 16,
                  allow_major=True)

    def test_refinement_converges(self):
        space = NormSpec(2, 1.5)
        lengths = [polyline_length(space, minor_arc(space, np.zeros(2), 1.0,
                                                    XY, 0.3, 0.3 + 2.0, res))
                   for res in (64, 256, 1024, 4096)]
        diffs = np.abs(np.diff(lengths))
        assert np.all(diffs[1:] <= diffs[:-1] + 1e-12)


class TestQuasiconvexity:
    def test_segment_is_one(self):
        poly = Polyline(np.array([[0.0, 0.0], [0.5, 0.5], [1.0, 1.0]]))
        assert quasiconvexity_constant(NormSpec(2, 2.0), poly) == 1.0

    def test_half_circle_oracle(self):
        # arc length pi*r over chord 2r
        arc = minor_arc(NormSpec(2, 2.0), np.zeros(2), 1.0, XY, 0.0, math.pi,
                        4096)
        assert quasiconvexity_constant(NormSpec(2, 2.0), arc) == pytest.approx(
            math.pi / 2.0, abs=1e-4)

    @pytest.mark.parametrize("p", P_GRID)
    def test_minor_arcs_two_quasiconvex(self, p):
        space = NormSpec(2, p)
        rng = np.random.default_rng(7)
        for _ in range(6):
            t1 = rng.uniform(0.0, 2.0 * math.pi)
            span = rng.uniform(0.05, math.pi)
            arc = minor_arc(space, rng.normal(size=2), rng.uniform(0.5, 2.0),
                            XY, t1, t1 + span, 4096)
            assert quasiconvexity_constant(space, arc) <= 2.0 + 1e-3

    def test_skewed_basis_still_two_quasiconvex(self):
        space = NormSpec(2, 1.0)
        basis = PlaneBasis(np.array([1.0, 0.0]), np.array([0.97, 0.05]))
        arc = minor_arc(space, np.zeros(2), 1.0, basis, 0.1, 0.1 + 3.0, 4096)
        assert quasiconvexity_constant(space, arc) <= 2.0 + 1e-3
