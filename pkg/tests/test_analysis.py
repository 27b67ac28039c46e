"""Verification suites, profilers, gauges, and annulus-net witnesses."""
import dataclasses
import math

import numpy as np
import pytest

from qhmetric.analysis import (AnnulusNetInstance, CoveringError,
                               GaugeRangeError, PlacementError, PsiSpec,
                               annulus_net_lower_bound, annulus_net_table,
                               build_annulus_net, check_separation,
                               close_pair_suite, detour_bound_suite,
                               distance_transfer_check, distance_transfer_suite,
                               double_cone_check, equivalence_apply,
                               generate_separated_punctures, isolation_suite,
                               path_transfer_check, path_transfer_suite,
                               psi_admissible, psi_profile,
                               removability_backward_suite,
                               removability_forward_suite, sample_pairs,
                               uniformity_profile)
from qhmetric.domains import Ball, Domain, HalfSpace, PunctureSet
from qhmetric.normed_space import NormSpec, Polyline
from qhmetric.qh_metric import GraphParams, j_metric, near_geodesic
from qhmetric.quadrature import CertificationError, QuadratureParams

SP2 = NormSpec(2, 2.0)
QUAD = QuadratureParams()
GRAPH = GraphParams(node_budget=280, seed=2)


def unit_disk(punctures=None, kappa=0.5):
    return Domain(SP2, Ball(np.zeros(2), 1.0),
                  PunctureSet(np.asarray(punctures, dtype=float), kappa)
                  if punctures is not None else None)


@pytest.fixture(scope="module")
def disk_with_punctures():
    base = unit_disk()
    punct = generate_separated_punctures(base, 0.5, 12, seed=42)
    return Domain(SP2, Ball(np.zeros(2), 1.0), punct)


class TestPsiSpec:
    def test_parametric_eval(self):
        psi = PsiSpec.parametric(2.0, 3.0)
        assert psi(0.0) == 0.0
        assert psi(1.0) == pytest.approx(2.0 * math.log(4.0))

    def test_tabulated_step_lookup(self):
        psi = PsiSpec.tabulated([1.0, 2.0, 4.0], [0.5, 1.0, 2.0])
        assert psi(0.5) == 0.5
        assert psi(1.5) == 1.0
        assert psi(4.0) == 2.0
        with pytest.raises(GaugeRangeError):
            psi(5.0)

    def test_tabulated_monotone_required(self):
        with pytest.raises(ValueError):
            PsiSpec.tabulated([1.0, 2.0], [1.0, 0.5])

    def test_scaled(self):
        psi = PsiSpec.parametric(1.0, 1.0).scaled(4096.0, 1.0)
        assert psi(1.0) == pytest.approx(4096.0 * math.log(2.0))

    def test_admissibility(self):
        grid = np.geomspace(1e-3, 1e3, 41)
        assert psi_admissible(PsiSpec.parametric(2.0, 1.0), grid)
        assert psi_admissible(PsiSpec.parametric(1.0, 1.0), grid)
        assert not psi_admissible(PsiSpec.parametric(0.5, 1.0), grid)

    def test_equivalence_identity(self):
        psi = PsiSpec.parametric(1.7, 0.4)
        psi1, report = equivalence_apply(psi, 1.0, 1.0, 1.0, 1.0)
        assert report.consistent and report.max_abs_residual == 0.0
        assert psi1(2.0) == psi(2.0)

    def test_equivalence_transfer_constants(self):
        psi = PsiSpec.parametric(1.0, 1.0)
        psi1, report = equivalence_apply(psi, 2.0 ** 12, 1.0, 3.0, 2.0 ** 7)
        assert psi1(1.0) == pytest.approx(4096.0 * math.log(2.0))
        # the paired relations need not close exactly; residuals are reported
        assert report.max_abs_residual >= 0.0

    def test_nonpositive_constants_rejected(self):
        with pytest.raises(ValueError):
            equivalence_apply(PsiSpec.parametric(1.0), 0.0, 1.0, 1.0, 1.0)


class TestSeparation:
    def test_single_point_vacuous(self):
        rep = check_separation(unit_disk([[0.2, 0.0]]))
        assert rep.all_confirmed and len(rep.pairs) == 0

    def test_disk_pair_oracle(self):
        # j = log(1 + 0.8/0.6) >= 1/2 certifies the pair
        rep = check_separation(unit_disk([[-0.4, 0.0], [0.4, 0.0]]))
        assert rep.verdict == "confirmed"
        assert rep.pairs[0].lower == pytest.approx(math.log(1 + 0.8 / 0.6),
                                                   rel=1e-12)

    def test_near_coincident_refuted(self):
        rep = check_separation(unit_disk([[0.0, 0.0], [1e-6, 0.0]]))
        assert rep.verdict == "refuted"
        assert rep.pairs[0].upper < 0.5

    def test_undecided_band(self):
        # lower j = log(1+1.4/0.3) < 2.0 but the true distance exceeds it
        rep = check_separation(unit_disk([[-0.7, 0.0], [0.7, 0.0]], kappa=2.0))
        assert rep.verdict == "inconclusive"

    def test_generator_certifies_by_construction(self, disk_with_punctures):
        dom = disk_with_punctures
        base = dom.without_punctures()
        pts = dom.punctures.points
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                assert j_metric(base, pts[i], pts[j]) >= 0.5

    def test_generator_saturation(self):
        with pytest.raises(PlacementError):
            generate_separated_punctures(unit_disk(), 50.0, 20, seed=1)

    def test_count_one(self):
        punct = generate_separated_punctures(unit_disk(), 0.5, 1, seed=3)
        assert len(punct) == 1


class TestIsolationSuite(object):
    def test_clean_disk_vacuous(self):
        rep = isolation_suite(unit_disk(), 20, seed=1)
        assert rep.refuted == 0
        parts23 = [r for r in rep.records if r.note in ("part2", "part3")]
        assert all(r.status == "skipped" for r in parts23)

    def test_separated_punctures_no_violations(self, disk_with_punctures):
        rep = isolation_suite(disk_with_punctures, 150, seed=9)
        assert rep.refuted == 0
        assert rep.confirmed >= 300  # parts 2 and 3 mostly feasible

    def test_boundary_lambda_probe(self, disk_with_punctures):
        # lambda close to the threshold still gives at most one puncture
        from qhmetric.domains import ball_puncture_count
        dom = disk_with_punctures
        rng = np.random.default_rng(5)
        for _ in range(200):
            x = rng.uniform(-0.7, 0.7, size=2)
            if float(dom.base_clearance_many(x[None, :])[0]) <= 0.05:
                continue
            assert ball_puncture_count(dom, x, 0.22) <= 1


class TestCloseAndDetourSuites:
    def test_close_pair_suite(self, disk_with_punctures):
        rep = close_pair_suite(disk_with_punctures, 12, seed=4, graph=GRAPH,
                               quad=QUAD)
        assert rep.refuted == 0
        assert rep.confirmed >= 0.9 * rep.trials

    def test_detour_suite_euclidean(self, disk_with_punctures):
        rep = detour_bound_suite(disk_with_punctures, 6, seed=5, graph=GRAPH,
                                 quad=QUAD)
        assert rep.refuted == 0 and rep.confirmed == rep.trials

    def test_detour_suite_max_norm(self):
        dom = Domain(NormSpec(2, math.inf), Ball(np.zeros(2), 1.0))
        rep = detour_bound_suite(dom, 4, seed=6, graph=GRAPH, quad=QUAD)
        assert rep.refuted == 0 and rep.confirmed == rep.trials

    def test_oracle_instance(self):
        # puncture at d/128 from the center, partner on the d/32 sphere
        dom = unit_disk([[1.0 / 128.0, 0.0]])
        from qhmetric.qh_metric import k_bracket, k_lower
        br_g = k_bracket(dom, np.zeros(2), np.array([1.0 / 32.0, 0.0]),
                         GRAPH, QUAD)
        low_d = k_lower(unit_disk(), np.zeros(2), np.array([1.0 / 32.0, 0.0]))
        assert br_g.upper <= 512.0 * low_d


class TestPathTransfer:
    def test_unpunctured_ratio_one(self):
        dom = unit_disk()
        path = Polyline(np.array([[-0.4, 0.0], [0.0, 0.1], [0.4, 0.0]]))
        verdict = path_transfer_check(dom, path, QUAD, None)
        assert verdict.status == "partial"
        assert verdict.length_g == pytest.approx(verdict.length_d, rel=1e-9)

    def test_confirmed_with_endpoint_bound(self, disk_with_punctures):
        base = disk_with_punctures.without_punctures()
        z1, z2 = np.array([-0.35, -0.62]), np.array([0.3, -0.61])
        ng = near_geodesic(base, z1, z2, 2.0, GRAPH, QUAD)
        from qhmetric.qh_metric import k_lower
        try:
            verdict = path_transfer_check(disk_with_punctures, ng.path, QUAD,
                                          k_lower(base, z1, z2))
        except CertificationError:
            pytest.skip("sampled path failed the clearance hypothesis")
        assert verdict.status in ("confirmed", "partial")

    def test_hypothesis_gate(self):
        dom = unit_disk([[0.5, 0.0]])
        # path passing within d_D/256 of the puncture violates the hypothesis
        path = Polyline(np.array([[0.4995, 0.0015], [0.5, 0.0015],
                                  [0.5005, 0.0015]]))
        with pytest.raises(CertificationError):
            path_transfer_check(dom, path, QUAD, None)

    def test_suite_runs(self, disk_with_punctures):
        rep = path_transfer_suite(disk_with_punctures, 6, seed=7, graph=GRAPH,
                                  quad=QUAD)
        assert rep.refuted == 0


class TestDistanceTransfer:
    def test_max_growth_margin(self):
        d1 = 1.0
        c = 2.0
        dist = d1 / c
        d2 = d1 + dist  # maximal growth allowed by the Lipschitz bound
        assert distance_transfer_check(d1, d2, dist, c)

    def test_hypothesis_required(self):
        with pytest.raises(ValueError):
            distance_transfer_check(1.0, 1.0, 0.4, 2.0)

    def test_inconsistent_inputs(self):
        with pytest.raises(ValueError):
            distance_transfer_check(1.0, 3.0, 0.6, 2.0)

    def test_sampled_suite(self, disk_with_punctures):
        rep = distance_transfer_suite(disk_with_punctures, 200, seed=8)
        assert rep.refuted == 0


class TestProfiles:
    def test_psi_profile_envelope_monotone(self, disk_with_punctures):
        prof = psi_profile(disk_with_punctures, 60, seed=10, quad=QUAD)
        assert np.all(np.diff(prof.bin_values) >= 0.0)
        assert all(s.k_low <= s.k_up + 1e-12 for s in prof.samples)

    def test_uniformity_halfspace_axial(self):
        dom = Domain(SP2, HalfSpace(np.array([0.0, -1.0]), 0.0))
        res = uniformity_profile(dom, 50, seed=11, quad=QUAD)
        assert res.max_ratio >= 1.0 - 1e-9
        # the affine fit majorizes every sample
        for s in res.samples:
            assert s.k_up <= res.fit_slope * s.j_val + res.fit_intercept + 1e-9

    def test_ratio_at_least_one(self, disk_with_punctures):
        res = uniformity_profile(disk_with_punctures, 40, seed=12, quad=QUAD)
        for s in res.samples:
            assert s.k_up / s.j_val >= 1.0 - 1e-9

    def test_puncture_adjacent_inflation(self, disk_with_punctures):
        # small-t puncture-adjacent pairs produce k_up far above log(1+t)
        prof = psi_profile(disk_with_punctures, 80, seed=13, quad=QUAD)
        excess = [s.k_up - math.log1p(s.t) for s in prof.samples if s.t < 2.0]
        assert max(excess, default=0.0) >= 0.0


class TestRemovability:
    def test_forward_zero_refuted(self, disk_with_punctures):
        rep = removability_forward_suite(disk_with_punctures,
                                         PsiSpec.parametric(2.0, 1.0),
                                         40, seed=14, quad=QUAD)
        assert rep.refuted == 0
        assert rep.confirmed >= rep.trials - rep.inconclusive

    def test_forward_rejects_inadmissible(self, disk_with_punctures):
        with pytest.raises(ValueError):
            removability_forward_suite(disk_with_punctures,
                                       PsiSpec.parametric(0.5, 1.0),
                                       5, seed=15, quad=QUAD)

    def test_backward_zero_refuted(self, disk_with_punctures):
        rep, psi1 = removability_backward_suite(disk_with_punctures, 40,
                                                seed=16, quad=QUAD,
                                                envelope_pairs=80)
        assert rep.refuted == 0
        assert psi1.is_tabulated
        ranged = [r for r in rep.records if r.note == "range"]
        assert all(r.status == "inconclusive" for r in ranged)


class TestDoubleCone:
    def test_diameter_segment(self):
        # vertex sweep maximum of min(arm)/clearance sits at the center: 0.9
        pts = np.stack([np.linspace(-0.9, 0.9, 201),
                        np.zeros(201)], axis=1)
        ok, minimal = double_cone_check(unit_disk(), Polyline(pts), 1.0)
        assert ok
        assert minimal == pytest.approx(1.0, abs=1e-9)

    def test_short_central_segment(self):
        pts = np.stack([np.linspace(-0.5, 0.5, 101), np.zeros(101)], axis=1)
        ok, minimal = double_cone_check(unit_disk(), Polyline(pts), 1.0)
        assert ok and minimal == 1.0

    def test_near_boundary_corridor(self):
        ang = np.linspace(0.25, math.pi - 0.25, 181)
        pts = 0.97 * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        ok, minimal = double_cone_check(unit_disk(), Polyline(pts), 2.0)
        assert not ok
        assert minimal > 5.0

    def test_exit_detected(self):
        pts = np.array([[0.0, 0.0], [2.0, 0.0]])
        with pytest.raises(CertificationError):
            double_cone_check(unit_disk(), Polyline(pts), 10.0)


@pytest.fixture(scope="module")
def inst10():
    return build_annulus_net(1.0, 10)


class TestAnnulusNet:

    def test_probe_points_clear_annulus(self, inst10):
        assert np.linalg.norm(inst10.a) == pytest.approx(1.1)
        assert np.linalg.norm(inst10.b) == pytest.approx(0.9)
        assert np.linalg.norm(inst10.a) > 1.05
        assert np.linalg.norm(inst10.b) < 1.0

    def test_covering_verified(self, inst10):
        assert inst10.covering_verified
        assert inst10.covering_radius_bound < 1.0 / 200.0
        # net size from the grid arithmetic: thousands, not millions
        assert 2_000 <= len(inst10.net) <= 200_000

    def test_mid_annulus_probe(self, inst10):
        from scipy.spatial import cKDTree
        tree = cKDTree(inst10.net.points)
        probe = np.array([[1.025, 0.0]])
        assert tree.query(probe)[0][0] < 1.0 / 200.0

    def test_lower_bound_exceeds_j(self, inst10):
        assert annulus_net_lower_bound(inst10) >= 10.0

    def test_unverified_instance_rejected(self, inst10):
        broken = dataclasses.replace(inst10, covering_verified=False)
        with pytest.raises(CoveringError):
            annulus_net_lower_bound(broken)

    def test_small_j_rejected(self):
        with pytest.raises(ValueError):
            build_annulus_net(1.0, 9)

    def test_table_scaling(self):
        rows = annulus_net_table(10, 11)
        for row in rows:
            assert row.covering_verified
            assert row.k_lower_bound >= row.j
            assert row.t_j <= 6.0
            # |a - b| = r/5 exactly
            inst = build_annulus_net(row.r, row.j)
            assert np.linalg.norm(inst.a - inst.b) == pytest.approx(
                row.r / 5.0, rel=1e-12)


class TestSamplePairs:
    def test_deterministic(self, disk_with_punctures):
        a = sample_pairs(disk_with_punctures, 25, seed=77)
        b = sample_pairs(disk_with_punctures, 25, seed=77)
        assert np.array_equal(a, b)

    def test_inside_domain(self, disk_with_punctures):
        pairs = sample_pairs(disk_with_punctures, 40, seed=78)
        flat = pairs.reshape(-1, 2)
        assert np.all(disk_with_punctures.clearance_many(flat) > 0.0)
