"""Acceptance criteria, one test per criterion.

Each test prints a single PASS line (pytest shows it with -s; failures carry
the same label).  Tolerances and time limits are pinned here and nowhere else.
"""
import json
import math
import os
import time

import numpy as np
import pytest

from qhmetric.analysis import (PsiSpec, annulus_net_table, check_separation,
                               close_pair_suite, detour_bound_suite,
                               distance_transfer_suite, generate_separated_punctures,
                               isolation_suite, removability_backward_suite,
                               removability_forward_suite, uniformity_profile)
from qhmetric.cli import main
from qhmetric.domains import (Ball, Domain, PunctureSet, domain_to_json,
                              lambda_sigma)
from qhmetric.normed_space import (NormSpec, PlaneBasis, minor_arc,
                                   quasiconvexity_constant)
from qhmetric.qh_metric import GraphParams, logine_grid
from qhmetric.quadrature import QuadratureParams

SP2 = NormSpec(2, 2.0)
ROUNDOFF = 1e-9  # containment slack for float round-off on exact oracles


def announce(num: int, label: str, elapsed: float, limit: float) -> None:
    print(f"criterion {num:02d} PASS ({elapsed:.2f}s / limit {limit:.0f}s): "
          f"{label}")
    assert elapsed < limit, f"criterion {num} exceeded {limit}s ({elapsed:.2f}s)"


@pytest.fixture(scope="module")
def disk_base():
    return Domain(SP2, Ball(np.zeros(2), 1.0))


@pytest.fixture(scope="module")
def disk20(disk_base):
    punct = generate_separated_punctures(disk_base, 0.5, 20, seed=42)
    return Domain(SP2, Ball(np.zeros(2), 1.0), punct)


@pytest.fixture(scope="module")
def halfplane_scenario(tmp_path_factory):
    doc = {"domain": {"space": {"dim": 2, "p": 2.0},
                      "base": {"type": "halfspace", "normal": [0.0, -1.0],
                               "offset": 0.0},
                      "punctures": {"kappa": 0.5, "points": []}},
           "seed": 0}
    path = tmp_path_factory.mktemp("accept") / "halfplane.json"
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture(scope="module")
def disk20_scenario(tmp_path_factory, disk20):
    path = tmp_path_factory.mktemp("accept") / "disk20.json"
    path.write_text(json.dumps({"domain": domain_to_json(disk20), "seed": 0}))
    return str(path)


def test_criterion_01_halfspace_oracle(halfplane_scenario, tmp_path):
    # 20 axial pairs; brackets contain log(b/a) at relative gap <= 1e-4
    pairs = [(a, f * a)
             for a in (0.1, 0.25, 0.5, 1.0, 2.0)
             for f in (1.5, math.e, 5.0, 20.0)]
    assert len(pairs) == 20
    out = tmp_path / "c1.json"
    t0 = time.perf_counter()
    for a, b in pairs:
        code = main(["dist", "--scenario", halfplane_scenario,
                     f"--z1=0,{a!r}", f"--z2=0,{b!r}", "--json", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())["payload"]
        true = math.log(b / a)
        lo, up = payload["lower"], payload["upper"]
        assert lo - ROUNDOFF * max(1.0, true) <= true
        assert true <= up + ROUNDOFF * max(1.0, true)
        assert (up - lo) / lo <= 1e-4
    announce(1, "half-space axial brackets at 1e-4 relative gap",
             time.perf_counter() - t0, 5.0)


def test_criterion_02_ball_radial_oracle(disk_base):
    from qhmetric.qh_metric import k_bracket
    t0 = time.perf_counter()
    for t in (0.5, 0.9, 0.99):
        br = k_bracket(disk_base, np.zeros(2), np.array([t, 0.0]),
                       GraphParams(), QuadratureParams())
        true = math.log(1.0 / (1.0 - t))
        assert br.lower - ROUNDOFF * true <= true <= br.upper + ROUNDOFF * true
        assert (br.upper - br.lower) / br.lower <= 1e-3
    announce(2, "ball radial brackets at 1e-3 relative gap",
             time.perf_counter() - t0, 10.0)


def test_criterion_03_log_inequality_grid():
    t0 = time.perf_counter()
    rs = np.linspace(0.0, 0.999, 10_000)
    left, right = logine_grid(rs)
    assert float(left.min()) >= -1e-12
    assert float(right.min()) >= -1e-12
    announce(3, "two-sided log inequality on 10^4 grid points",
             time.perf_counter() - t0, 1.0)


def test_criterion_04_isolation_suite(disk20):
    t0 = time.perf_counter()
    sep = check_separation(disk20)
    assert sep.all_confirmed, "puncture set must certify at kappa = 1/2"
    assert lambda_sigma(0.5) == pytest.approx(1.0 - math.exp(-0.25), abs=0.0)
    rep = isolation_suite(disk20, 1000, seed=7)
    assert rep.refuted == 0
    for part in ("part1", "part2", "part3"):
        recs = [r for r in rep.records if r.note == part]
        assert recs, f"{part} produced no records"
        assert all(r.status != "refuted" for r in recs)
    announce(4, "isolation ball counts, 1000 trials per part, 0 violations",
             time.perf_counter() - t0, 30.0)


def test_criterion_05_close_pair_suite(disk20):
    t0 = time.perf_counter()
    rep = close_pair_suite(disk20, 200, seed=11)
    assert rep.refuted == 0
    assert rep.confirmed >= 0.9 * rep.trials
    if rep.inconclusive > 0:
        deeper = GraphParams(node_budget=320, refine_rounds=6)
        rep2 = close_pair_suite(disk20, 200, seed=11, graph=deeper)
        assert rep2.inconclusive < rep.inconclusive
    announce(5, "close-pair comparison vs (13/2) j, 200 configs, 0 refuted",
             time.perf_counter() - t0, 300.0)


def test_criterion_06_detour_bound_suite():
    t0 = time.perf_counter()
    counts = {1.0: 34, 2.0: 33, math.inf: 33}
    for p, n in counts.items():
        dom = Domain(NormSpec(2, p), Ball(np.zeros(2), 1.0))
        rep = detour_bound_suite(dom, n, seed=13)
        assert rep.refuted == 0, f"refutation at p={p}"
        assert rep.trials + rep.skipped == n
    announce(6, "puncture-sphere detour bound vs 2^9, 100 instances, 0 refuted",
             time.perf_counter() - t0, 300.0)


def test_criterion_07_distance_transfer(disk_base):
    t0 = time.perf_counter()
    rep = distance_transfer_suite(disk_base, 334, seed=17,
                                  cs=(2.0, 3.0, 10.0))
    assert len(rep.records) == 1002
    assert rep.refuted == 0
    announce(7, "boundary-distance transfer, 1000+ sampled triples, 0 violations",
             time.perf_counter() - t0, 1.0)


def test_criterion_08_minor_arc_quasiconvexity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(23)
    ps = [1.0, 1.5, 2.0, 3.0, math.inf]
    for trial in range(100):
        p = ps[trial % 5]
        dim = 2 + trial % 3
        space = NormSpec(dim, p)
        # random plane: orthonormalized Gaussian pair (random 2-subspace)
        g = rng.normal(size=(2, dim))
        g[0] /= np.linalg.norm(g[0])
        g[1] -= (g[1] @ g[0]) * g[0]
        g[1] /= np.linalg.norm(g[1])
        plane = PlaneBasis(g[0], g[1])
        center = rng.uniform(-1.0, 1.0, size=dim)
        radius = rng.uniform(0.25, 3.0)
        theta = rng.uniform(0.0, 2.0 * math.pi)
        span = rng.uniform(0.05, math.pi)
        arc = minor_arc(space, center, radius, plane, theta, theta + span,
                        4096)
        qc = quasiconvexity_constant(space, arc)
        assert qc <= 2.0 + 1e-3, f"qc={qc} at p={p}, dim={dim}"
    announce(8, "minor arcs 2-quasiconvex across p in {1,1.5,2,3,inf}, dims 2-4",
             time.perf_counter() - t0, 30.0)


def test_criterion_09_annulus_net_witness():
    t0 = time.perf_counter()
    rows = annulus_net_table(10, 14)
    assert [r.j for r in rows] == [10, 11, 12, 13, 14]
    for row in rows:
        assert row.covering_verified, f"covering failed at j={row.j}"
        assert row.k_lower_bound >= row.j
        assert row.t_j <= 6.0
    announce(9, "annulus nets j=10..14: bounded t_j, diverging lower bounds",
             time.perf_counter() - t0, 120.0)


def test_criterion_10_removability_forward(disk_base, disk20):
    t0 = time.perf_counter()
    uni = uniformity_profile(disk_base, 1000, seed=29)
    assert uni.max_ratio <= 2.0, f"gauge pre-validation failed: {uni.max_ratio}"
    psi = PsiSpec.parametric(2.0, 1.0)
    rep = removability_forward_suite(disk20, psi, 500, seed=31,
                                     validate_base=True, base_pairs=500)
    assert rep.refuted == 0
    announce(10, "forward transfer vs 2^12 psi(t_G), 500 pairs, 0 refuted",
             time.perf_counter() - t0, 300.0)


def test_criterion_11_removability_backward(disk20):
    t0 = time.perf_counter()
    rep, psi1 = removability_backward_suite(disk20, 500, seed=37,
                                            envelope_pairs=500)
    assert rep.refuted == 0
    assert psi1.is_tabulated
    announce(11, "backward transfer vs 3 psi1(2^7 t_D), 500 pairs, 0 refuted",
             time.perf_counter() - t0, 300.0)


def test_criterion_12_byte_determinism(disk20_scenario, tmp_path):
    t0 = time.perf_counter()
    previous = os.environ.get("QH_THREADS")
    blobs = []
    try:
        for threads in ("1", "8", "1"):
            os.environ["QH_THREADS"] = threads
            j = tmp_path / f"det-{threads}-{len(blobs)}.json"
            c = tmp_path / f"det-{threads}-{len(blobs)}.csv"
            assert main(["profile", "--scenario", disk20_scenario,
                         "--mode", "psi", "--pairs", "24",
                         "--json", str(j), "--csv", str(c)]) == 0
            blobs.append((j.read_bytes(), c.read_bytes()))
    finally:
        if previous is None:
            os.environ.pop("QH_THREADS", None)
        else:
            os.environ["QH_THREADS"] = previous
    assert blobs[0] == blobs[1] == blobs[2]
    announce(12, "byte-identical JSON/CSV under QH_THREADS in {1, 8}",
             time.perf_counter() - t0, 300.0)
