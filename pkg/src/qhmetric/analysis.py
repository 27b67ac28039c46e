"""Verification suites over the bracket engine.

Contents: puncture-separation checking and generation, the puncture-isolation
ball counts (suite 31), the near-puncture metric comparison (32), the
puncture-sphere detour bound (33), the clearance-ratio path transfer (34), the
boundary-distance transfer arithmetic (35), psi-uniformity and uniformity
profilers, gauge admissibility and rescaling, removability transfer checks in
both directions, double-cone arc evaluation, and the annulus-net witness
family showing bounded distance ratios with diverging distances.

Every suite is deterministic for a fixed seed: trial seeds derive from
(suite seed, trial index) and reports aggregate order-independently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from .domains import (Ball, Domain, GeometryError, HalfSpace, PunctureSet,
                      WholeSpace, dist_boundary_base, dist_puncture,
                      lambda_sigma)
from .normed_space import NormSpec, Polyline, Vector, norm_many
from .parallel import parallel_map
from .qh_metric import (DistanceBracket, GraphParams, k_bracket, k_lower,
                        j_metric, k_upper_direct, near_geodesic)
from .quadrature import (CertificationError, QuadratureParams, certify_segments,
                         polyline_qh_length)
from .sampling import (LowDiscrepancy, derive_seed, points_in_domain,
                       unit_cube_points, unit_directions)

CONFIRMED = "confirmed"
INCONCLUSIVE = "inconclusive"
REFUTED = "refuted"
PARTIAL = "partial"
SKIPPED = "skipped"


class PlacementError(RuntimeError):
    """Could not construct a feasible instance within the attempt budget."""


class CoveringError(RuntimeError):
    """An annulus net failed its certified covering check."""


class GaugeRangeError(ValueError):
    """A tabulated gauge was evaluated beyond its sampled range."""


# ---------------------------------------------------------------------------
# gauge functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PsiSpec:
    """Monotone gauge: parametric a*log(1 + b t) or a tabulated step envelope."""

    a: float = 1.0
    b: float = 1.0
    t_edges: np.ndarray | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.t_edges is None:
            if not (self.a > 0.0 and self.b > 0.0):
                raise ValueError("parametric gauge needs positive coefficients")
        else:
            edges = np.asarray(self.t_edges, dtype=float)
            vals = np.asarray(self.values, dtype=float)
            if edges.ndim != 1 or edges.shape != vals.shape or len(edges) == 0:
                raise ValueError("tabulated gauge needs matching 1-d arrays")
            if np.any(np.diff(edges) <= 0.0) or np.any(edges <= 0.0):
                raise ValueError("tabulated edges must be positive and increasing")
            if np.any(np.diff(vals) < 0.0) or np.any(vals < 0.0):
                raise ValueError("tabulated values must be non-decreasing")
            edges = edges.copy(); edges.flags.writeable = False
            vals = vals.copy(); vals.flags.writeable = False
            object.__setattr__(self, "t_edges", edges)
            object.__setattr__(self, "values", vals)

    @classmethod
    def parametric(cls, a: float, b: float = 1.0) -> "PsiSpec":
        return cls(a=a, b=b)

    @classmethod
    def tabulated(cls, t_edges, values) -> "PsiSpec":
        return cls(a=1.0, b=1.0, t_edges=t_edges, values=values)

    @property
    def is_tabulated(self) -> bool:
        return self.t_edges is not None

    @property
    def t_max(self) -> float:
        return float(self.t_edges[-1]) if self.is_tabulated else math.inf

    def in_range(self, t: float) -> bool:
        return 0.0 <= t <= self.t_max

    def __call__(self, t: float) -> float:
        if t < 0.0:
            raise ValueError("gauge argument must be nonnegative")
        if t == 0.0:
            return 0.0
        if not self.is_tabulated:
            return self.a * math.log1p(self.b * t)
        if t > self.t_max:
            raise GaugeRangeError(
                f"t={t:.6g} beyond tabulated range {self.t_max:.6g}")
        idx = int(np.searchsorted(self.t_edges, t, side="left"))
        return float(self.values[idx])

    def scaled(self, a1: float, a2: float) -> "PsiSpec":
        """The gauge t -> a1 * psi(a2 * t)."""
        if not (a1 > 0.0 and a2 > 0.0):
            raise ValueError("equivalence constants must be positive")
        if not self.is_tabulated:
            return PsiSpec.parametric(a1 * self.a, a2 * self.b)
        return PsiSpec.tabulated(self.t_edges / a2, a1 * self.values)


def psi_admissible(psi: PsiSpec, grid: np.ndarray) -> bool:
    """Check psi(t) >= log(1+t) on a positive grid (within round-off)."""
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0.0):
        raise ValueError("admissibility grid must be strictly positive")
    for t in grid:
        if not psi.in_range(float(t)):
            continue
        if psi(float(t)) < math.log1p(float(t)) - 1e-12:
            return False
    return True


@dataclass(frozen=True)
class RoundtripReport:
    max_abs_residual: float
    worst_t: float
    consistent: bool


def equivalence_apply(psi: PsiSpec, a1: float, a2: float, a3: float, a4: float,
                      grid: np.ndarray | None = None,
                      tol: float = 1e-9) -> tuple[PsiSpec, RoundtripReport]:
    """Produce psi1(t) = a1 psi(a2 t) and report how well psi(t) = a3 psi1(a4 t)
    closes on a grid.  The two relations need not close exactly for arbitrary
    gauges; the residuals are reported, not asserted.
    """
    for c in (a1, a2, a3, a4):
        if not (c > 0.0):
            raise ValueError("equivalence constants must be positive")
    psi1 = psi.scaled(a1, a2)
    if grid is None:
        grid = np.geomspace(1e-3, 1e3, 49)
    worst = 0.0
    worst_t = float(grid[0])
    for t in np.asarray(grid, dtype=float):
        t = float(t)
        inner = a2 * a4 * t
        if not (psi.in_range(t) and psi.in_range(inner)):
            continue
        resid = abs(psi(t) - a3 * a1 * psi(inner))
        if resid > worst:
            worst, worst_t = resid, t
    return psi1, RoundtripReport(worst, worst_t, worst <= tol)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairRecord:
    i: int
    j: int
    lower: float
    upper: float
    status: str


@dataclass(frozen=True)
class SeparationReport:
    kappa: float
    pairs: list[PairRecord]
    verdict: str

    @property
    def all_confirmed(self) -> bool:
        return self.verdict == CONFIRMED


@dataclass(frozen=True)
class TrialRecord:
    index: int
    status: str
    lhs: float
    rhs: float
    note: str = ""


@dataclass(frozen=True)
class CheckReport:
    suite: str
    trials: int
    confirmed: int
    inconclusive: int
    refuted: int
    skipped: int
    worst_slack: float
    records: list[TrialRecord] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return self.refuted == 0


def _aggregate(suite: str, records: list[TrialRecord]) -> CheckReport:
    counts = {CONFIRMED: 0, INCONCLUSIVE: 0, REFUTED: 0, SKIPPED: 0, PARTIAL: 0}
    worst = math.inf
    for rec in records:
        counts[rec.status] = counts.get(rec.status, 0) + 1
        if rec.status in (CONFIRMED, PARTIAL):
            worst = min(worst, rec.rhs - rec.lhs)
    return CheckReport(
        suite=suite,
        trials=len(records) - counts[SKIPPED],
        confirmed=counts[CONFIRMED] + counts[PARTIAL],
        inconclusive=counts[INCONCLUSIVE],
        refuted=counts[REFUTED],
        skipped=counts[SKIPPED],
        worst_slack=worst if math.isfinite(worst) else 0.0,
        records=records,
    )


# ---------------------------------------------------------------------------
# pair and point samplers
# ---------------------------------------------------------------------------


def _push_to_clearance(domain: Domain, x: np.ndarray, eps: float) -> np.ndarray:
    """Move x so its base clearance is roughly eps (boundary-hugging samples)."""
    base = domain.base
    if isinstance(base, Ball):
        v = x - base.center
        nv = float(norm_many(domain.space, v[None, :])[0])
        if nv == 0.0:
            v = np.zeros_like(x); v[0] = 1.0; nv = 1.0
        return base.center + (base.radius - eps) * v / nv
    if isinstance(base, HalfSpace):
        nrm = base.normal
        q = domain.space.dual_exponent
        nq = float(norm_many(NormSpec(domain.space.dim, q), nrm[None, :])[0])
        # clearance is (offset - n.x)/|n|_q; slide along n to hit eps
        cur = (base.offset - float(nrm @ x)) / nq
        return x + (cur - eps) * nrm / float(nrm @ nrm) * nq
    return x


def sample_pairs(domain: Domain, n: int, seed: int,
                 clearance_floor: float = 1e-4) -> np.ndarray:
    """Deterministic mixed pair sampler: bulk, boundary-hugging, puncture-
    adjacent, and short-range pairs; returns an (n, 2, dim) array."""
    if n < 1:
        raise ValueError("pair count must be >= 1")
    scale = domain.scale
    floor = clearance_floor * scale
    dim = domain.space.dim
    pts = points_in_domain(domain, 2 * n + 8, derive_seed(seed, 1),
                           min_clearance=floor)
    u = unit_cube_points(4, n, derive_seed(seed, 2))
    dirs = unit_directions(domain.space, n, derive_seed(seed, 3))
    has_boundary = not isinstance(domain.base, WholeSpace)
    has_punct = len(domain.punctures) > 0
    pairs = np.empty((n, 2, dim))
    for i in range(n):
        z1 = pts[2 * i]
        z2 = pts[2 * i + 1]
        mode = u[i, 0]
        if mode < 0.2 and has_boundary:
            eps1 = scale * (0.05 + 0.15 * u[i, 1])
            eps2 = scale * (0.05 + 0.15 * u[i, 2])
            z1 = _push_to_clearance(domain, z1, eps1)
            z2 = _push_to_clearance(domain, z2, eps2)
        elif mode < 0.4 and has_punct:
            pi = int(u[i, 1] * len(domain.punctures)) % len(domain.punctures)
            anchor = domain.punctures.points[pi]
            local = float(domain.base_clearance_many(anchor[None, :])[0])
            if not math.isfinite(local):
                local = scale
            rad = local * (0.02 + 0.4 * u[i, 2])
            z1 = anchor + rad * dirs[i]
        elif mode < 0.5:
            d1 = float(domain.clearance_many(z1[None, :])[0])
            z2 = z1 + (0.1 + 1.5 * u[i, 3]) * d1 * dirs[i]
        good = domain.clearance_many(np.stack([z1, z2])) > floor
        if not good[0]:
            z1 = pts[2 * i]
        if not good[1]:
            z2 = pts[2 * i + 1]
        pairs[i, 0] = z1
        pairs[i, 1] = z2
    return pairs


# ---------------------------------------------------------------------------
# separation condition
# ---------------------------------------------------------------------------


def check_separation(domain: Domain, kappa: float | None = None,
                     graph: GraphParams | None = None,
                     quad: QuadratureParams | None = None) -> SeparationReport:
    """Bracket the pairwise quasihyperbolic distances of the punctures in the
    unpunctured base domain and compare against the separation level."""
    if len(domain.punctures) == 0:
        raise ValueError("separation check needs a nonempty puncture set")
    if isinstance(domain.base, WholeSpace):
        raise ValueError("separation is relative to a proper base domain")
    kappa = domain.punctures.kappa if kappa is None else float(kappa)
    base = domain.without_punctures()
    graph = graph or GraphParams(node_budget=400)
    quad = quad or QuadratureParams()
    pts = domain.punctures.points
    idx_pairs = [(i, j) for i in range(len(pts)) for j in range(i + 1, len(pts))]

    def one(pair):
        i, j = pair
        # cheap certified bounds decide almost every pair without a graph
        lower = k_lower(base, pts[i], pts[j])
        upper = k_upper_direct(base, pts[i], pts[j], quad)
        upper = math.inf if upper is None else upper
        if not (lower >= kappa or upper < kappa):
            br = k_bracket(base, pts[i], pts[j], graph, quad)
            lower, upper = br.lower, br.upper
        if lower >= kappa:
            status = CONFIRMED
        elif upper < kappa:
            status = REFUTED
        else:
            status = INCONCLUSIVE
        return PairRecord(i, j, lower, upper, status)

    records = parallel_map(one, idx_pairs)
    if all(r.status == CONFIRMED for r in records):
        verdict = CONFIRMED
    elif any(r.status == REFUTED for r in records):
        verdict = REFUTED
    else:
        verdict = INCONCLUSIVE
    return SeparationReport(kappa, records, verdict)


def generate_separated_punctures(domain: Domain, kappa: float, count: int,
                                 seed: int, max_attempts: int | None = None
                                 ) -> PunctureSet:
    """Greedy rejection sampling of punctures with pairwise j >= kappa in the
    base domain (j lower-bounds the quasihyperbolic distance, so the set is
    certified separated by construction)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    base = domain.without_punctures() if len(domain.punctures) else domain
    if isinstance(base.base, WholeSpace):
        raise ValueError("separated generation needs a proper base domain")
    max_attempts = max_attempts or max(2000, 600 * count)
    floor = 0.02 * base.scale
    candidates = points_in_domain(base, max_attempts, derive_seed(seed, 7),
                                  min_clearance=floor)
    accepted: list[np.ndarray] = []
    for cand in candidates:
        ok = True
        for prev in accepted:
            if j_metric(base, cand, prev) < kappa:
                ok = False
                break
        if ok:
            accepted.append(cand)
            if len(accepted) == count:
                return PunctureSet(np.stack(accepted), kappa)
    raise PlacementError(
        f"could only place {len(accepted)} of {count} punctures at kappa={kappa}")


# ---------------------------------------------------------------------------
# suite 31: isolation ball counts
# ---------------------------------------------------------------------------


def _near_puncture_point(domain: Domain, lam: float, trial_seed: int,
                         attempts: int = 60) -> np.ndarray | None:
    """A point x in G with d_G(x) < lam * d_D(x), built next to a puncture."""
    if len(domain.punctures) == 0:
        return None
    punct = domain.punctures.points
    dirs = unit_directions(domain.space, attempts, derive_seed(trial_seed, 11))
    fracs = unit_cube_points(1, attempts, derive_seed(trial_seed, 12))[:, 0]
    for a in range(attempts):
        anchor = punct[a % len(punct)]
        dd_anchor = float(domain.base_clearance_many(anchor[None, :])[0])
        if not math.isfinite(dd_anchor):
            dd_anchor = domain.scale
        rad = lam * dd_anchor * (0.05 + 0.85 * fracs[a]) * 0.9
        x = anchor + rad * dirs[a]
        dd = float(domain.base_clearance_many(x[None, :])[0])
        if dd <= 0.0:
            continue
        dg = float(domain.clearance_many(x[None, :])[0])
        if 0.0 < dg < lam * dd:
            return x
    return None


def isolation_suite(domain: Domain, trials: int, seed: int,
                    kappa: float | None = None) -> CheckReport:
    """Ball counts around separated punctures (suite id 31).

    Part 1: open balls of radius lam*d_D(x), lam below the isolation
    threshold, contain at most one puncture.  Part 2: exactly one when x is
    relatively close to the set.  Part 3: for lam <= 1/16 the nearest
    puncture is constant on the closed d_D(x)/16 ball and realizes d_G.
    """
    if isinstance(domain.base, WholeSpace):
        raise ValueError("isolation counts need a proper base domain")
    kappa = domain.punctures.kappa if kappa is None else float(kappa)
    lam_max = lambda_sigma(kappa)
    punct = domain.punctures.points
    records: list[TrialRecord] = []

    xs = points_in_domain(domain.without_punctures(), trials,
                          derive_seed(seed, 31, 1),
                          min_clearance=1e-6 * domain.scale)
    lams = unit_cube_points(1, trials, derive_seed(seed, 31, 2))[:, 0]

    def count_in_ball(x: np.ndarray, lam: float) -> int:
        dd = float(domain.base_clearance_many(x[None, :])[0])
        if len(punct) == 0:
            return 0
        d = norm_many(domain.space, punct - x[None, :])
        return int(np.count_nonzero(d < lam * dd))

    # part 1
    for t in range(trials):
        lam = lam_max * (1e-6 + (1.0 - 2e-6) * lams[t])
        c = count_in_ball(xs[t], lam)
        records.append(TrialRecord(t, CONFIRMED if c <= 1 else REFUTED,
                                   float(c), 1.0, "part1"))

    # part 2: conditioned on d_G/d_D < lam
    for t in range(trials):
        if len(punct) == 0:
            records.append(TrialRecord(t, SKIPPED, 0.0, 0.0, "part2"))
            continue
        lam = lam_max * (0.05 + 0.9 * lams[t])
        x = _near_puncture_point(domain, lam, derive_seed(seed, 31, 3, t))
        if x is None:
            records.append(TrialRecord(t, SKIPPED, 0.0, 0.0, "part2"))
            continue
        c = count_in_ball(x, lam)
        records.append(TrialRecord(t, CONFIRMED if c == 1 else REFUTED,
                                   float(c), 1.0, "part2"))

    # part 3: nearest-puncture constancy on the closed d_D/16 ball
    u3 = unit_cube_points(2, trials, derive_seed(seed, 31, 4))
    for t in range(trials):
        if len(punct) == 0:
            records.append(TrialRecord(t, SKIPPED, 0.0, 0.0, "part3"))
            continue
        lam = (1.0 / 16.0) * (0.05 + 0.95 * u3[t, 0])
        x = _near_puncture_point(domain, lam, derive_seed(seed, 31, 5, t))
        if x is None:
            records.append(TrialRecord(t, SKIPPED, 0.0, 0.0, "part3"))
            continue
        dd = float(domain.base_clearance_many(x[None, :])[0])
        _, i0 = dist_puncture(domain, x)
        dirs = unit_directions(domain.space, 8, derive_seed(seed, 31, 6, t))
        radii = (dd / 16.0) * (u3[t, 1] + np.arange(8)) / 8.0
        ok = True
        worst = math.inf
        for m in range(8):
            z = x + radii[m] * dirs[m]
            dz = norm_many(domain.space, punct - z[None, :])
            i_near = int(np.argmin(dz))
            base_clear = float(domain.base_clearance_many(z[None, :])[0])
            realizes = dz[i_near] <= base_clear + 1e-12 * domain.scale
            if i_near != i0 or not realizes:
                ok = False
            worst = min(worst, float(dz[i0] - dz[i_near]))
        records.append(TrialRecord(t, CONFIRMED if ok else REFUTED,
                                   0.0 if ok else 1.0, 0.5, "part3"))
    return _aggregate("31", records)


# ---------------------------------------------------------------------------
# suite 32: near-puncture comparison k_G <= (13/2) j_G
# ---------------------------------------------------------------------------


def close_pair_suite(domain: Domain, trials: int, seed: int,
                     graph: GraphParams | None = None,
                     quad: QuadratureParams | None = None,
                     mu_range: tuple[float, float] = (1e-4, 1.0 / 32.0),
                     refine_factor: int = 2) -> CheckReport:
    """Close pairs straddling a puncture: upper bracket against (13/2) j."""
    if len(domain.punctures) == 0:
        raise ValueError("suite 32 needs punctures")
    if isinstance(domain.base, WholeSpace):
        raise ValueError("suite 32 needs a proper base domain")
    graph = graph or GraphParams(node_budget=320)
    quad = quad or QuadratureParams()
    scale = domain.scale
    punct = domain.punctures.points
    rhs_factor = 13.0 / 2.0

    def one(t: int) -> TrialRecord:
        ts = derive_seed(seed, 32, t)
        u = unit_cube_points(4, 1, ts)[0]
        mu = math.exp(math.log(mu_range[0])
                      + u[0] * (math.log(mu_range[1]) - math.log(mu_range[0])))
        dirs = unit_directions(domain.space, 2, derive_seed(ts, 1))
        for attempt in range(50):
            pi = (t + attempt) % len(punct)
            anchor = punct[pi]
            dd_anchor = float(domain.base_clearance_many(anchor[None, :])[0])
            if not math.isfinite(dd_anchor):
                dd_anchor = scale
            if dd_anchor < 0.05 * scale:
                continue
            w1 = anchor + (mu / 2.0) * dd_anchor * (0.3 + 0.6 * u[1]) * dirs[0]
            dd1 = float(domain.base_clearance_many(w1[None, :])[0])
            dg1 = float(domain.clearance_many(w1[None, :])[0])
            if dd1 < 0.05 * scale or dg1 <= 0.0 or dg1 > (mu / 2.0) * dd1:
                continue
            w2 = w1 + u[2] * mu * dd1 * dirs[1]
            dg2 = float(domain.clearance_many(w2[None, :])[0])
            if dg2 <= 0.0:
                continue
            dist = float(norm_many(domain.space, (w2 - w1)[None, :])[0])
            if dist > mu * dd1:
                continue
            jg = j_metric(domain, w1, w2)
            rhs = rhs_factor * jg
            if dist == 0.0:
                return TrialRecord(t, CONFIRMED, 0.0, 0.0, "coincident")
            br = k_bracket(domain, w1, w2, graph, quad)
            if br.upper <= rhs:
                return TrialRecord(t, CONFIRMED, br.upper, rhs, f"mu={mu:.3g}")
            if br.lower > rhs:
                return TrialRecord(t, REFUTED, br.lower, rhs, f"mu={mu:.3g}")
            deeper = replace(graph,
                             refine_rounds=graph.refine_rounds * refine_factor,
                             node_budget=graph.node_budget * refine_factor)
            br = k_bracket(domain, w1, w2, deeper, quad)
            if br.upper <= rhs:
                return TrialRecord(t, CONFIRMED, br.upper, rhs, f"mu={mu:.3g}")
            if br.lower > rhs:
                return TrialRecord(t, REFUTED, br.lower, rhs, f"mu={mu:.3g}")
            return TrialRecord(t, INCONCLUSIVE, br.upper, rhs, f"mu={mu:.3g}")
        return TrialRecord(t, SKIPPED, 0.0, 0.0, "no feasible config")

    return _aggregate("32", parallel_map(one, range(trials)))


# ---------------------------------------------------------------------------
# suite 33: puncture-sphere detour bound k_G <= 2^9 k_D
# ---------------------------------------------------------------------------


def detour_bound_suite(domain: Domain, trials: int, seed: int,
                       graph: GraphParams | None = None,
                       quad: QuadratureParams | None = None) -> CheckReport:
    """Instances with one puncture at exactly d_D(w1)/128 and w2 on the
    d_D(w1)/32 sphere; upper bracket in G against 2^9 times the base lower."""
    if isinstance(domain.base, WholeSpace):
        raise ValueError("suite 33 needs a proper base domain")
    graph = graph or GraphParams(node_budget=320)
    quad = quad or QuadratureParams()
    base = domain.without_punctures()
    scale = domain.scale
    existing = domain.punctures

    def one(t: int) -> TrialRecord:
        ts = derive_seed(seed, 33, t)
        xs = points_in_domain(base, 40, ts, min_clearance=0.25 * scale)
        dirs = unit_directions(domain.space, 80, derive_seed(ts, 1))
        for attempt in range(40):
            w1 = xs[attempt % len(xs)]
            dd1 = dist_boundary_base(base, w1)
            if len(existing):
                gap = float(norm_many(domain.space,
                                      existing.points - w1[None, :]).min())
                if gap < dd1 / 16.0:
                    continue
            aux = w1 + (dd1 / 128.0) * dirs[2 * attempt]
            pts = np.concatenate([existing.points, aux[None, :]], axis=0) \
                if len(existing) else aux[None, :]
            try:
                punct = PunctureSet(pts, existing.kappa)
                inst = Domain(domain.space, domain.base, punct)
            except ValueError:
                continue
            if len(pts) > 1:
                jmin = math.inf
                for i in range(len(pts) - 1):
                    jmin = min(jmin, float(min(
                        j_metric(base, pts[i], pts[k])
                        for k in range(i + 1, len(pts)))))
                if jmin < existing.kappa:
                    continue
            dg1 = float(inst.clearance_many(w1[None, :])[0])
            if abs(dg1 - dd1 / 128.0) > 1e-9 * dd1:
                continue
            w2 = w1 + (dd1 / 32.0) * dirs[2 * attempt + 1]
            if float(inst.clearance_many(w2[None, :])[0]) <= 0.0:
                continue
            br_g = k_bracket(inst, w1, w2, graph, quad)
            br_d = k_bracket(base, w1, w2, graph, quad)
            rhs_conf = 512.0 * br_d.lower
            if br_g.upper <= rhs_conf:
                return TrialRecord(t, CONFIRMED, br_g.upper, rhs_conf, "")
            if br_g.lower > 512.0 * br_d.upper:
                return TrialRecord(t, REFUTED, br_g.lower, 512.0 * br_d.upper, "")
            return TrialRecord(t, INCONCLUSIVE, br_g.upper, rhs_conf, "")
        return TrialRecord(t, SKIPPED, 0.0, 0.0, "construction infeasible")

    return _aggregate("33", parallel_map(one, range(trials)))


# ---------------------------------------------------------------------------
# suite 34: clearance-ratio path transfer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathTransferVerdict:
    status: str            # confirmed | partial | refuted
    length_g: float
    length_d: float
    endpoint_rhs: float | None
    hypothesis_ok: bool


def _certify_clearance_ratio(domain: Domain, base: Domain, pts: np.ndarray,
                             ratio: float = 1.0 / 128.0,
                             max_doublings: int = 14) -> bool:
    """Certify d_G >= ratio * d_D along a polyline via Lipschitz margins."""
    lip = 1.0 + ratio
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        L = float(norm_many(domain.space, (b - a)[None, :])[0])
        decided = False
        for level in range(max_doublings + 1):
            k = 2 ** level
            s = np.linspace(0.0, 1.0, k + 1)
            z = a[None, :] + s[:, None] * (b - a)[None, :]
            margin = (L / k) / 2.0 * lip
            f = domain.clearance_many(z) - ratio * base.clearance_many(z)
            if np.any(f < 0.0):
                return False
            if np.all(f > margin):
                decided = True
                break
        if not decided:
            return False
    return True


def path_transfer_check(domain: Domain, path: Polyline,
                        quad: QuadratureParams | None = None,
                        endpoint_lower_base: float | None = None
                        ) -> PathTransferVerdict:
    """Check the 128x pathwise length transfer for a path whose clearance in G
    never drops below d_D/128 (suite id 34).

    Confirmed needs the stronger endpoint inequality length_G <= 2^8 *
    endpoint_lower_base (supplied when the path came from a near-geodesic
    search); otherwise the pathwise inequality alone gives partial status.
    """
    quad = quad or QuadratureParams()
    base = domain.without_punctures()
    pts = path.vertices
    if not _certify_clearance_ratio(domain, base, pts):
        raise CertificationError(
            "clearance hypothesis d_G >= d_D/128 failed along the path")
    length_g, err_g = polyline_qh_length(domain, path, quad)
    length_d, err_d = polyline_qh_length(base, path, quad)
    pathwise_ok = length_g - err_g <= 128.0 * (length_d + err_d)
    status = REFUTED if not pathwise_ok else PARTIAL
    rhs = None
    if pathwise_ok and endpoint_lower_base is not None:
        rhs = 256.0 * endpoint_lower_base
        if length_g + err_g <= rhs:
            status = CONFIRMED
    return PathTransferVerdict(status, length_g, length_d, rhs,
                               hypothesis_ok=True)


def path_transfer_suite(domain: Domain, trials: int, seed: int,
                        graph: GraphParams | None = None,
                        quad: QuadratureParams | None = None) -> CheckReport:
    """Sampled pairs joined by 2-near-geodesics of the base domain, checked
    through path_transfer_check; hypothesis failures are gated out."""
    if isinstance(domain.base, WholeSpace):
        raise ValueError("suite 34 needs a proper base domain")
    graph = graph or GraphParams(node_budget=320)
    quad = quad or QuadratureParams()
    base = domain.without_punctures()
    pairs = sample_pairs(base, trials, derive_seed(seed, 34),
                         clearance_floor=5e-3)

    def one(t: int) -> TrialRecord:
        z1, z2 = pairs[t]
        if np.all(z1 == z2):
            return TrialRecord(t, SKIPPED, 0.0, 0.0, "coincident pair")
        try:
            ng = near_geodesic(base, z1, z2, 2.0, graph, quad)
        except (CertificationError, GeometryError):
            return TrialRecord(t, SKIPPED, 0.0, 0.0, "no witness path")
        if float(domain.clearance_many(ng.path.vertices).min()) <= 0.0:
            return TrialRecord(t, SKIPPED, 0.0, 0.0, "path meets a puncture")
        low_d = k_lower(base, z1, z2)
        try:
            verdict = path_transfer_check(domain, ng.path, quad, low_d)
        except CertificationError:
            return TrialRecord(t, SKIPPED, 0.0, 0.0, "hypothesis gated")
        rhs = verdict.endpoint_rhs if verdict.endpoint_rhs is not None \
            else 128.0 * verdict.length_d
        return TrialRecord(t, verdict.status, verdict.length_g, rhs, "")

    return _aggregate("34", parallel_map(one, range(trials)))


# ---------------------------------------------------------------------------
# suite 35: boundary-distance transfer arithmetic
# ---------------------------------------------------------------------------


def distance_transfer_check(dD_w1: float, dD_w2: float, dist: float,
                            c: float) -> bool:
    """dist >= d_D(w1)/c (c >= 2) implies dist >= d_D(w2)/(c+1)."""
    if c < 2.0:
        raise ValueError("c must be >= 2")
    if min(dD_w1, dD_w2, dist) < 0.0:
        raise ValueError("distances must be nonnegative")
    if abs(dD_w1 - dD_w2) > dist + 1e-9 * max(dD_w1, dD_w2, dist):
        raise ValueError("inputs violate the 1-Lipschitz consistency of d_D")
    if dist < dD_w1 / c:
        raise ValueError("hypothesis dist >= d_D(w1)/c not satisfied")
    return dist >= dD_w2 / (c + 1.0) - 1e-12 * max(dD_w2, 1.0)


def distance_transfer_suite(domain: Domain, trials: int, seed: int,
                            cs: tuple[float, ...] = (2.0, 3.0, 10.0)
                            ) -> CheckReport:
    """Sampled pairs from the base domain pushed through the arithmetic check."""
    base = domain.without_punctures() if len(domain.punctures) else domain
    pairs = sample_pairs(base, trials, derive_seed(seed, 35))
    records = []
    t_id = 0
    for t in range(trials):
        z1, z2 = pairs[t]
        dd1 = float(base.clearance_many(z1[None, :])[0])
        dd2 = float(base.clearance_many(z2[None, :])[0])
        dist = float(norm_many(domain.space, (z1 - z2)[None, :])[0])
        for c in cs:
            if dist < dd1 / c:
                records.append(TrialRecord(t_id, SKIPPED, dist, dd1 / c,
                                           f"c={c:g} hypothesis"))
            else:
                ok = distance_transfer_check(dd1, dd2, dist, c)
                records.append(TrialRecord(
                    t_id, CONFIRMED if ok else REFUTED,
                    dist, dd2 / (c + 1.0), f"c={c:g}"))
            t_id += 1
    return _aggregate("35", records)


# ---------------------------------------------------------------------------
# profilers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProfileSample:
    t: float
    k_low: float
    k_up: float
    j_val: float


@dataclass(frozen=True)
class ProfileResult:
    samples: list[ProfileSample]
    envelope: PsiSpec
    bin_edges: np.ndarray
    bin_values: np.ndarray


def _bracket_pair(domain: Domain, z1: np.ndarray, z2: np.ndarray,
                  graph: GraphParams, quad: QuadratureParams) -> DistanceBracket:
    return k_bracket(domain, z1, z2, graph, quad)


def psi_profile(domain: Domain, count: int, seed: int,
                graph: GraphParams | None = None,
                quad: QuadratureParams | None = None,
                bins: int = 64) -> ProfileResult:
    """Sampled (t, bracket) profile with a monotone empirical gauge envelope.

    The default graph target only tightens pairs whose straight-segment bound
    is far from the j floor, so upper values are upper-biased but certified.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    graph = graph or GraphParams(node_budget=320, target_ratio=1.85)
    quad = quad or QuadratureParams()
    pairs = sample_pairs(domain, count, derive_seed(seed, 55))

    def one(i: int) -> ProfileSample | None:
        z1, z2 = pairs[i]
        d1 = float(domain.clearance_many(z1[None, :])[0])
        d2 = float(domain.clearance_many(z2[None, :])[0])
        dist = float(norm_many(domain.space, (z1 - z2)[None, :])[0])
        if dist == 0.0:
            return None
        t = dist / min(d1, d2)
        br = _bracket_pair(domain, z1, z2, graph, quad)
        if not math.isfinite(br.upper):
            return None
        return ProfileSample(t, br.lower, br.upper, j_metric(domain, z1, z2))

    samples = [s for s in parallel_map(one, range(count)) if s is not None]
    if not samples:
        raise RuntimeError("profiling produced no usable samples")
    ts = np.array([s.t for s in samples])
    ups = np.array([s.k_up for s in samples])
    t_lo, t_hi = float(ts.min()), float(ts.max())
    if t_hi <= t_lo:
        t_hi = t_lo * (1.0 + 1e-9) + 1e-12
    edges = np.geomspace(max(t_lo, 1e-300), t_hi, bins + 1)[1:]
    edges[-1] = t_hi  # close the range exactly
    values = np.zeros(bins)
    which = np.searchsorted(edges, ts, side="left")
    which = np.clip(which, 0, bins - 1)
    for b in range(bins):
        sel = ups[which == b]
        values[b] = sel.max() if len(sel) else 0.0
    # monotone fill: running max, empty leading bins take the first value
    first = values[values > 0.0][0] if np.any(values > 0.0) else 0.0
    running = first
    for b in range(bins):
        running = max(running, values[b])
        values[b] = running
    envelope = PsiSpec.tabulated(edges, values)
    return ProfileResult(samples, envelope, edges, values)


@dataclass(frozen=True)
class UniformityResult:
    max_ratio: float
    fit_slope: float
    fit_intercept: float
    samples: list[ProfileSample]


def uniformity_profile(domain: Domain, count: int, seed: int,
                       graph: GraphParams | None = None,
                       quad: QuadratureParams | None = None) -> UniformityResult:
    """Max observed k_up/j and a least-squares affine majorant over samples."""
    prof = psi_profile(domain, count, seed, graph, quad)
    usable = [s for s in prof.samples if s.j_val > 0.0]
    if not usable:
        raise RuntimeError("no pairs with positive j")
    ratios = np.array([s.k_up / s.j_val for s in usable])
    js = np.array([s.j_val for s in usable])
    ups = np.array([s.k_up for s in usable])
    A = np.stack([js, np.ones_like(js)], axis=1)
    coef, *_ = np.linalg.lstsq(A, ups, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    intercept += float((ups - (slope * js + intercept)).max())
    return UniformityResult(float(ratios.max()), slope, intercept, usable)


# ---------------------------------------------------------------------------
# removability transfer checks
# ---------------------------------------------------------------------------


def removability_forward_suite(domain: Domain, psi: PsiSpec, pairs: int,
                               seed: int, graph: GraphParams | None = None,
                               quad: QuadratureParams | None = None,
                               validate_base: bool = True,
                               base_pairs: int = 500) -> CheckReport:
    """Punctured-domain brackets against 2^12 psi(t_G) (forward transfer)."""
    graph = graph or GraphParams(node_budget=320, target_ratio=4.0)
    quad = quad or QuadratureParams()
    if not psi_admissible(psi, np.geomspace(1e-3, 1e3, 61)):
        raise ValueError("gauge fails the log(1+t) admissibility floor")
    if validate_base:
        base = domain.without_punctures()
        # the validation needs tight uppers, not the loose forward-loop target
        prof = psi_profile(base, base_pairs, derive_seed(seed, 61), None, quad)
        for s in prof.samples:
            if psi.in_range(s.t) and s.k_up > psi(s.t) * (1.0 + 1e-9) + 1e-12:
                raise ValueError(
                    f"base domain is not empirically psi-uniform at t={s.t:.4g}")
    pair_arr = sample_pairs(domain, pairs, derive_seed(seed, 62))
    factor = 2.0 ** 12

    def one(i: int) -> TrialRecord:
        z1, z2 = pair_arr[i]
        d1 = float(domain.clearance_many(z1[None, :])[0])
        d2 = float(domain.clearance_many(z2[None, :])[0])
        dist = float(norm_many(domain.space, (z1 - z2)[None, :])[0])
        if dist == 0.0:
            return TrialRecord(i, CONFIRMED, 0.0, 0.0, "coincident")
        t = dist / min(d1, d2)
        if not psi.in_range(t):
            return TrialRecord(i, INCONCLUSIVE, 0.0, 0.0, "t beyond gauge range")
        rhs = factor * psi(t)
        br = k_bracket(domain, z1, z2, graph, quad)
        if br.upper <= rhs:
            return TrialRecord(i, CONFIRMED, br.upper, rhs, "")
        if br.lower > rhs:
            return TrialRecord(i, REFUTED, br.lower, rhs, "")
        deeper = replace(graph, refine_rounds=graph.refine_rounds * 2,
                         node_budget=graph.node_budget * 2)
        br = k_bracket(domain, z1, z2, deeper, quad)
        if br.upper <= rhs:
            return TrialRecord(i, CONFIRMED, br.upper, rhs, "refined")
        if br.lower > rhs:
            return TrialRecord(i, REFUTED, br.lower, rhs, "refined")
        return TrialRecord(i, INCONCLUSIVE, br.upper, rhs, "")

    return _aggregate("theorem-forward", parallel_map(one, range(pairs)))


def removability_backward_suite(domain: Domain, pairs: int, seed: int,
                                graph: GraphParams | None = None,
                                quad: QuadratureParams | None = None,
                                envelope_pairs: int = 500
                                ) -> tuple[CheckReport, PsiSpec]:
    """Base-domain brackets against 3 psi1(2^7 t_D) with psi1 the empirical
    envelope of the punctured domain (backward transfer)."""
    graph = graph or GraphParams(node_budget=320, target_ratio=2.5)
    quad = quad or QuadratureParams()
    base = domain.without_punctures()
    prof = psi_profile(domain, envelope_pairs, derive_seed(seed, 63), graph, quad)
    psi1 = prof.envelope
    pair_arr = sample_pairs(base, pairs, derive_seed(seed, 64))

    def one(i: int) -> TrialRecord:
        z1, z2 = pair_arr[i]
        d1 = float(base.clearance_many(z1[None, :])[0])
        d2 = float(base.clearance_many(z2[None, :])[0])
        dist = float(norm_many(domain.space, (z1 - z2)[None, :])[0])
        if dist == 0.0:
            return TrialRecord(i, CONFIRMED, 0.0, 0.0, "coincident")
        t = dist / min(d1, d2)
        arg = (2.0 ** 7) * t
        if not psi1.in_range(arg):
            return TrialRecord(i, INCONCLUSIVE, 0.0, 0.0, "range")
        rhs = 3.0 * psi1(arg)
        br = k_bracket(base, z1, z2, graph, quad)
        if br.upper <= rhs:
            return TrialRecord(i, CONFIRMED, br.upper, rhs, "")
        if br.lower > rhs:
            return TrialRecord(i, REFUTED, br.lower, rhs, "")
        return TrialRecord(i, INCONCLUSIVE, br.upper, rhs, "")

    return _aggregate("theorem-backward", parallel_map(one, range(pairs))), psi1


# ---------------------------------------------------------------------------
# double-cone arcs
# ---------------------------------------------------------------------------


def double_cone_check(domain: Domain, path: Polyline,
                      c: float) -> tuple[bool, float]:
    """Least c at vertex resolution for the two cone conditions, plus verdict.

    Condition (1): min arm length to either endpoint <= c * clearance at each
    vertex; condition (2): total length <= c * endpoint distance.
    """
    pts = path.vertices
    ok = certify_segments(domain, pts[:-1], pts[1:])
    if not np.all(ok):
        raise CertificationError("path exits the domain")
    space = domain.space
    seg = norm_many(space, np.diff(pts, axis=0))
    prefix = np.concatenate([[0.0], np.cumsum(seg)])
    total = float(prefix[-1])
    chord = float(norm_many(space, (pts[-1] - pts[0])[None, :])[0])
    if chord == 0.0:
        raise ValueError("path endpoints coincide")
    clear = domain.clearance_many(pts)
    arms = np.minimum(prefix, total - prefix)
    with np.errstate(divide="ignore"):
        cone1 = float(np.max(arms / clear))
    cone2 = total / chord
    minimal = max(cone1, cone2, 1.0)
    return minimal <= c, minimal


# ---------------------------------------------------------------------------
# annulus-net witnesses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnnulusNetInstance:
    """Dense net in the annulus between radii r and 21r/20 plus probe points."""

    r: float
    j: int
    net: PunctureSet
    a: np.ndarray
    b: np.ndarray
    covering_target: float
    covering_radius_bound: float
    covering_verified: bool
    d_a: float
    d_b: float

    @property
    def domain(self) -> Domain:
        return Domain(NormSpec(2, 2.0), WholeSpace(), self.net)


def build_annulus_net(r: float, j: int,
                      probe_factor: int = 200) -> AnnulusNetInstance:
    """Polar-grid net with certified covering radius below r/(20 j).

    The probe grid is an order denser than the target covering radius, and
    the 1-Lipschitz margin turns the sampled maximum into a certified bound
    on sup_A d(z, net).
    """
    if j < 10:
        raise ValueError("j must be >= 10")
    if not (r > 0.0):
        raise ValueError("r must be positive")
    r_in, r_out = r, 1.05 * r
    target = r / (20.0 * j)

    def polar_grid(spacing: float, inset: float) -> np.ndarray:
        n_rad = max(2, math.ceil((r_out - r_in) / spacing) + 1)
        radii = np.linspace(r_in + inset, r_out - inset, n_rad)
        n_ang = max(8, math.ceil(2.0 * math.pi * r_out / spacing))
        ang = 2.0 * math.pi * np.arange(n_ang) / n_ang
        rr, aa = np.meshgrid(radii, ang, indexing="ij")
        return np.stack([(rr * np.cos(aa)).ravel(), (rr * np.sin(aa)).ravel()],
                        axis=1)

    net_pts = polar_grid(target, inset=target * 0.05)
    tree = cKDTree(net_pts)

    probe_spacing = r / (probe_factor * j)
    margin = probe_spacing * math.sqrt(2.0) / 2.0
    probes = polar_grid(probe_spacing, inset=0.0)
    worst = 0.0
    chunk = 200_000
    for start in range(0, len(probes), chunk):
        d, _ = tree.query(probes[start:start + chunk], k=1)
        worst = max(worst, float(d.max()))
    bound = worst + margin
    verified = bound < target

    a = np.array([1.1 * r, 0.0])
    b = np.array([0.9 * r, 0.0])
    d_a = float(tree.query(a[None, :], k=1)[0][0])
    d_b = float(tree.query(b[None, :], k=1)[0][0])
    return AnnulusNetInstance(r, j, PunctureSet(net_pts, kappa=0.5), a, b,
                              target, bound, verified, d_a, d_b)


def annulus_net_lower_bound(instance: AnnulusNetInstance) -> float:
    """Certified lower bound on the punctured-plane distance from a to b.

    Every curve between the probe points crosses the annulus, accruing
    quasihyperbolic length at least (width r/20) / sup_A d(z, net); the sup is
    bounded by the certified covering radius.
    """
    if not instance.covering_verified:
        raise CoveringError("covering not verified; the bound would be unsound")
    return (instance.r / 20.0) / instance.covering_radius_bound


@dataclass(frozen=True)
class AnnulusNetRow:
    j: int
    r: float
    net_size: int
    covering_verified: bool
    covering_radius_bound: float
    t_j: float
    k_lower_bound: float


def annulus_net_table(j_min: int, j_max: int,
                      probe_factor: int = 200) -> list[AnnulusNetRow]:
    """Witness table at r = 2^-j: bounded distance ratios t_j with diverging
    certified distance lower bounds."""
    if not (10 <= j_min <= j_max):
        raise ValueError("need 10 <= j_min <= j_max")
    rows = []
    for j in range(j_min, j_max + 1):
        inst = build_annulus_net(2.0 ** (-j), j, probe_factor)
        dist = float(np.linalg.norm(inst.a - inst.b))
        t_j = dist / min(inst.d_a, inst.d_b)
        rows.append(AnnulusNetRow(j, inst.r, len(inst.net),
                                  inst.covering_verified,
                                  inst.covering_radius_bound, t_j,
                                  annulus_net_lower_bound(inst)))
    return rows
