"""Certified two-sided brackets for the quasihyperbolic distance.

Lower bounds come from the distance-ratio metric j and the boundary-distance
log ratio; upper bounds come from closed-form near-point estimates, certified
straight segments, and shortest paths in a refinable sampled graph followed by
local path polishing.  Every reported upper bound is the measured length of a
certified path (plus its quadrature error), so brackets are sound by
construction.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace

import numpy as np

from .domains import Ball, Domain, GeometryError, HalfSpace, WholeSpace
from .normed_space import NormSpec, Polyline, Vector, norm_many
from .quadrature import (CertificationError, QuadratureParams, certify_segments,
                         polyline_qh_length, segment_qh_length)
from .sampling import LowDiscrepancy, derive_seed, unit_directions

_TINY = 1e-300


@dataclass(frozen=True)
class GraphParams:
    """Knobs of the sampled shortest-path search."""

    node_budget: int = 2000
    ring_levels: int = 12
    refine_rounds: int = 3
    target_ratio: float = 1.05
    seed: int = 0
    ring_count: int = 16
    knn: int = 16
    polish_passes: int = 24

    def __post_init__(self):
        if self.node_budget < 2:
            raise ValueError(f"node_budget must be >= 2, got {self.node_budget}")
        if not (self.target_ratio > 1.0):
            raise ValueError(f"target_ratio must exceed 1, got {self.target_ratio}")
        if self.ring_levels < 1 or self.ring_count < 4:
            raise ValueError("ring_levels >= 1 and ring_count >= 4 required")
        if self.refine_rounds < 0:
            raise ValueError("refine_rounds must be nonnegative")


@dataclass(frozen=True)
class DistanceBracket:
    """Certified interval [lower, upper] for a quasihyperbolic distance."""

    lower: float
    upper: float
    witness: Polyline | None = None

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise ValueError("bracket bounds must not be NaN")
        if self.lower > self.upper:
            raise ValueError(
                f"bracket ordering violated: lower {self.lower} > upper {self.upper}")

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    @property
    def ratio(self) -> float:
        if self.lower == 0.0:
            return 1.0 if self.upper == 0.0 else math.inf
        return self.upper / self.lower


@dataclass(frozen=True)
class NearGeodesicResult:
    path: Polyline
    global_ratio: float
    worst_subarc_ratio: float
    certified: bool


def _clearance_checked(domain: Domain, z: Vector) -> float:
    d = float(domain.clearance_many(np.asarray(z, dtype=float)[None, :])[0])
    if d <= 0.0:
        raise GeometryError("point lies outside the (punctured) domain")
    return d


def j_metric(domain: Domain, z1: Vector, z2: Vector) -> float:
    """Distance-ratio metric log(1 + |z1-z2| / min(d(z1), d(z2)))."""
    z1 = domain.space.check(z1)
    z2 = domain.space.check(z2)
    d1 = _clearance_checked(domain, z1)
    d2 = _clearance_checked(domain, z2)
    dist = float(norm_many(domain.space, (z1 - z2)[None, :])[0])
    if dist == 0.0:
        return 0.0
    return math.log1p(dist / min(d1, d2))


def k_lower(domain: Domain, z1: Vector, z2: Vector) -> float:
    """Certified lower bound: max of j and the boundary-distance log ratio."""
    z1 = domain.space.check(z1)
    z2 = domain.space.check(z2)
    d1 = _clearance_checked(domain, z1)
    d2 = _clearance_checked(domain, z2)
    dist = float(norm_many(domain.space, (z1 - z2)[None, :])[0])
    if dist == 0.0:
        return 0.0
    j = math.log1p(dist / min(d1, d2))
    if math.isinf(d1) or math.isinf(d2):
        ratio_term = 0.0
    else:
        ratio_term = abs(math.log(d1 / d2))
    return max(j, ratio_term)


def k_upper_direct(domain: Domain, z1: Vector, z2: Vector,
                   quad: QuadratureParams) -> float | None:
    """Cheapest certified upper bounds: near-point closed form and segment.

    Returns None when neither the close-range estimate applies nor the
    straight segment certifies inside the domain.
    """
    z1 = domain.space.check(z1)
    z2 = domain.space.check(z2)
    d1 = _clearance_checked(domain, z1)
    d2 = _clearance_checked(domain, z2)
    dist = float(norm_many(domain.space, (z1 - z2)[None, :])[0])
    if dist == 0.0:
        return 0.0
    candidates = []
    for d in (d1, d2):
        if dist < d:
            candidates.append(math.log1p(dist / (d - dist)))
    if bool(certify_segments(domain, z1[None, :], z2[None, :])[0]):
        val, err = segment_qh_length(domain, z1, z2, quad)
        candidates.append(val + err)
    if not candidates:
        return None
    return min(candidates)


# -- inequality helper -------------------------------------------------------------


@dataclass(frozen=True)
class LogBoundSlack:
    ok: bool
    left_slack: float
    right_slack: float


def logine_check(r: float) -> LogBoundSlack:
    """Slacks of r/(1-r/2) <= log(1/(1-r)) <= r/(1-r) for r in [0, 1)."""
    if not (0.0 <= r < 1.0):
        raise ValueError(f"r must lie in [0, 1), got {r}")
    mid = -math.log1p(-r)
    left = mid - r / (1.0 - r / 2.0)
    right = r / (1.0 - r) - mid
    return LogBoundSlack(left >= 0.0 and right >= 0.0, left, right)


def logine_grid(rs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized slacks (left, right) of the same two inequalities."""
    rs = np.asarray(rs, dtype=float)
    if np.any((rs < 0.0) | (rs >= 1.0)):
        raise ValueError("grid values must lie in [0, 1)")
    mid = -np.log1p(-rs)
    return mid - rs / (1.0 - rs / 2.0), rs / (1.0 - rs) - mid


# -- cheap vectorized edge weights --------------------------------------------------


def _edge_weights(domain: Domain, A: np.ndarray, B: np.ndarray,
                  panels: int = 8) -> np.ndarray:
    """Fixed composite Simpson along segments; inf where the sampling leaves G.

    These weights steer the graph search only; winning paths are re-measured
    with the certified adaptive quadrature.
    """
    E = A.shape[0]
    if E == 0:
        return np.zeros(0)
    K = 2 * panels + 1
    s = np.linspace(0.0, 1.0, K)
    w = np.ones(K)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w /= 6.0 * panels
    pts = A[:, None, :] + s[None, :, None] * (B - A)[:, None, :]
    d = domain.clearance_many(pts.reshape(-1, A.shape[1])).reshape(E, K)
    L = norm_many(domain.space, B - A)
    bad = (d <= 0.0).any(axis=1)
    d = np.where(d <= 0.0, 1.0, d)
    vals = L * (w[None, :] / d).sum(axis=1)
    vals[bad] = math.inf
    return vals


# -- node assembly -------------------------------------------------------------------


def _ring_nodes(domain: Domain, puncture_idx: np.ndarray, gp: GraphParams) -> np.ndarray:
    """Geometric rings of nodes around the selected punctures."""
    pts = []
    space = domain.space
    punct = domain.punctures.points
    for i in puncture_idx:
        x = punct[i]
        local = float(domain.base_clearance_many(x[None, :])[0])
        if len(punct) > 1:
            others = np.delete(punct, i, axis=0)
            local = min(local, 0.5 * float(
                norm_many(space, others - x[None, :]).min()))
        if not math.isfinite(local):
            local = domain.scale
        if space.dim == 2:
            ang = 2.0 * math.pi * np.arange(gp.ring_count) / gp.ring_count
            dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
            dirs /= norm_many(space, dirs)[:, None]
        else:
            dirs = unit_directions(space, gp.ring_count,
                                   derive_seed(gp.seed, 101, int(i)))
        for k in range(1, gp.ring_levels + 1):
            pts.append(x[None, :] + (local * 2.0 ** (-k)) * dirs)
    if not pts:
        return np.zeros((0, space.dim))
    return np.concatenate(pts, axis=0)


def _boundary_layer(domain: Domain, gp: GraphParams, n_dirs: int) -> np.ndarray:
    """Nodes offset inward from a ball boundary (arcs hug the boundary there)."""
    if not isinstance(domain.base, Ball) or n_dirs <= 0:
        return np.zeros((0, domain.space.dim))
    space = domain.space
    c, r = domain.base.center, domain.base.radius
    if space.dim == 2:
        ang = 2.0 * math.pi * np.arange(n_dirs) / n_dirs
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        dirs /= norm_many(space, dirs)[:, None]
    else:
        dirs = unit_directions(space, n_dirs, derive_seed(gp.seed, 102))
    offs = r * np.array([0.5, 0.25, 0.125, 0.0625])
    pts = np.concatenate([c[None, :] + (r - off) * dirs for off in offs], axis=0)
    keep = domain.clearance_many(pts) > 0.0
    return pts[keep]


def _assemble_nodes(domain: Domain, a: Vector, b: Vector,
                    gp: GraphParams) -> np.ndarray:
    """Deterministic node set; positions 0 and 1 hold the endpoints a, b."""
    space = domain.space
    nodes = [a[None, :], b[None, :]]
    count = 2

    # chord samples keep easy geodesics one hop away
    s = np.linspace(0.0, 1.0, 11)[1:-1]
    chord = a[None, :] + s[:, None] * (b - a)[None, :]
    chord = chord[domain.clearance_many(chord) > 0.0]
    nodes.append(chord)
    count += len(chord)

    dist_ab = float(norm_many(space, (b - a)[None, :])[0])
    d_a = float(domain.clearance_many(a[None, :])[0])
    d_b = float(domain.clearance_many(b[None, :])[0])
    finite = [v for v in (dist_ab, d_a, d_b) if math.isfinite(v)]
    reach = 2.0 * (dist_ab + max(d_a if math.isfinite(d_a) else 0.0,
                                 d_b if math.isfinite(d_b) else 0.0,
                                 0.25 * domain.scale))

    # rings around punctures near the pair, nearest first
    if len(domain.punctures):
        punct = domain.punctures.points
        mid = 0.5 * (a + b)
        dmid = norm_many(space, punct - mid[None, :])
        order = np.lexsort((np.arange(len(punct)), dmid))
        order = order[dmid[order] <= reach + domain.scale]
        per_cost = gp.ring_levels * gp.ring_count
        max_punct = max(1, int(0.6 * gp.node_budget) // max(per_cost, 1))
        selected = np.sort(order[:max_punct])
        rings = _ring_nodes(domain, selected, gp)
        rings = rings[domain.clearance_many(rings) > 0.0]
        nodes.append(rings)
        count += len(rings)

    layer = _boundary_layer(domain, gp, n_dirs=min(
        64, max(8, (gp.node_budget - count) // 8)))
    nodes.append(layer)
    count += len(layer)

    # low-discrepancy interior fill in a box around the pair
    remaining = gp.node_budget - count
    if remaining > 0:
        pad = max(finite) if finite else domain.scale
        lo = np.minimum(a, b) - pad
        hi = np.maximum(a, b) + pad
        ld = LowDiscrepancy(space.dim, derive_seed(gp.seed, 103))
        fill = []
        got = 0
        cursor = 0
        for _ in range(40):
            u = ld.block(max(64, 2 * remaining), cursor)
            cursor += max(64, 2 * remaining)
            cand = lo[None, :] + u * (hi - lo)[None, :]
            cand = cand[domain.clearance_many(cand) > 0.0]
            if len(cand):
                fill.append(cand[:remaining - got])
                got += len(fill[-1])
            if got >= remaining:
                break
        if fill:
            nodes.append(np.concatenate(fill, axis=0))

    allpts = np.concatenate(nodes, axis=0)
    return allpts[:max(gp.node_budget, 2)]


# -- graph search --------------------------------------------------------------------


def _knn_edge_list(domain: Domain, nodes: np.ndarray,
                   gp: GraphParams) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric union of per-node nearest neighbours in j-proximity."""
    n = len(nodes)
    clear = domain.clearance_many(nodes)
    pairs = set()
    k_normal = min(gp.knn, n - 1)
    k_end = min(max(gp.knn, 64), n - 1)
    chunk = max(1, int(2e6) // max(n, 1))
    for start in range(0, n, chunk):
        rows = slice(start, min(start + chunk, n))
        diff = nodes[rows][:, None, :] - nodes[None, :, :]
        dist = norm_many(domain.space, diff.reshape(-1, nodes.shape[1]))
        dist = dist.reshape(-1, n)
        dmin = np.minimum(clear[rows][:, None], clear[None, :])
        prox = np.log1p(dist / np.maximum(dmin, _TINY))
        for local_i in range(prox.shape[0]):
            i = start + local_i
            k = k_end if i < 2 else k_normal
            row = prox[local_i].copy()
            row[i] = math.inf
            nearest = np.argpartition(row, min(k, n - 1) - 1)[:k]
            nearest = nearest[np.argsort(row[nearest], kind="stable")]
            for jn in nearest:
                pairs.add((min(i, int(jn)), max(i, int(jn))))
    if not pairs:
        return np.zeros((0, 2), dtype=int), np.zeros(0)
    edge_idx = np.array(sorted(pairs), dtype=int)
    A = nodes[edge_idx[:, 0]]
    B = nodes[edge_idx[:, 1]]
    ok = certify_segments(domain, A, B, max_doublings=11)
    edge_idx = edge_idx[ok]
    weights = _edge_weights(domain, nodes[edge_idx[:, 0]], nodes[edge_idx[:, 1]])
    good = np.isfinite(weights)
    return edge_idx[good], weights[good]


def _dijkstra(n: int, edge_idx: np.ndarray, weights: np.ndarray,
              src: int, dst: int) -> list[int] | None:
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for (i, j), w in zip(edge_idx, weights):
        adj[i].append((j, w))
        adj[j].append((i, w))
    dist = [math.inf] * n
    prev = [-1] * n
    dist[src] = 0.0
    heap = [(0.0, src)]
    seen = [False] * n
    while heap:
        d, u = heapq.heappop(heap)
        if seen[u]:
            continue
        seen[u] = True
        if u == dst:
            break
        for v, w in adj[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    if not seen[dst]:
        return None
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return path[::-1]


# -- path improvement ----------------------------------------------------------------


def _dedupe(pts: np.ndarray) -> np.ndarray:
    keep = [0]
    for i in range(1, len(pts)):
        if np.any(pts[i] != pts[keep[-1]]):
            keep.append(i)
    return pts[keep]


def _densify(domain: Domain, pts: np.ndarray, ratio: float = 0.5,
             max_vertices: int = 400) -> np.ndarray:
    """Split edges until each is short relative to its local clearance."""
    pts = _dedupe(np.asarray(pts, dtype=float))
    for _ in range(12):
        if len(pts) >= max_vertices:
            break
        L = norm_many(domain.space, np.diff(pts, axis=0))
        d = domain.clearance_many(pts)
        dmin = np.minimum(d[:-1], d[1:])
        split = L > ratio * dmin
        if not split.any():
            break
        out = [pts[0][None, :]]
        for i in range(len(pts) - 1):
            if split[i]:
                out.append(0.5 * (pts[i] + pts[i + 1])[None, :])
            out.append(pts[i + 1][None, :])
        pts = np.concatenate(out, axis=0)
    return pts


def _polish(domain: Domain, pts: np.ndarray, passes: int) -> np.ndarray:
    """Pattern-search descent on interior vertices against cheap edge weights.

    Each pass runs two parity half-sweeps so simultaneous vertex moves never
    share an edge; within a half-sweep every candidate move is scored in one
    vectorized weight evaluation.
    """
    pts = np.asarray(pts, dtype=float).copy()
    dim = pts.shape[1]
    n = len(pts)
    if n < 3 or passes <= 0:
        return pts
    steps = np.concatenate([np.eye(dim), -np.eye(dim)], axis=0)
    n_moves = 2 * dim
    scale = 0.35
    for _ in range(passes):
        improved = False
        for parity in (1, 2):
            idx = np.arange(parity, n - 1, 2)
            if len(idx) == 0:
                continue
            d_loc = domain.clearance_many(pts[idx])
            cand = (pts[idx][:, None, :]
                    + (scale * d_loc)[:, None, None] * steps[None, :, :])
            flat = cand.reshape(-1, dim)
            left = np.repeat(pts[idx - 1], n_moves, axis=0)
            right = np.repeat(pts[idx + 1], n_moves, axis=0)
            w_in = _edge_weights(domain, left, flat, panels=6)
            w_out = _edge_weights(domain, flat, right, panels=6)
            totals = (w_in + w_out).reshape(len(idx), n_moves)
            cur = (_edge_weights(domain, pts[idx - 1], pts[idx], panels=6)
                   + _edge_weights(domain, pts[idx], pts[idx + 1], panels=6))
            best = np.argmin(totals, axis=1)
            gain = totals[np.arange(len(idx)), best] < cur - 1e-15
            if gain.any():
                improved = True
                pts[idx[gain]] = cand[np.arange(len(idx)), best][gain]
        scale *= 0.7
        if not improved and scale < 1e-3:
            break
    return pts


def _measure_path(domain: Domain, pts: np.ndarray,
                  quad: QuadratureParams) -> tuple[float, Polyline] | None:
    """Certified quasihyperbolic length of a candidate path, or None."""
    pts = _dedupe(pts)
    if len(pts) < 2:
        return None
    try:
        poly = Polyline(pts)
        val, err = polyline_qh_length(domain, poly, quad)
    except (CertificationError, ValueError):
        return None
    return val + err, poly


# -- the bracket engine --------------------------------------------------------------


def k_bracket(domain: Domain, z1: Vector, z2: Vector,
              graph: GraphParams | None = None,
              quad: QuadratureParams | None = None) -> DistanceBracket:
    """Certified bracket for the quasihyperbolic distance between z1 and z2.

    The search is symmetric in the endpoints and fully deterministic for a
    fixed GraphParams.seed: identical inputs give identical brackets.
    """
    graph = graph or GraphParams()
    quad = quad or QuadratureParams()
    z1 = domain.space.check(z1)
    z2 = domain.space.check(z2)
    lower = k_lower(domain, z1, z2)
    if float(norm_many(domain.space, (z1 - z2)[None, :])[0]) == 0.0:
        return DistanceBracket(0.0, 0.0)

    # canonical orientation keeps the construction endpoint-symmetric
    swapped = tuple(z2) < tuple(z1)
    a, b = (z2, z1) if swapped else (z1, z2)

    upper = math.inf
    witness_pts: np.ndarray | None = None
    direct = k_upper_direct(domain, a, b, quad)
    if direct is not None:
        upper = direct
    if bool(certify_segments(domain, a[None, :], b[None, :])[0]):
        seg_val, seg_err = segment_qh_length(domain, a, b, quad)
        seg_up = seg_val + seg_err
        if seg_up <= upper * (1.0 + 1e-6):
            witness_pts = np.stack([a, b])
        upper = min(upper, seg_up)

    def good_enough() -> bool:
        return upper <= graph.target_ratio * max(lower, _TINY) \
            or upper - lower <= 1e-12

    nodes = None
    for round_no in range(graph.refine_rounds + 1):
        if good_enough():
            break
        if round_no == 0:
            nodes = _assemble_nodes(domain, a, b, graph)
        else:
            guide = witness_pts if witness_pts is not None else np.stack([a, b])
            extra = _tube_nodes(domain, guide, graph, round_no)
            if len(extra):
                nodes = np.concatenate([nodes, extra], axis=0)
        edge_idx, weights = _knn_edge_list(domain, nodes, graph)
        path = _dijkstra(len(nodes), edge_idx, weights, 0, 1)
        prev_upper = upper
        if path is not None:
            raw = nodes[path]
            for candidate in (_polish(domain, _densify(domain, raw),
                                      graph.polish_passes), raw):
                measured = _measure_path(domain, candidate, quad)
                if measured is not None and measured[0] < upper:
                    upper = measured[0]
                    witness_pts = measured[1].vertices
                    break
        if round_no > 0 and upper > 0.995 * prev_upper:
            break  # refinement has stalled; further rounds cannot pay off

    witness = None
    if witness_pts is not None and upper < math.inf:
        pts = witness_pts[::-1] if swapped else witness_pts
        witness = Polyline(pts)
    if upper < lower:  # only possible through quadrature round-off; widen a hair
        upper = lower
    return DistanceBracket(lower, upper, witness)


def _tube_nodes(domain: Domain, guide: np.ndarray, gp: GraphParams,
                round_no: int) -> np.ndarray:
    """Densification nodes in a shrinking tube around the current best path."""
    guide = _densify(domain, guide, ratio=1.0, max_vertices=80)
    d = domain.clearance_many(guide)
    out = [0.5 * (guide[:-1] + guide[1:])]
    ld = LowDiscrepancy(domain.space.dim, derive_seed(gp.seed, 104, round_no))
    n_per = 4
    u = ld.block(n_per * len(guide))
    shrink = 0.6 ** round_no
    for i, g in enumerate(guide):
        r = shrink * 0.5 * d[i]
        box = (2.0 * u[i * n_per:(i + 1) * n_per] - 1.0) * r
        out.append(g[None, :] + box)
    pts = np.concatenate(out, axis=0)
    return pts[domain.clearance_many(pts) > 0.0]


def near_geodesic(domain: Domain, z1: Vector, z2: Vector, nu: float,
                  graph: GraphParams | None = None,
                  quad: QuadratureParams | None = None) -> NearGeodesicResult:
    """Best witness path with a conservative near-geodesic certificate.

    The certificate compares each subpath's measured length against nu times
    the certified *lower* bound for its endpoints, so certified=True implies
    the subarc property for the true metric as well.
    """
    if not (nu > 1.0):
        raise ValueError(f"nu must exceed 1, got {nu}")
    graph = graph or GraphParams()
    quad = quad or QuadratureParams()
    z1 = domain.space.check(z1)
    z2 = domain.space.check(z2)
    if float(norm_many(domain.space, (z1 - z2)[None, :])[0]) == 0.0:
        raise ValueError("near-geodesic endpoints must be distinct")
    bracket = k_bracket(domain, z1, z2, graph, quad)
    if bracket.witness is None:
        raise CertificationError("no certified path found within budget")
    pts = _densify(domain, bracket.witness.vertices, ratio=0.5)
    while len(pts) < 17:
        mids = 0.5 * (pts[:-1] + pts[1:])
        woven = np.empty((2 * len(pts) - 1, pts.shape[1]))
        woven[::2] = pts
        woven[1::2] = mids
        pts = woven
    poly = Polyline(pts)
    edge_vals = []
    for i in range(len(poly) - 1):
        v, e = segment_qh_length(domain, pts[i], pts[i + 1], quad)
        edge_vals.append(v + e)
    prefix = np.concatenate([[0.0], np.cumsum(edge_vals)])

    d = domain.clearance_many(pts)
    n = len(pts)
    worst = 1.0
    for i in range(n - 1):
        dist = norm_many(domain.space, pts[i + 1:] - pts[i][None, :])
        dmin = np.minimum(d[i], d[i + 1:])
        with np.errstate(divide="ignore"):
            jlow = np.log1p(dist / dmin)
            ratio_term = np.abs(np.log(d[i + 1:] / d[i]))
        ratio_term[~np.isfinite(ratio_term)] = 0.0
        low = np.maximum(jlow, ratio_term)
        sub = prefix[i + 1:] - prefix[i]
        ok = low > 0.0
        if ok.any():
            worst = max(worst, float((sub[ok] / low[ok]).max()))
    global_ratio = bracket.ratio
    return NearGeodesicResult(poly, global_ratio, worst, worst <= nu)
