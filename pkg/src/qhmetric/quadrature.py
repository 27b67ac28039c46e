"""Certified segment containment and adaptive quadrature of 1/clearance.

The quasihyperbolic length of a polyline edge [a, b] is
|b - a| * integral_0^1 ds / d(z(s)).  Soundness of every upper bound in the
toolkit rests on two facts used here:

  * a segment is certified inside the domain when sampling it at norm spacing
    h gives min d > h/2 (1-Lipschitzness of d closes the gaps);
  * reported integral values carry a Richardson error estimate, and callers
    add that estimate when they need a one-sided bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domains import Domain
from .normed_space import Polyline, norm_many

_TINY = 1e-300


class CertificationError(ValueError):
    """A segment could not be certified to stay inside the domain."""


class QuadratureError(RuntimeError):
    """Adaptive subdivision exhausted max_depth before reaching rel_tol."""


@dataclass(frozen=True)
class QuadratureParams:
    rel_tol: float = 1e-8
    max_depth: int = 40

    def __post_init__(self):
        if not (0.0 < self.rel_tol < 1.0):
            raise ValueError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")
        if self.max_depth < 4:
            raise ValueError(f"max_depth must be >= 4, got {self.max_depth}")


def certify_segments(domain: Domain, starts: np.ndarray, ends: np.ndarray,
                     max_doublings: int = 14) -> np.ndarray:
    """Vectorized certification of many segments; returns a boolean mask.

    Per segment: sample 2^k + 1 equidistant points, pass when the minimum
    clearance exceeds half the sample spacing, fail hard when a sample leaves
    the domain, keep doubling otherwise.  Uncertified segments report False.
    """
    A = np.asarray(starts, dtype=float)
    B = np.asarray(ends, dtype=float)
    n = A.shape[0]
    L = norm_many(domain.space, B - A)
    certified = np.zeros(n, dtype=bool)
    alive = np.ones(n, dtype=bool)
    mins = np.full(n, math.inf)
    for level in range(max_doublings + 1):
        idx = np.flatnonzero(alive & ~certified)
        if len(idx) == 0:
            break
        k = 2 ** level
        if level == 0:
            s = np.array([0.0, 1.0])
        else:
            # only the new midpoints of the previous level's grid
            s = (2.0 * np.arange(k // 2) + 1.0) / k
        pts = (A[idx][:, None, :]
               + s[None, :, None] * (B[idx] - A[idx])[:, None, :])
        d = domain.clearance_many(pts.reshape(-1, A.shape[1])).reshape(len(idx), -1)
        mins[idx] = np.minimum(mins[idx], d.min(axis=1))
        alive[idx[mins[idx] <= 0.0]] = False
        h = L[idx] / k
        certified[idx[mins[idx] > h / 2.0]] = True
    return certified


def certify_segment(domain: Domain, a: np.ndarray, b: np.ndarray,
                    max_doublings: int = 18) -> None:
    """Certify a single segment or raise CertificationError."""
    ok = certify_segments(domain, np.asarray(a, dtype=float)[None, :],
                          np.asarray(b, dtype=float)[None, :], max_doublings)
    if not bool(ok[0]):
        raise CertificationError(
            "segment could not be certified inside the domain "
            "(it exits the domain or passes too close to the boundary)")


def segment_qh_length(domain: Domain, a: np.ndarray, b: np.ndarray,
                      quad: QuadratureParams) -> tuple[float, float]:
    """Adaptive Simpson evaluation of the edge integral; returns (value, err).

    Panels are halved (Richardson style) until the local error estimates sum
    below rel_tol times the running value; the caller must have certified the
    segment beforehand.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    L = float(norm_many(domain.space, (b - a)[None, :])[0])
    if L == 0.0:
        raise ValueError("degenerate edge with coincident endpoints")

    def density(s: np.ndarray) -> np.ndarray:
        pts = a[None, :] + s[:, None] * (b - a)[None, :]
        d = domain.clearance_many(pts)
        if np.any(d <= 0.0):
            raise CertificationError("edge exits the domain during quadrature")
        return 1.0 / d

    # panel state: left endpoint, width, f at lo/mid/hi, Simpson value, depth
    s0 = np.linspace(0.0, 1.0, 9)
    f0 = density(s0)
    lo = s0[:-2:2]
    width = np.full(4, 0.25)
    flo, fmid, fhi = f0[:-2:2], f0[1::2], f0[2::2]
    simpson = width / 6.0 * (flo + 4.0 * fmid + fhi)
    depth = np.zeros(4, dtype=int)

    value = 0.0
    err = 0.0
    total_hint = float(simpson.sum())
    while len(lo):
        if np.any(depth > quad.max_depth):
            raise QuadratureError("adaptive subdivision exceeded max_depth")
        fl = density(lo + width / 4.0)
        fr = density(lo + 3.0 * width / 4.0)
        left = width / 12.0 * (flo + 4.0 * fl + fmid)
        right = width / 12.0 * (fmid + 4.0 * fr + fhi)
        s2 = left + right
        panel_err = np.abs(s2 - simpson) / 15.0
        budget = quad.rel_tol * max(abs(total_hint), _TINY) * width
        done = panel_err <= budget
        value += float((s2 + (s2 - simpson) / 15.0)[done].sum())
        err += float(panel_err[done].sum())
        keep = ~done
        # split kept panels: left child inherits (flo, fl, fmid), right (fmid, fr, fhi)
        lo = np.concatenate([lo[keep], (lo + width / 2.0)[keep]])
        half = width[keep] / 2.0
        width = np.concatenate([half, half])
        new_flo = np.concatenate([flo[keep], fmid[keep]])
        new_fmid = np.concatenate([fl[keep], fr[keep]])
        new_fhi = np.concatenate([fmid[keep], fhi[keep]])
        flo, fmid, fhi = new_flo, new_fmid, new_fhi
        simpson = np.concatenate([left[keep], right[keep]])
        depth = np.concatenate([depth[keep] + 1, depth[keep] + 1])
        total_hint = value + float(s2[keep].sum())
    return L * value, L * err


def polyline_qh_length(domain: Domain, poly: Polyline,
                       quad: QuadratureParams) -> tuple[float, float]:
    """Certified quasihyperbolic length of a polyline with error estimate."""
    verts = poly.vertices
    ok = certify_segments(domain, verts[:-1], verts[1:])
    if not np.all(ok):
        raise CertificationError("a polyline edge exits the domain")
    total = 0.0
    err = 0.0
    for i in range(len(poly) - 1):
        v, e = segment_qh_length(domain, verts[i], verts[i + 1], quad)
        total += v
        err += e
    return total, err
