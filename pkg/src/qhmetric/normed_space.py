"""Vectors, p-norms, segments, polylines, and norm circles in planar sections.

Everything here is pure and immutable: vectors are read-only numpy arrays,
norms are the classical p-norms (p in [1, inf], inf meaning the max norm),
and curves are polylines measured in the ambient norm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

Vector = np.ndarray

GRAM_RTOL = 1e-12


class DimensionMismatchError(ValueError):
    """A vector does not conform to the space it is used in."""


def as_vector(coords, dim: int | None = None) -> Vector:
    """Coerce to a read-only float64 vector, optionally checking dimension."""
    v = np.asarray(coords, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatchError(f"expected a 1-d vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {v.shape[0]}")
    v = v.copy()
    v.flags.writeable = False
    return v


@dataclass(frozen=True)
class NormSpec:
    """A finite-dimensional real space equipped with a p-norm.

    dim >= 2 (planar sections must exist) and p >= 1 (math.inf = max norm).
    """

    dim: int
    p: float = 2.0

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"dim must be an integer >= 2, got {self.dim}")
        if not (self.p >= 1.0):
            raise ValueError(f"p must be >= 1, got {self.p}")

    @property
    def dual_exponent(self) -> float:
        """q with 1/p + 1/q = 1 (dual norm exponent)."""
        if self.p == 1.0:
            return math.inf
        if math.isinf(self.p):
            return 1.0
        return self.p / (self.p - 1.0)

    def check(self, v: Vector) -> Vector:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise DimensionMismatchError(
                f"vector of shape {v.shape} does not conform to dim {self.dim}")
        return v


def norm(space: NormSpec, v: Vector) -> float:
    """p-norm of v in the given space."""
    v = space.check(v)
    return float(norm_many(space, v[None, :])[0])


def norm_many(space: NormSpec, rows: np.ndarray) -> np.ndarray:
    """p-norms of the rows of a 2-d array (vectorized hot path)."""
    a = np.abs(np.asarray(rows, dtype=float))
    p = space.p
    if p == 2.0:
        return np.sqrt(np.einsum("ij,ij->i", a, a))
    if math.isinf(p):
        return a.max(axis=1)
    if p == 1.0:
        return a.sum(axis=1)
    return (a ** p).sum(axis=1) ** (1.0 / p)


def dual_norm(space: NormSpec, v: Vector) -> float:
    """Norm of a functional vector in the dual exponent q."""
    q = space.dual_exponent
    return norm(NormSpec(space.dim, q), v)


def segment_point(z1: Vector, z2: Vector, s: float) -> Vector:
    """Affine point (1-s) z1 + s z2 for s in [0, 1]."""
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    if z1.shape != z2.shape:
        raise DimensionMismatchError("segment endpoints differ in dimension")
    if not (0.0 <= s <= 1.0):
        raise ValueError(f"segment parameter must lie in [0, 1], got {s}")
    return (1.0 - s) * z1 + s * z2


@dataclass(frozen=True)
class PlaneBasis:
    """Two linearly independent vectors spanning a 2-d linear subspace."""

    b1: Vector
    b2: Vector

    def __post_init__(self):
        b1 = as_vector(self.b1)
        b2 = as_vector(self.b2, dim=b1.shape[0])
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "b2", b2)
        g11 = float(b1 @ b1)
        g22 = float(b2 @ b2)
        g12 = float(b1 @ b2)
        gram = g11 * g22 - g12 * g12
        if gram <= GRAM_RTOL * max(g11 * g22, 1e-300):
            raise ValueError("plane basis vectors are (nearly) linearly dependent")

    def direction(self, theta: float) -> Vector:
        return math.cos(theta) * self.b1 + math.sin(theta) * self.b2


@dataclass(frozen=True)
class Polyline:
    """Ordered vertices of a rectifiable-arc surrogate (>= 2, consecutive distinct)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] < 2:
            raise ValueError("polyline needs an (n, dim) array with n >= 2")
        diffs = np.diff(v, axis=0)
        if np.any(np.all(diffs == 0.0, axis=1)):
            raise ValueError("polyline has coincident consecutive vertices")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def __len__(self) -> int:
        return self.vertices.shape[0]

    def reversed(self) -> "Polyline":
        return Polyline(self.vertices[::-1])

    def subpath(self, i: int, j: int) -> "Polyline":
        if not (0 <= i < j < len(self)):
            raise IndexError(f"invalid subpath indices ({i}, {j})")
        return Polyline(self.vertices[i:j + 1])


def polyline_length(space: NormSpec, poly: Polyline) -> float:
    """Arc length: sum of edge p-norms."""
    return float(edge_lengths(space, poly).sum())


def edge_lengths(space: NormSpec, poly: Polyline) -> np.ndarray:
    if poly.dim != space.dim:
        raise DimensionMismatchError("polyline does not conform to the space")
    return norm_many(space, np.diff(poly.vertices, axis=0))


def sphere_circle_point(space: NormSpec, center: Vector, radius: float,
                        plane: PlaneBasis, theta: float) -> Vector:
    """Point on the norm sphere S(center, radius) in the affine plane center + T.

    The circle is the central projection of cos/sin combinations of the plane
    basis onto the norm sphere; the result always has norm distance exactly
    `radius` from the center.
    """
    if radius <= 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    center = space.check(center)
    space.check(plane.b1)
    u = plane.direction(theta)
    nu = norm(space, u)
    return center + (radius / nu) * u


def minor_arc(space: NormSpec, center: Vector, radius: float, plane: PlaneBasis,
              endpoint_angle_1: float, endpoint_angle_2: float,
              resolution: int, allow_major: bool = False) -> Polyline:
    """Polyline sampling of the norm-circle arc between two parameter angles.

    The parameter interval [angle_1, angle_2] is traversed as given; its span
    must not exceed pi (minor arc or half circle) unless allow_major is set.
    """
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    span = abs(endpoint_angle_2 - endpoint_angle_1)
    if span == 0.0:
        raise ValueError("endpoint angles coincide; arc is degenerate")
    if span > math.pi + 1e-12 and not allow_major:
        raise ValueError(
            f"angular separation {span:.6g} exceeds pi; pass allow_major=True "
            "to sample the major arc")
    thetas = np.linspace(endpoint_angle_1, endpoint_angle_2, resolution + 1)
    dirs = (np.cos(thetas)[:, None] * plane.b1[None, :]
            + np.sin(thetas)[:, None] * plane.b2[None, :])
    norms = norm_many(space, dirs)
    pts = np.asarray(center, dtype=float)[None, :] + (radius / norms)[:, None] * dirs
    return Polyline(pts)


def quasiconvexity_constant(space: NormSpec, poly: Polyline) -> float:
    """Least c such that every sub-polyline has length <= c times its chord.

    Maximizes arclength(poly[i..j]) / |v_i - v_j| over all vertex pairs
    (blocked full sweep), skipping the (invariant-violating) pairs with
    coincident vertices.
    """
    verts = poly.vertices
    if poly.dim != space.dim:
        raise DimensionMismatchError("polyline does not conform to the space")
    prefix = np.concatenate([[0.0], np.cumsum(edge_lengths(space, poly))])
    n = len(poly)
    p = space.p

    # single-precision screening over the strict upper triangle locates the
    # maximizing pair; a double-precision recheck of the winner follows
    # (well inside every stated tolerance)
    from scipy.spatial.distance import cdist
    full = None
    if p == 1.0:
        full = cdist(verts, verts, "cityblock")
    elif p == 2.0:
        full = cdist(verts, verts, "euclidean")
    elif math.isinf(p):
        full = cdist(verts, verts, "chebyshev")
    v32 = verts.astype(np.float32)
    pre32 = prefix.astype(np.float32)
    block = max(1, int(3e6) // max(n, 1))
    best32 = np.float32(0.0)
    win = (0, 1)
    for start in range(0, n - 1, block):
        stop = min(start + block, n - 1)
        c0 = start + 1
        if full is not None:
            denom = full[start:stop, c0:]
        else:
            buf = np.zeros((stop - start, n - c0), dtype=np.float32)
            for k in range(v32.shape[1]):
                comp = np.abs(v32[start:stop, k, None] - v32[None, c0:, k])
                if p == 1.5:
                    buf += comp * np.sqrt(comp)
                elif p == 3.0:
                    buf += comp * comp * comp
                else:
                    buf += comp ** np.float32(p)
            if p == 1.5:
                denom = np.cbrt(buf)
                denom *= denom
            elif p == 3.0:
                denom = np.cbrt(buf)
            else:
                denom = buf ** np.float32(1.0 / p)
        # prefix is strictly increasing, so arcs > 0 selects exactly j > i
        arcs = pre32[None, c0:] - pre32[start:stop, None]
        valid = (arcs > 0.0) & (denom > 0.0)
        ratios = np.divide(arcs.astype(denom.dtype, copy=False), denom,
                           out=np.zeros(denom.shape, dtype=denom.dtype),
                           where=valid)
        flat = int(np.argmax(ratios))
        val = np.float32(ratios.ravel()[flat])
        if val > best32:
            best32 = val
            cols = n - c0
            win = (start + flat // cols, c0 + flat % cols)
    i, j = win
    chord = float(norm_many(space, (verts[j] - verts[i])[None, :])[0])
    if chord <= 0.0:
        return 1.0
    return max(1.0, float((prefix[j] - prefix[i]) / chord))
