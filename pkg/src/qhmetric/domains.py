"""Domain models: base shapes, puncture sets, and boundary distances.

A Domain couples a base shape D (ball, half-space, or the whole space) with a
finite puncture set P; the punctured domain G = D \\ P has boundary distance
d_G = min(distance to the base boundary, distance to the nearest puncture).
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .normed_space import (DimensionMismatchError, NormSpec, Vector, as_vector,
                           norm, norm_many)

MEMBERSHIP_TOL = 1e-9


class GeometryError(ValueError):
    """A point lies outside (or on the boundary of) the domain it is used in."""


class SchemaError(ValueError):
    """A domain/scenario JSON document does not match the fixed schema."""


@dataclass(frozen=True)
class Ball:
    center: Vector
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center))
        if not (self.radius > 0.0):
            raise ValueError(f"ball radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class HalfSpace:
    """Open half-space {x : normal . x < offset}."""

    normal: Vector
    offset: float

    def __post_init__(self):
        n = as_vector(self.normal)
        if not np.any(n != 0.0):
            raise ValueError("half-space normal must be nonzero")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))


@dataclass(frozen=True)
class WholeSpace:
    pass


BaseShape = Ball | HalfSpace | WholeSpace


@dataclass(frozen=True)
class PunctureSet:
    """Finite ordered puncture points with their separation level kappa."""

    points: np.ndarray
    kappa: float = 0.5

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, pts.shape[1] if pts.ndim == 2 else 0)
        if pts.ndim != 2:
            raise ValueError("puncture points must form an (n, dim) array")
        if not (self.kappa > 0.0):
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if len(pts) > 1:
            # pairwise distinct (exact coincidence is always a modelling error)
            for i in range(len(pts)):
                if np.any(np.all(pts[i + 1:] == pts[i], axis=1)):
                    raise ValueError("puncture points must be pairwise distinct")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]


def empty_punctures(dim: int, kappa: float = 0.5) -> PunctureSet:
    return PunctureSet(np.zeros((0, dim)), kappa)


class Membership(enum.Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class Domain:
    """Base shape plus punctures in a fixed p-norm space."""

    space: NormSpec
    base: BaseShape
    punctures: PunctureSet = None

    def __post_init__(self):
        if self.punctures is None:
            object.__setattr__(self, "punctures", empty_punctures(self.space.dim))
        if self.punctures.points.shape[1] != self.space.dim:
            raise DimensionMismatchError("punctures do not conform to the space")
        if isinstance(self.base, WholeSpace) and len(self.punctures) == 0:
            raise ValueError("whole-space base requires a nonempty puncture set")
        if isinstance(self.base, Ball):
            self.space.check(self.base.center)
        if isinstance(self.base, HalfSpace):
            self.space.check(self.base.normal)
        if len(self.punctures):
            inside = self.base_clearance_many(self.punctures.points)
            if np.any(inside <= 0.0):
                raise ValueError("puncture points must lie strictly inside the base")

    # -- base boundary distance ------------------------------------------------

    def base_clearance_many(self, X: np.ndarray) -> np.ndarray:
        """Signed distance to the base boundary (positive inside), vectorized."""
        X = np.asarray(X, dtype=float)
        if isinstance(self.base, Ball):
            return self.base.radius - norm_many(self.space, X - self.base.center[None, :])
        if isinstance(self.base, HalfSpace):
            q = self.space.dual_exponent
            nq = float(norm_many(NormSpec(self.space.dim, q),
                                 self.base.normal[None, :])[0])
            return (self.base.offset - X @ self.base.normal) / nq
        return np.full(X.shape[0], math.inf)

    def puncture_clearance_many(self, X: np.ndarray) -> np.ndarray:
        """Distance to the nearest puncture, +inf when there are none."""
        X = np.asarray(X, dtype=float)
        if len(self.punctures) == 0:
            return np.full(X.shape[0], math.inf)
        diff = X[:, None, :] - self.punctures.points[None, :, :]
        flat = diff.reshape(-1, self.space.dim)
        d = norm_many(self.space, flat).reshape(X.shape[0], len(self.punctures))
        return d.min(axis=1)

    def clearance_many(self, X: np.ndarray) -> np.ndarray:
        """d_G = min(base clearance, puncture clearance), vectorized, unchecked."""
        return np.minimum(self.base_clearance_many(X), self.puncture_clearance_many(X))

    def without_punctures(self) -> "Domain":
        if isinstance(self.base, WholeSpace):
            raise ValueError("whole-space base has no unpunctured counterpart")
        return Domain(self.space, self.base, empty_punctures(self.space.dim,
                                                             self.punctures.kappa))

    @property
    def scale(self) -> float:
        """Reference length used by samplers and tolerances."""
        if isinstance(self.base, Ball):
            return self.base.radius
        if isinstance(self.base, HalfSpace):
            return 1.0
        pts = self.punctures.points
        span = float(norm_many(self.space, pts - pts.mean(axis=0)[None, :]).max())
        return max(span, 1.0)


# -- spec'd operations ----------------------------------------------------------


def dist_boundary_base(domain: Domain, x: Vector) -> float:
    """d_D(x): distance from x to the base boundary; x must lie strictly inside."""
    x = domain.space.check(x)
    d = float(domain.base_clearance_many(x[None, :])[0])
    if d <= 0.0:
        raise GeometryError("point lies outside or on the base boundary")
    return d


def dist_puncture(domain: Domain, x: Vector) -> tuple[float, int]:
    """Distance to the nearest puncture and its (lowest) index."""
    if len(domain.punctures) == 0:
        raise GeometryError("domain has no punctures")
    x = domain.space.check(x)
    d = norm_many(domain.space, domain.punctures.points - x[None, :])
    idx = int(np.argmin(d))
    return float(d[idx]), idx


def d_G(domain: Domain, x: Vector) -> float:
    """Boundary distance of the punctured domain G = D \\ P at x (x in G)."""
    x = domain.space.check(x)
    base = float(domain.base_clearance_many(x[None, :])[0])
    if base <= 0.0:
        raise GeometryError("point lies outside or on the base boundary")
    if len(domain.punctures) == 0:
        return base
    punct, _ = dist_puncture(domain, x)
    if punct <= 0.0:
        raise GeometryError("point coincides with a puncture")
    return min(base, punct)


def contains(domain: Domain, x: Vector, tol: float = MEMBERSHIP_TOL) -> Membership:
    """Strict interior / near-boundary / outside verdict with clearance tol."""
    x = domain.space.check(x)
    c = float(domain.clearance_many(x[None, :])[0])
    if c > tol:
        return Membership.INSIDE
    if c > -tol:
        return Membership.BOUNDARY
    return Membership.OUTSIDE


def lambda_sigma(sigma: float) -> float:
    """Radius fraction threshold with 2 log(1/(1 - lambda)) = sigma."""
    if not (sigma > 0.0):
        raise ValueError(f"sigma must be positive, got {sigma}")
    return -math.expm1(-sigma / 2.0)


LAMBDA_0 = lambda_sigma(0.5)


def ball_puncture_count(domain: Domain, x: Vector, lam: float) -> int:
    """Number of punctures in the open ball B(x, lam * d_D(x))."""
    if not (0.0 < lam < 1.0):
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    dd = dist_boundary_base(domain, x)
    if len(domain.punctures) == 0:
        return 0
    x = domain.space.check(x)
    d = norm_many(domain.space, domain.punctures.points - x[None, :])
    return int(np.count_nonzero(d < lam * dd))


# -- fixed JSON schema ------------------------------------------------------------


def domain_to_json(domain: Domain) -> dict:
    space = {"dim": domain.space.dim,
             "p": "inf" if math.isinf(domain.space.p) else domain.space.p}
    if isinstance(domain.base, Ball):
        base = {"type": "ball", "center": domain.base.center.tolist(),
                "radius": domain.base.radius}
    elif isinstance(domain.base, HalfSpace):
        base = {"type": "halfspace", "normal": domain.base.normal.tolist(),
                "offset": domain.base.offset}
    else:
        base = {"type": "whole"}
    return {"space": space, "base": base,
            "punctures": {"kappa": domain.punctures.kappa,
                          "points": domain.punctures.points.tolist()}}


def domain_from_json(doc: dict) -> Domain:
    try:
        sp = doc["space"]
        p = sp["p"]
        if p == "inf":
            p = math.inf
        space = NormSpec(int(sp["dim"]), float(p))
        base_doc = doc["base"]
        kind = base_doc["type"]
        if kind == "ball":
            base = Ball(as_vector(base_doc["center"], space.dim),
                        float(base_doc["radius"]))
        elif kind == "halfspace":
            base = HalfSpace(as_vector(base_doc["normal"], space.dim),
                             float(base_doc["offset"]))
        elif kind == "whole":
            base = WholeSpace()
        else:
            raise SchemaError(f"unknown base type {kind!r}")
        pd = doc.get("punctures", {"kappa": 0.5, "points": []})
        pts = np.asarray(pd.get("points", []), dtype=float)
        if pts.size == 0:
            punct = empty_punctures(space.dim, float(pd.get("kappa", 0.5)))
        else:
            if pts.ndim != 2 or pts.shape[1] != space.dim:
                raise SchemaError("puncture points do not match the space dimension")
            punct = PunctureSet(pts, float(pd.get("kappa", 0.5)))
        return Domain(space, base, punct)
    except SchemaError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"invalid domain document: {exc}") from exc


def domain_from_file(path: str) -> Domain:
    with open(path, "r", encoding="utf-8") as fh:
        return domain_from_json(json.load(fh))
