"""Deterministic seeded sampling: low-discrepancy sequences and domain samplers.

All randomness in the toolkit flows through these helpers, so identical seeds
give bit-identical sample streams regardless of call interleaving.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtri

from .domains import Ball, Domain, HalfSpace, WholeSpace
from .normed_space import NormSpec, norm_many

_MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """One step of the splitmix64 generator; returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, (z ^ (z >> 31)) & _MASK64


def derive_seed(master: int, *indices: int) -> int:
    """Deterministically derive a sub-seed from a master seed and indices."""
    state = master & _MASK64
    for ix in indices:
        state, out = splitmix64(state ^ ((ix * 0x9E3779B97F4A7C15) & _MASK64))
        state ^= out
    return state & _MASK64


def _plastic_alpha(dim: int) -> np.ndarray:
    # root of x^(dim+1) = x + 1; its inverse powers drive the additive sequence
    x = 2.0
    for _ in range(40):
        x = (1.0 + x) ** (1.0 / (dim + 1))
    return np.array([(1.0 / x) ** (k + 1) % 1.0 for k in range(dim)])


class LowDiscrepancy:
    """Seeded additive low-discrepancy sequence in the unit cube."""

    def __init__(self, dim: int, seed: int):
        self.dim = dim
        self.alpha = _plastic_alpha(dim)
        offs = []
        state = derive_seed(seed, dim)
        for _ in range(dim):
            state, out = splitmix64(state)
            offs.append(out / 2.0 ** 64)
        self.offset = np.array(offs)

    def block(self, n: int, start: int = 0) -> np.ndarray:
        """Points start..start+n-1 of the sequence, shape (n, dim)."""
        idx = np.arange(start + 1, start + n + 1, dtype=float)[:, None]
        return (self.offset[None, :] + idx * self.alpha[None, :]) % 1.0


def unit_cube_points(dim: int, n: int, seed: int, start: int = 0) -> np.ndarray:
    return LowDiscrepancy(dim, seed).block(n, start)


def points_in_box(lo: np.ndarray, hi: np.ndarray, n: int, seed: int,
                  start: int = 0) -> np.ndarray:
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    u = unit_cube_points(lo.shape[0], n, seed, start)
    return lo[None, :] + u * (hi - lo)[None, :]


def sample_box(domain: Domain) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic axis-aligned box used for rejection sampling in a domain."""
    dim = domain.space.dim
    if isinstance(domain.base, Ball):
        c, r = domain.base.center, domain.base.radius
        return c - r, c + r
    if isinstance(domain.base, HalfSpace):
        nrm = domain.base.normal
        n_unit = nrm / math.sqrt(float(nrm @ nrm))
        foot = n_unit * (domain.base.offset / float(nrm @ n_unit))
        scale = domain.scale
        lo = foot - 2.0 * scale
        hi = foot + 2.0 * scale
        return lo, hi
    pts = domain.punctures.points
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    pad = max(float(np.max(hi - lo)), 1.0)
    return lo - pad, hi + pad


def points_in_domain(domain: Domain, n: int, seed: int,
                     min_clearance: float = 0.0, start: int = 0,
                     max_batches: int = 200) -> np.ndarray:
    """First n sequence points inside G with clearance above the floor."""
    lo, hi = sample_box(domain)
    ld = LowDiscrepancy(domain.space.dim, seed)
    out = []
    got = 0
    cursor = start
    batch = max(4 * n, 64)
    for _ in range(max_batches):
        u = ld.block(batch, cursor)
        cursor += batch
        pts = lo[None, :] + u * (hi - lo)[None, :]
        clear = domain.clearance_many(pts)
        keep = pts[clear > min_clearance]
        if len(keep):
            out.append(keep[:n - got])
            got += len(out[-1])
        if got >= n:
            return np.concatenate(out, axis=0)
    raise RuntimeError(f"could not draw {n} interior points (domain too tight?)")


def unit_directions(space: NormSpec, n: int, seed: int, start: int = 0) -> np.ndarray:
    """n quasi-random directions normalized to the unit p-norm sphere."""
    u = unit_cube_points(space.dim, n, seed, start)
    g = ndtri(np.clip(u, 1e-12, 1.0 - 1e-12))
    nz = norm_many(space, g)
    nz[nz == 0.0] = 1.0
    return g / nz[:, None]
