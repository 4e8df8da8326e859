"""Deterministic tangent-point samplers.

Base points are drawn uniformly from a box; fiber blocks are drawn on
the unit sphere of each factor and scaled into [0.5, 2], which covers
directions without wasting samples radially (all tensors have fixed
homogeneity degree).  The same seed always yields the same points.
"""

from __future__ import annotations

import numpy as np

from .metrics import SLIT_MIN_NORM, TangentPoint


def _sphere_block(rng: np.random.Generator, dim: int, r_low: float, r_high: float) -> np.ndarray:
    while True:
        v = rng.standard_normal(dim)
        norm = np.linalg.norm(v)
        if norm >= SLIT_MIN_NORM:
            return v / norm * rng.uniform(r_low, r_high)


def sample_points(
    m: int,
    n: int,
    count: int,
    seed: int,
    x_low: float = -1.0,
    x_high: float = 1.0,
    r_low: float = 0.5,
    r_high: float = 2.0,
) -> list[TangentPoint]:
    """Sample ``count`` tangent points of an (m, n) product, both fiber
    blocks nonzero."""
    rng = np.random.default_rng(seed)
    points = []
    for _ in range(count):
        x = rng.uniform(x_low, x_high, m + n)
        y = np.concatenate([_sphere_block(rng, m, r_low, r_high), _sphere_block(rng, n, r_low, r_high)])
        points.append(TangentPoint(x, y, split=m))
    return points


def sample_fibers_at(
    x: np.ndarray,
    m: int,
    n: int,
    count: int,
    seed: int,
    r_low: float = 0.5,
    r_high: float = 2.0,
) -> list[TangentPoint]:
    """Sample fiber vectors over one fixed base point."""
    rng = np.random.default_rng(seed)
    x = np.asarray(x, dtype=float)
    points = []
    for _ in range(count):
        y = np.concatenate([_sphere_block(rng, m, r_low, r_high), _sphere_block(rng, n, r_low, r_high)])
        points.append(TangentPoint(x.copy(), y, split=m))
    return points
