"""Midpoint-rule grids on boxes.

Cells are cut at the points ``offset + h*Z`` and at the box ends, so the
rule is exact for piecewise constant integrands whose jumps sit on that
shifted grid.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ResourceError

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def cells_1d(lo: float, hi: float, h: float, offset: float = 0.0, cuts=()):
    """Midpoints and lengths of the partition of ``[lo, hi]``.

    ``cuts`` are extra breakpoints (e.g. ladder radii) that must be cell
    boundaries.
    """
    if hi <= lo:
        return np.empty(0), np.empty(0)
    snap = 1e-9 * h
    k0 = math.ceil((lo - offset) / h - 1e-9)
    k1 = math.floor((hi - offset) / h + 1e-9)
    inner = offset + h * np.arange(k0, k1 + 1, dtype=float)
    extra = np.asarray([c for c in cuts if lo < c < hi], dtype=float)
    pts = np.concatenate([[lo], inner, extra, [hi]])
    pts = np.unique(np.clip(pts, lo, hi))
    keep = np.concatenate([[True], np.diff(pts) > snap])
    pts = pts[keep]
    if pts[-1] < hi:
        pts[-1] = hi
    if len(pts) < 2:
        pts = np.array([lo, hi])
    return 0.5 * (pts[:-1] + pts[1:]), np.diff(pts)


def product_grid(axes_cells, budget: int):
    """Tensor product of 1-D (midpoints, lengths) pairs.

    Returns ``(points, volumes)`` with points of shape ``(N, k)``.
    """
    sizes = [len(m) for m, _ in axes_cells]
    total = math.prod(sizes) if sizes else 1
    if total > budget:
        raise ResourceError(f"quadrature grid of {total} cells exceeds the budget of {budget}")
    if not axes_cells:
        return np.zeros((1, 0)), np.ones(1)
    mids = np.meshgrid(*[m for m, _ in axes_cells], indexing="ij")
    lens = np.meshgrid(*[w for _, w in axes_cells], indexing="ij")
    pts = np.stack([m.ravel() for m in mids], axis=-1)
    vol = np.prod(np.stack([w.ravel() for w in lens], axis=-1), axis=-1)
    return pts, vol


def log_normal_density(x):
    return -0.5 * np.square(x) - LOG_SQRT_2PI
