"""Brute-force maximization over low-dimensional bodies."""

from __future__ import annotations

import itertools
from typing import Callable, Optional

import numpy as np

from ..geometry import ConvexBody

__all__ = ["default_resolution", "comparator_grid", "refine_point", "grid_optimum"]

MAX_DIM = 3
REFINE_STEPS = 50


def default_resolution(dim: int) -> int:
    return 65 if dim <= 2 else 33


def _axes(lo, hi, resolution):
    return [np.linspace(a, b, resolution) for a, b in zip(lo, hi)]


def comparator_grid(body: ConvexBody, resolution: Optional[int] = None) -> np.ndarray:
    """Grid points (``resolution`` per axis of the affine hull) that are members of ``body``.

    Full-dimensional bodies use their bounding box; lower-dimensional ones a
    grid in hull coordinates around the center. The center is always included.
    """
    if body.dim > MAX_DIM:
        raise ValueError(f"grid oracle supports d <= {MAX_DIM}, got {body.dim}")
    res = default_resolution(body.dim) if resolution is None else int(resolution)
    if res < 17:
        raise ValueError("resolution must be at least 17 points per axis")
    if body.full_dimensional:
        lo, hi = body._bounding_box()
        pts = np.array(list(itertools.product(*_axes(lo, hi, res))))
    else:
        D = body.diameter
        coords = np.array(list(itertools.product(*_axes([-D] * body.k, [D] * body.k, res))))
        pts = body.center + coords @ body.affine_basis.T
    pts = pts[body.contains(pts)]
    return np.vstack([body.center[None, :], pts])


def refine_point(body: ConvexBody, score: Callable[[np.ndarray], float], x0, resolution: int,
                 steps: int = REFINE_STEPS):
    """Coordinate ascent along hull directions starting at step ``1 / (4 resolution)``.

    The step halves whenever no direction improves. Candidates must satisfy
    the constraints exactly, not just within the membership tolerance, so the
    refined value never benefits from a point slightly outside the body.
    """
    x = np.asarray(x0, dtype=float).copy()
    best = score(x)
    step = 1.0 / (4.0 * resolution)
    dirs = np.vstack([body.affine_basis.T, -body.affine_basis.T])
    for _ in range(steps):
        cand = x + step * dirs
        ok = body._max_violations(cand) <= 0.0
        improved = False
        for y in cand[ok]:
            val = score(y)
            if val > best:
                x, best, improved = y, val, True
        if not improved:
            step /= 2.0
    return x, best


def grid_optimum(body: ConvexBody, objective, resolution: Optional[int] = None):
    """Approximate ``argmax`` of ``objective`` over ``body``; returns ``(point, value)``."""
    res = default_resolution(body.dim) if resolution is None else int(resolution)
    pts = comparator_grid(body, res)
    vals = objective.values(pts)
    i = int(np.argmax(vals))
    return refine_point(body, objective.value, pts[i], res)
