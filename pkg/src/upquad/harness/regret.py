"""Static, adaptive and dynamic alpha-regret, plus log-log slope fits."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from ..geometry import ConvexBody
from ..objectives import sum_objectives
from .optimum import comparator_grid, default_resolution, refine_point

__all__ = [
    "RegretReport",
    "SlopeFit",
    "static_alpha_regret",
    "adaptive_regret",
    "dynamic_regret",
    "path_length",
    "max_subarray",
    "fit_regret_slope",
]

CLIP_FLOOR = 1e-6


@dataclass
class RegretReport:
    alpha: float
    static: Optional[float] = None
    adaptive: Optional[float] = None
    adaptive_window: Optional[tuple] = None
    dynamic: Optional[float] = None
    path_length: Optional[float] = None
    optimum: Optional[float] = None
    extra: dict = field(default_factory=dict)


def _objectives(transcript, objectives):
    objs = transcript.objectives if objectives is None else list(objectives)
    if len(objs) != transcript.T:
        raise ValueError("need one objective per round")
    return objs


def static_alpha_regret(transcript, alpha: float, body: ConvexBody, objectives=None,
                        resolution: Optional[int] = None, *, return_optimum: bool = False):
    """``alpha * max_u sum_t f_t(u) - sum_t f_t(played_t)`` with a grid-plus-refinement maximizer."""
    from .optimum import grid_optimum

    objs = _objectives(transcript, objectives)
    total = sum_objectives(objs)
    _, opt = grid_optimum(body, total, resolution)
    regret = alpha * opt - float(transcript.values.sum())
    return (regret, opt) if return_optimum else regret


def max_subarray(series) -> tuple:
    """Largest sum over non-empty contiguous windows: ``(value, start, end)`` (inclusive, 0-based)."""
    best, best_lo, best_hi = -np.inf, 0, 0
    cur, lo = 0.0, 0
    for i, v in enumerate(series):
        if cur <= 0:
            cur, lo = v, i
        else:
            cur += v
        if cur > best:
            best, best_lo, best_hi = cur, lo, i
    return float(best), best_lo, best_hi


def adaptive_regret(transcript, alpha: float, body: ConvexBody, objectives=None,
                    resolution: Optional[int] = None, *, static: Optional[float] = None):
    """Worst contiguous-window alpha-regret; exact over the comparator grid.

    Runs Kadane's recursion for every grid comparator at once, refines the
    winning comparator over its window, and never reports less than
    ``static`` (the full window is a candidate).
    """
    objs = _objectives(transcript, objectives)
    res = default_resolution(body.dim) if resolution is None else int(resolution)
    grid = comparator_grid(body, res)
    cache = {}
    n = grid.shape[0]
    cur = np.zeros(n)
    start = np.zeros(n, dtype=int)
    best = np.full(n, -np.inf)
    best_lo = np.zeros(n, dtype=int)
    best_hi = np.zeros(n, dtype=int)
    played_vals = transcript.values
    for t, f in enumerate(objs):
        key = id(f)
        if key not in cache:
            cache[key] = alpha * f.values(grid)
        delta = cache[key] - played_vals[t]
        restart = cur <= 0
        cur = np.where(restart, delta, cur + delta)
        start = np.where(restart, t, start)
        better = cur > best
        best = np.where(better, cur, best)
        best_lo = np.where(better, start, best_lo)
        best_hi = np.where(better, t, best_hi)
    j = int(np.argmax(best))
    lo, hi = int(best_lo[j]), int(best_hi[j])
    window = sum_objectives(objs[lo:hi + 1])
    earned = float(played_vals[lo:hi + 1].sum())
    _, val = refine_point(body, window.value, grid[j], res)
    value = max(float(best[j]), alpha * val - earned)
    window_span = (lo + 1, hi + 1)
    if static is not None and static > value:
        return static, (1, transcript.T)
    return value, window_span


def path_length(comparators) -> float:
    u = np.asarray(comparators, dtype=float)
    if len(u) < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(u, axis=0), axis=1).sum())


def dynamic_regret(transcript, alpha: float, comparators, body: Optional[ConvexBody] = None,
                   objectives=None):
    """``alpha * sum_t f_t(u_t) - sum_t f_t(played_t)`` and the comparator path length."""
    objs = _objectives(transcript, objectives)
    u = np.asarray(comparators, dtype=float)
    if u.shape != (transcript.T, transcript.dim):
        raise ValueError("need one comparator per round")
    if body is not None:
        inside = body.contains(u)
        if not inside.all():
            bad = int(np.argmin(inside))
            raise ValueError(f"comparator at round {bad + 1} is outside the body")
    total = 0.0
    for f, point in zip(objs, u):
        total += f.value(point)
    return alpha * total - float(transcript.values.sum()), path_length(u)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    stderr: float
    clipped: bool

    def within(self, lo: float = -np.inf, hi: float = np.inf) -> bool:
        return lo <= self.slope <= hi


def fit_regret_slope(horizons: Sequence[float], regrets: Sequence[float]) -> SlopeFit:
    """Least-squares slope of ``log(regret)`` against ``log(T)``.

    Regrets at or below zero are clipped to ``1e-6`` and flagged.
    """
    T = np.asarray(horizons, dtype=float)
    R = np.asarray(regrets, dtype=float)
    if T.size < 4 or T.size != R.size:
        raise ValueError("slope fit needs at least 4 (T, regret) pairs")
    clipped = bool(np.any(R <= CLIP_FLOOR))
    fit = stats.linregress(np.log(T), np.log(np.maximum(R, CLIP_FLOOR)))
    return SlopeFit(float(fit.slope), float(fit.intercept), float(fit.stderr), clipped)
