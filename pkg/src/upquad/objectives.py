"""Up-concave test functions, query oracles and boosted surrogate gradients."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "ObjectiveSpec",
    "QuadraticObjective",
    "CoverageObjective",
    "SumObjective",
    "QueryOracle",
    "make_dr_quadratic",
    "make_linear",
    "make_coverage_like",
    "noisy_oracle",
    "exact_oracle",
    "OracleFactory",
    "sum_objectives",
    "boosted_surrogate_grad",
    "mono_zero_density",
    "nonmono_density",
    "objective_from_json",
]


class ObjectiveSpec:
    """An up-concave function on ``[0, 1]^d`` with its declared class parameters.

    ``gamma``/``mu`` are the weak/strong up-concavity parameters, ``curvature``
    is set for monotone functions only, ``M0`` bounds ``|f|`` and ``M1`` bounds
    the gradient norm over the unit cube.
    """

    dim: int
    gamma: float = 1.0
    mu: float = 0.0
    curvature: Optional[float] = None
    monotone: bool = False
    nonneg: bool = False
    M0: float = 0.0
    M1: float = 0.0

    def value(self, x) -> float:
        return float(self.values(np.asarray(x, dtype=float)[None, :])[0])

    def values(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad(self, x) -> np.ndarray:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


class QuadraticObjective(ObjectiveSpec):
    """``f(x) = x^T H x / 2 + h^T x + offset``."""

    family = "dr_quadratic"

    def __init__(self, H, h, offset=0.0, *, gamma=1.0, mu=0.0, curvature=None,
                 monotone=False, nonneg=False, M0=0.0, M1=0.0):
        self.H = np.array(H, dtype=float)
        self.h = np.array(h, dtype=float)
        self.offset = float(offset)
        self.dim = self.h.size
        self.gamma, self.mu, self.curvature = gamma, mu, curvature
        self.monotone, self.nonneg = monotone, nonneg
        self.M0, self.M1 = M0, M1
        self._linear = not self.H.any()

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self._linear:
            return float(self.h @ x + self.offset)
        return float(0.5 * x @ self.H @ x + self.h @ x + self.offset)

    def values(self, X):
        X = np.atleast_2d(X)
        out = X @ self.h + self.offset
        if not self._linear:
            out = out + 0.5 * np.einsum("ij,jk,ik->i", X, self.H, X)
        return out

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        if self._linear:
            return self.h.copy()
        return self.H @ x + self.h

    def to_json(self):
        return {"kind": "dr_quadratic", "H": self.H.tolist(), "h": self.h.tolist(),
                "offset": self.offset}


class CoverageObjective(ObjectiveSpec):
    """``f(x) = sum_i a_i (1 - exp(-x_i))``: smooth, monotone, DR-submodular."""

    family = "coverage"

    def __init__(self, a):
        a = np.array(a, dtype=float)
        if np.any(a < 0):
            raise ValueError("coverage weights must be non-negative")
        self.a = a
        self.dim = a.size
        self.monotone = True
        self.nonneg = True
        self.curvature = 1.0 - math.exp(-1.0) if a.any() else 0.0
        self.M0 = float(a.sum() * (1.0 - math.exp(-1.0)))
        self.M1 = float(np.linalg.norm(a))

    def value(self, x):
        return float(self.a @ (1.0 - np.exp(-np.asarray(x, dtype=float))))

    def values(self, X):
        return (1.0 - np.exp(-np.atleast_2d(X))) @ self.a

    def grad(self, x):
        return self.a * np.exp(-np.asarray(x, dtype=float))

    def to_json(self):
        return {"kind": "coverage", "a": self.a.tolist()}


class SumObjective(ObjectiveSpec):
    """Pointwise sum of heterogeneous objectives (no class bookkeeping)."""

    family = "sum"

    def __init__(self, parts: Sequence[ObjectiveSpec]):
        self.parts = list(parts)
        self.dim = self.parts[0].dim
        self.M0 = sum(p.M0 for p in self.parts)
        self.M1 = sum(p.M1 for p in self.parts)

    def value(self, x):
        return sum(p.value(x) for p in self.parts)

    def values(self, X):
        return sum(p.values(X) for p in self.parts)

    def grad(self, x):
        return sum(p.grad(x) for p in self.parts)


def sum_objectives(objs: Sequence[ObjectiveSpec], weights=None) -> ObjectiveSpec:
    """Sum a sequence of objectives, merging parameters within one family."""
    objs = list(objs)
    if not objs:
        raise ValueError("nothing to sum")
    w = np.ones(len(objs)) if weights is None else np.asarray(weights, dtype=float)
    if all(isinstance(o, QuadraticObjective) for o in objs):
        H = sum(wi * o.H for wi, o in zip(w, objs))
        h = sum(wi * o.h for wi, o in zip(w, objs))
        off = float(sum(wi * o.offset for wi, o in zip(w, objs)))
        return QuadraticObjective(H, h, off)
    if all(isinstance(o, CoverageObjective) for o in objs):
        return CoverageObjective(sum(wi * o.a for wi, o in zip(w, objs)))
    return SumObjective([_Scaled(o, wi) for o, wi in zip(objs, w)])


class _Scaled(ObjectiveSpec):
    def __init__(self, base, weight):
        self.base, self.weight = base, float(weight)
        self.dim = base.dim
        self.M0, self.M1 = abs(weight) * base.M0, abs(weight) * base.M1

    def value(self, x):
        return self.weight * self.base.value(x)

    def values(self, X):
        return self.weight * self.base.values(X)

    def grad(self, x):
        return self.weight * self.base.grad(x)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def _cube_vertices(d: int) -> np.ndarray:
    return np.array(list(itertools.product((0.0, 1.0), repeat=d)))


def make_dr_quadratic(H, h, offset: float = 0.0, *, auto_offset: bool = False) -> QuadraticObjective:
    """DR-submodular quadratic ``x^T H x / 2 + h^T x + offset`` on ``[0, 1]^d``.

    ``H`` must be symmetric with non-positive entries. The function is concave
    along every coordinate, so its minimum over the cube sits at a vertex; that
    minimum decides ``nonneg`` and, with ``auto_offset``, raises the offset to
    make the function non-negative.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    h = np.asarray(h, dtype=float).reshape(-1)
    d = h.size
    if H.shape != (d, d):
        raise ValueError(f"H must be {d}x{d}")
    if not np.allclose(H, H.T):
        raise ValueError("H must be symmetric")
    if np.any(H > 0):
        raise ValueError("H must have non-positive entries")

    grad_at_one = h + H.sum(axis=1)
    monotone = bool(np.all(grad_at_one >= 0))
    curvature = None
    if monotone:
        active = h > 0
        curvature = 0.0
        if active.any():
            curvature = float(1.0 - np.min(grad_at_one[active] / h[active]))
        curvature = min(max(curvature, 0.0), 1.0)

    enumerable = d <= 12
    if enumerable:
        V = _cube_vertices(d)
        vals = 0.5 * np.einsum("ij,jk,ik->i", V, H, V) + V @ h
        vmin = float(vals.min())
        M1 = float(np.max(np.linalg.norm(V @ H + h, axis=1)))
    else:
        # coordinate-wise bounds: grad_i ranges over [h_i + sum_j H_ij, h_i]
        vmin = float(np.sum(np.minimum(h, 0.0)) + 0.5 * H.sum())
        M1 = float(np.linalg.norm(np.maximum(np.abs(h), np.abs(grad_at_one))))
    if auto_offset and vmin + offset < 0:
        offset = -vmin
    fmin = vmin + offset
    nonneg = fmin >= -1e-12

    # up-concavity from 0 gives f(x) <= f(0) + <grad f(0), x> for x >= 0
    upper = offset + float(np.sum(np.maximum(h, 0.0)))
    if d <= 3:
        g = np.linspace(0.0, 1.0, 65)
        G = np.array(list(itertools.product(g, repeat=d)))
        gmax = float((0.5 * np.einsum("ij,jk,ik->i", G, H, G) + G @ h).max()) + offset
        upper = min(upper, gmax + M1 * math.sqrt(d) / 128.0)
    M0 = max(abs(fmin), abs(upper))
    return QuadraticObjective(H, h, offset, gamma=1.0, mu=0.0, curvature=curvature,
                              monotone=monotone, nonneg=bool(nonneg), M0=M0, M1=M1)


def make_linear(h, offset: float = 0.0) -> QuadraticObjective:
    h = np.asarray(h, dtype=float)
    return make_dr_quadratic(np.zeros((h.size, h.size)), h, offset)


def make_coverage_like(a) -> CoverageObjective:
    return CoverageObjective(a)


def objective_from_json(spec: dict) -> ObjectiveSpec:
    kind = spec.get("kind")
    if kind == "dr_quadratic":
        return make_dr_quadratic(spec["H"], spec["h"], spec.get("offset", 0.0),
                                 auto_offset=spec.get("auto_offset", False))
    if kind == "linear":
        return make_linear(spec["h"], spec.get("offset", 0.0))
    if kind == "coverage":
        return make_coverage_like(spec["a"])
    raise ValueError(f"unknown objective kind {kind!r}")


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


@dataclass
class QueryOracle:
    """Stochastic or deterministic zeroth/first order oracle for one function."""

    order: str
    deterministic: bool
    bound: float
    _sample: Callable = field(repr=False)
    rng: Optional[np.random.Generator] = field(default=None, repr=False)

    def sample(self, x, rng: Optional[np.random.Generator] = None):
        return self._sample(np.asarray(x, dtype=float), rng if rng is not None else self.rng)


def _uniform_ball(rng, d, radius):
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    return radius * rng.uniform() ** (1.0 / d) * u


def noisy_oracle(spec: ObjectiveSpec, order: str, sigma: float = 0.0,
                 rng: Optional[np.random.Generator] = None) -> QueryOracle:
    """Exact value/gradient plus noise drawn uniformly from the radius-``sigma`` ball."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if order not in ("zeroth", "first"):
        raise ValueError(f"unknown oracle order {order!r}")
    if order == "first":
        if sigma == 0:
            fn = lambda x, r: spec.grad(x)  # noqa: E731
        else:
            fn = lambda x, r: spec.grad(x) + _uniform_ball(r, spec.dim, sigma)  # noqa: E731
        bound = spec.M1 + sigma
    else:
        if sigma == 0:
            fn = lambda x, r: spec.value(x)  # noqa: E731
        else:
            fn = lambda x, r: spec.value(x) + r.uniform(-sigma, sigma)  # noqa: E731
        bound = spec.M0 + sigma
    return QueryOracle(order, sigma == 0, bound, fn, rng)


def exact_oracle(spec: ObjectiveSpec, order: str = "first") -> QueryOracle:
    return noisy_oracle(spec, order, 0.0)


class OracleFactory:
    """Order-agnostic oracle source for one objective: ``factory("first")`` etc."""

    def __init__(self, spec: ObjectiveSpec, sigma: float = 0.0):
        self.spec = spec
        self.sigma = float(sigma)
        self._cache = {}

    def __call__(self, order: str) -> QueryOracle:
        if order not in self._cache:
            self._cache[order] = noisy_oracle(self.spec, order, self.sigma)
        return self._cache[order]


# ---------------------------------------------------------------------------
# boosted surrogates
# ---------------------------------------------------------------------------


def mono_zero_density(z, gamma: float):
    return gamma * np.exp(gamma * (np.asarray(z) - 1.0)) / (1.0 - math.exp(-gamma))


def nonmono_density(z):
    return 1.0 / (3.0 * (1.0 - np.asarray(z) / 2.0) ** 3)


def boosted_surrogate_grad(spec: ObjectiveSpec, setting, x, n_quad: int = 64) -> np.ndarray:
    """Gradient of the boosted surrogate by Gauss-Legendre quadrature.

    ``setting`` is ``("mono_zero", gamma)`` or ``("nonmono", x_low)``. The
    integrand is the gradient of ``f`` at the rescaled point weighted by the
    law of the boosting variable on ``[0, 1]``.
    """
    if n_quad < 16:
        raise ValueError("n_quad must be at least 16")
    name, param = setting
    x = np.asarray(x, dtype=float)
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    z = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    if name == "mono_zero":
        dens = mono_zero_density(z, float(param))
        pts = z[:, None] * x[None, :]
    elif name == "nonmono":
        x_low = np.asarray(param, dtype=float)
        dens = nonmono_density(z)
        pts = (z[:, None] / 2.0) * (x - x_low)[None, :] + x_low[None, :]
    else:
        raise ValueError(f"unknown setting {name!r}")
    grads = np.array([spec.grad(p) for p in pts])
    return (w * dens) @ grads
