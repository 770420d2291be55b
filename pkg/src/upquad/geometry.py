"""Convex domains inside the unit cube.

Every algorithm in the package talks to its domain through a small set of
capabilities: membership, separation, projection onto the affine hull, exact
Euclidean projection (where cheap), shrinking toward an interior point and
uniform sampling of unit directions in the hull's linear part.

Three concrete kinds are supported:

* :class:`AxisBox` -- ``lo <= x <= hi`` (coordinates with ``lo == hi`` make the
  box lower dimensional);
* :class:`HalfspacePolytope` -- ``A x <= b`` intersected with ``[0, 1]^d``;
* :class:`BudgetedBox` -- ``[0, 1]^d`` with ``sum(x) <= s``.

Shrinking produces a :class:`ShrunkBody`, the image ``s K + b`` of a root body
under a positive scaling, which delegates all oracles back to the root.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

TOL_GEOM = 1e-9

__all__ = [
    "TOL_GEOM",
    "ConvexBody",
    "AxisBox",
    "HalfspacePolytope",
    "BudgetedBox",
    "ShrunkBody",
    "UnsupportedProjection",
    "DegenerateBody",
    "body_from_json",
]


class UnsupportedProjection(NotImplementedError):
    """Raised when exact Euclidean projection is requested for a kind without one."""


class DegenerateBody(ValueError):
    """Raised for empty bodies or bodies whose affine hull is a single point."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


class ConvexBody:
    """Common surface of all domains.

    Subclasses set ``dim``, ``center``, ``inner_radius``, ``diameter``,
    ``affine_basis`` (``d x k`` orthonormal columns) and ``min_inf_point`` and
    implement ``_violations`` / ``_separate`` / ``euclid_project``.
    """

    kind: str = "abstract"
    dim: int
    center: np.ndarray
    inner_radius: float
    diameter: float
    affine_basis: np.ndarray
    min_inf_point: np.ndarray

    # -- structure -----------------------------------------------------------

    @property
    def k(self) -> int:
        """Dimension of the affine hull."""
        return self.affine_basis.shape[1]

    @property
    def full_dimensional(self) -> bool:
        return self.k == self.dim

    @property
    def root(self) -> "ConvexBody":
        return self

    def to_local(self, point) -> np.ndarray:
        """Map a point of the root body into this body (identity for roots)."""
        return np.asarray(point, dtype=float)

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a point of length {self.dim}, got shape {x.shape}")
        return x

    # -- oracles -------------------------------------------------------------

    def membership(self, x) -> bool:
        x = self._check(x)
        return self._max_violation(x) <= TOL_GEOM

    def contains(self, X) -> np.ndarray:
        """Vectorised membership for the rows of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self._max_violations(X) <= TOL_GEOM

    def _max_violations(self, X) -> np.ndarray:
        return np.array([self._max_violation(x) for x in X])

    def separate(self, y) -> Optional[np.ndarray]:
        """Return ``None`` if ``y`` is a member, else a unit normal ``g`` with
        ``<y - x, g> > 0`` for every member ``x``."""
        y = self._check(y)
        if self._max_violation(y) <= TOL_GEOM:
            return None
        return self._separate(y)

    def affine_project(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.full_dimensional:
            return y.copy()
        B = self.affine_basis
        return self.center + B @ (B.T @ (y - self.center))

    def project_direction(self, g) -> np.ndarray:
        """Orthogonal projection of a direction onto the hull's linear part."""
        g = np.asarray(g, dtype=float)
        if self.full_dimensional:
            return g
        B = self.affine_basis
        return B @ (B.T @ g)

    def euclid_project(self, y) -> np.ndarray:
        raise UnsupportedProjection(f"no exact projection for {self.kind}")

    @property
    def supports_projection(self) -> bool:
        try:
            self.euclid_project(self.center)
        except UnsupportedProjection:
            return False
        return True

    def sample_sphere_L0(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform unit vector in the linear part of the affine hull."""
        if self.k == 0:
            raise DegenerateBody("affine hull is a point; no sphere to sample")
        u = rng.standard_normal(self.k)
        v = self.affine_basis @ u
        return v / np.linalg.norm(v)

    def shrink(self, delta: float) -> "ShrunkBody":
        """Return ``(1 - delta/r) K + (delta/r) c``."""
        r = self.inner_radius
        if not 0.0 <= delta < r:
            raise ValueError(f"shrink parameter must lie in [0, r={r}), got {delta}")
        lam = delta / r
        return ShrunkBody(self.root, *self._compose(1.0 - lam, lam * self.center))

    def _compose(self, scale: float, offset: np.ndarray):
        # root coordinates -> this body is identity
        return scale, offset

    # -- sampling helpers (tests, grid oracles) ------------------------------

    def sample_members(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Rejection-sample ``n`` members from the bounding region of the hull."""
        out = []
        c, B, D = self.center, self.affine_basis, max(self.diameter, 1e-12)
        lo, hi = self._bounding_box()
        while len(out) < n:
            m = max(4 * (n - len(out)), 64)
            if self.full_dimensional:
                pts = rng.uniform(lo, hi, size=(m, self.dim))
            else:
                u = rng.uniform(-D, D, size=(m, self.k))
                pts = c + u @ B.T
            out.extend(pts[self._max_violations(pts) <= TOL_GEOM])
        return np.array(out[:n])

    def _bounding_box(self):
        return np.zeros(self.dim), np.ones(self.dim)

    def to_json(self) -> dict:
        raise NotImplementedError

    def __repr__(self) -> str:
        return (
            f"{type(self).__name__}(dim={self.dim}, k={self.k}, "
            f"r={self.inner_radius:.4g}, D={self.diameter:.4g})"
        )


# ---------------------------------------------------------------------------
# Axis-aligned boxes
# ---------------------------------------------------------------------------


class AxisBox(ConvexBody):
    kind = "axis_box"

    def __init__(self, lo: Sequence[float], hi: Sequence[float]):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be vectors of equal length")
        if np.any(hi < lo):
            raise DegenerateBody("empty box: hi < lo")
        free = hi - lo > 0
        if not free.any():
            raise DegenerateBody("box is a single point")
        self.dim = lo.size
        self.lo, self.hi = _frozen(lo), _frozen(hi)
        self.center = _frozen((lo + hi) / 2)
        self.inner_radius = float(np.min((hi - lo)[free]) / 2)
        self.diameter = float(np.linalg.norm(hi - lo))
        self.affine_basis = _frozen(np.eye(self.dim)[:, free])
        self.min_inf_point = _frozen(np.clip(0.0, lo, hi))

    def _max_violation(self, x) -> float:
        return float(max(np.max(self.lo - x), np.max(x - self.hi)))

    def _max_violations(self, X):
        return np.maximum((self.lo - X).max(axis=1), (X - self.hi).max(axis=1))

    def _separate(self, y):
        lower = self.lo - y
        upper = y - self.hi
        i_lo, i_hi = int(np.argmax(lower)), int(np.argmax(upper))
        g = np.zeros(self.dim)
        if lower[i_lo] >= upper[i_hi]:
            g[i_lo] = -1.0
        else:
            g[i_hi] = 1.0
        return g

    def euclid_project(self, y):
        return np.clip(np.asarray(y, dtype=float), self.lo, self.hi)

    def _bounding_box(self):
        return self.lo, self.hi

    def to_json(self):
        return {"kind": self.kind, "lo": self.lo.tolist(), "hi": self.hi.tolist()}


# ---------------------------------------------------------------------------
# Polytopes (A x <= b within the unit cube)
# ---------------------------------------------------------------------------


def _with_box_rows(A: np.ndarray, b: np.ndarray):
    d = A.shape[1]
    A_full = np.vstack([A, np.eye(d), -np.eye(d)])
    b_full = np.concatenate([b, np.ones(d), np.zeros(d)])
    return A_full, b_full


def _lp_min(cost, A, b):
    res = linprog(cost, A_ub=A, b_ub=b, bounds=[(None, None)] * A.shape[1], method="highs")
    if res.status != 0:
        raise DegenerateBody(f"linear program failed: {res.message}")
    return res.x, float(res.fun)


def _polytope_geometry(A: np.ndarray, b: np.ndarray):
    """Affine hull, Chebyshev center within the hull, and a feasible point."""
    d = A.shape[1]
    eq = []
    x0 = None
    for i in range(A.shape[0]):
        x, val = _lp_min(A[i], A, b)
        if x0 is None:
            x0 = x
        norm = np.linalg.norm(A[i])
        if norm > 0 and val >= b[i] - 1e-9 * max(1.0, norm):
            eq.append(i)
    B = null_space(A[eq]) if eq else np.eye(d)
    if B.shape[1] == 0:
        raise DegenerateBody("polytope is a single point")
    # Chebyshev ball inside the hull: x = x0 + B u, maximise rho.
    ineq = [i for i in range(A.shape[0]) if i not in eq]
    rows, rhs = [], []
    for i in ineq:
        a_red = B.T @ A[i]
        nrm = np.linalg.norm(a_red)
        if nrm < 1e-12:
            continue
        rows.append(np.concatenate([a_red, [nrm]]))
        rhs.append(b[i] - A[i] @ x0)
    k = B.shape[1]
    cost = np.zeros(k + 1)
    cost[-1] = -1.0
    bounds = [(None, None)] * k + [(0, None)]
    res = linprog(cost, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds, method="highs")
    if res.status != 0 or res.x[-1] <= 1e-12:
        raise DegenerateBody("could not find an interior ball")
    u, rho = res.x[:k], float(res.x[-1])
    return x0 + B @ u, rho, B


def _support_diameter(A, b, B, rng_seed: int = 0) -> float:
    """Diameter by support-function ascent: widths along directions that are
    refined toward the difference of the two support points."""
    rng = np.random.default_rng(rng_seed)
    k = B.shape[1]
    dirs = [B[:, j] for j in range(k)]
    dirs += [B @ rng.standard_normal(k) for _ in range(2 * k + 4)]
    best = 0.0
    for u in dirs:
        u = u / np.linalg.norm(u)
        for _ in range(12):
            hi, _ = _lp_min(-u, A, b)
            lo, _ = _lp_min(u, A, b)
            diff = hi - lo
            width = float(np.linalg.norm(diff))
            best = max(best, width)
            if width < 1e-12:
                break
            new_u = diff / width
            if np.linalg.norm(new_u - u) < 1e-10:
                break
            u = new_u
    return best


class HalfspacePolytope(ConvexBody):
    """``{x in [0, 1]^d : A x <= b}``."""

    kind = "polytope"

    def __init__(self, A, b, *, center=None, inner_radius=None, diameter=None):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(-1)
        if A.shape[0] != b.size:
            raise ValueError("A and b have inconsistent shapes")
        self.dim = A.shape[1]
        self.A, self.b = _frozen(A), _frozen(b)
        A_full, b_full = _with_box_rows(A, b)
        self._A_full, self._b_full = A_full, b_full
        self._row_norms = np.linalg.norm(A_full, axis=1)
        c, r, B = _polytope_geometry(A_full, b_full)
        self.affine_basis = _frozen(B)
        self.center = _frozen(c if center is None else center)
        self.inner_radius = float(r if inner_radius is None else inner_radius)
        self.diameter = float(
            _support_diameter(A_full, b_full, B) if diameter is None else diameter
        )
        self.min_inf_point = _frozen(self._min_inf())

    def _min_inf(self):
        zero = np.zeros(self.dim)
        if self._max_violation(zero) <= TOL_GEOM:
            return zero
        # min t  s.t.  x in K, x_i <= t  (x >= 0 inside the cube)
        d = self.dim
        A = np.hstack([self._A_full, np.zeros((self._A_full.shape[0], 1))])
        A = np.vstack([A, np.hstack([np.eye(d), -np.ones((d, 1))])])
        b = np.concatenate([self._b_full, np.zeros(d)])
        cost = np.zeros(d + 1)
        cost[-1] = 1.0
        x, _ = _lp_min(cost, A, b)
        return x[:d]

    def _max_violation(self, x) -> float:
        return float(np.max(self._A_full @ x - self._b_full))

    def _max_violations(self, X):
        return (X @ self._A_full.T - self._b_full).max(axis=1)

    def _separate(self, y):
        viol = (self._A_full @ y - self._b_full) / self._row_norms
        i = int(np.argmax(viol))
        return self._A_full[i] / self._row_norms[i]

    def to_json(self):
        return {"kind": self.kind, "A": self.A.tolist(), "b": self.b.tolist()}


# ---------------------------------------------------------------------------
# Budgeted box
# ---------------------------------------------------------------------------


def _project_capped_simplex(y: np.ndarray, s: float) -> np.ndarray:
    """Projection onto ``{0 <= x <= 1, sum x <= s}``."""
    x = np.clip(y, 0.0, 1.0)
    if x.sum() <= s:
        return x
    # find tau >= 0 with sum(clip(y - tau, 0, 1)) = s; the map is piecewise
    # linear and non-increasing in tau with kinks at y_i - 1 and y_i.
    kinks = np.unique(np.concatenate([y - 1.0, y]))
    kinks = kinks[kinks >= 0.0]
    kinks = np.concatenate([[0.0], kinks])

    def total(tau):
        return float(np.clip(y - tau, 0.0, 1.0).sum())

    prev_tau, prev_val = kinks[0], total(kinks[0])
    for tau in kinks[1:]:
        val = total(tau)
        if val <= s:
            # linear between prev_tau and tau
            if prev_val == val:
                t_star = tau
            else:
                t_star = prev_tau + (prev_val - s) * (tau - prev_tau) / (prev_val - val)
            return np.clip(y - t_star, 0.0, 1.0)
        prev_tau, prev_val = tau, val
    return np.clip(y - kinks[-1], 0.0, 1.0)


class BudgetedBox(HalfspacePolytope):
    """``{x in [0, 1]^d : sum(x) <= budget}`` with exact projection."""

    kind = "budgeted_box"

    def __init__(self, dim: int, budget: float):
        if dim < 1:
            raise ValueError("dim must be positive")
        if budget <= 0:
            raise DegenerateBody("budget must be positive")
        self.budget = float(budget)
        super().__init__(np.ones((1, dim)), [budget])

    def euclid_project(self, y):
        return _project_capped_simplex(np.asarray(y, dtype=float), self.budget)

    def _separate(self, y):
        box_lo = -y
        box_hi = y - 1.0
        budget = (y.sum() - self.budget) / math.sqrt(self.dim)
        i_lo, i_hi = int(np.argmax(box_lo)), int(np.argmax(box_hi))
        best = max(box_lo[i_lo], box_hi[i_hi], budget)
        if budget == best:
            return np.full(self.dim, 1.0 / math.sqrt(self.dim))
        g = np.zeros(self.dim)
        if box_hi[i_hi] == best:
            g[i_hi] = 1.0
        else:
            g[i_lo] = -1.0
        return g

    def to_json(self):
        return {"kind": self.kind, "dim": self.dim, "budget": self.budget}


# ---------------------------------------------------------------------------
# Shrunk bodies
# ---------------------------------------------------------------------------


class ShrunkBody(ConvexBody):
    """The body ``scale * root + offset`` with ``0 < scale <= 1``.

    Center and affine basis are inherited; the inner radius and diameter scale.
    ``min_inf_point`` is the image of the root's point (a member, not
    necessarily the minimiser of the sup norm over the shrunk body).
    """

    def __init__(self, root: ConvexBody, scale: float, offset):
        if not 0 < scale <= 1:
            raise ValueError("scale must lie in (0, 1]")
        self._root = root
        self.scale = float(scale)
        self.offset = _frozen(offset)
        self.kind = root.kind
        self.dim = root.dim
        self.center = root.center
        self.affine_basis = root.affine_basis
        self.inner_radius = self.scale * root.inner_radius
        self.diameter = self.scale * root.diameter
        self.min_inf_point = _frozen(self.to_local(root.min_inf_point))

    @property
    def root(self):
        return self._root

    @property
    def delta(self) -> float:
        """Total shrink distance relative to the root."""
        return self._root.inner_radius - self.inner_radius

    def to_local(self, point):
        return self.scale * np.asarray(point, dtype=float) + self.offset

    def _to_root(self, x):
        return (x - self.offset) / self.scale

    def _compose(self, scale, offset):
        return self.scale * scale, scale * self.offset + offset

    def _max_violation(self, x):
        return self._root._max_violation(self._to_root(x))

    def _max_violations(self, X):
        return self._root._max_violations(self._to_root(X))

    def _separate(self, y):
        return self._root._separate(self._to_root(y))

    def euclid_project(self, y):
        p = self._root.euclid_project(self._to_root(np.asarray(y, dtype=float)))
        return self.to_local(p)

    def _bounding_box(self):
        lo, hi = self._root._bounding_box()
        return self.to_local(lo), self.to_local(hi)

    def to_json(self):
        return {"kind": "shrunk", "root": self._root.to_json(), "delta": self.delta}


def body_from_json(spec: dict) -> ConvexBody:
    """Build a body from its JSON description."""
    kind = spec.get("kind")
    if kind == "axis_box":
        return AxisBox(spec["lo"], spec["hi"])
    if kind == "polytope":
        return HalfspacePolytope(spec["A"], spec["b"])
    if kind == "budgeted_box":
        return BudgetedBox(int(spec["dim"]), float(spec["budget"]))
    if kind == "shrunk":
        return body_from_json(spec["root"]).shrink(float(spec["delta"]))
    raise ValueError(f"unknown body kind {kind!r}")
