"""Independent reference computations shared by the test modules."""

import numpy as np
from scipy.optimize import minimize

from upquad.geometry import TOL_GEOM


def distance_to(body, y):
    """Euclidean distance from ``y`` to ``body``, by exact projection or a small QP."""
    y = np.asarray(y, dtype=float)
    if body.supports_projection:
        return float(np.linalg.norm(y - body.euclid_project(y)))
    root = body.root
    scale = getattr(body, "scale", 1.0)
    offset = getattr(body, "offset", np.zeros(body.dim))
    A, b = root._A_full, root._b_full
    cons = {"type": "ineq", "fun": lambda x: b - A @ ((x - offset) / scale),
            "jac": lambda x: -A / scale}
    x0 = body.center.copy()
    res = minimize(lambda x: 0.5 * np.sum((x - y) ** 2), x0, jac=lambda x: x - y,
                   constraints=[cons], method="SLSQP", options={"ftol": 1e-14, "maxiter": 500})
    x = res.x
    if not body.membership(x):
        # SLSQP can land a hair outside; pull toward the center until feasible
        c = body.center
        lam = 1.0
        while not body.membership(c + lam * (x - c)):
            lam *= 1 - 1e-6
        x = c + lam * (x - c)
    return float(np.linalg.norm(x - y))


def random_infeasible_start(body, rng, spread=1.5):
    while True:
        y = body.center + rng.uniform(-spread, spread, size=body.dim)
        if body._max_violation(y) > 10 * TOL_GEOM:
            return y
