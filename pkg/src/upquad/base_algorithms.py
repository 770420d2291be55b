"""Online linear maximizers: projection-free gradient ascent, Improved Ader, projected OGA."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import ConvexBody, UnsupportedProjection
from .protocol import SemiBanditAgent

__all__ = [
    "InfeasibleProjectionAbort",
    "so_ip",
    "SOOGAParams",
    "SOOGA",
    "IAParams",
    "ImprovedAder",
    "ProjectedOGA",
    "agent_from_json",
]


class InfeasibleProjectionAbort(RuntimeError):
    """The separation walk ran longer than its worst-case bound allows."""


def so_ip(body: ConvexBody, delta: float, y0) -> tuple:
    """Infeasible projection of ``y0`` using only the separation oracle.

    Returns ``(p, calls)`` where ``calls`` counts separation-oracle
    invocations, the last of which certified membership. Every point of the
    body shrunk by ``delta`` is at least as close to ``p`` as to ``y0``.
    """
    if not 0 < delta < body.inner_radius:
        raise ValueError(f"delta must lie in (0, r={body.inner_radius}), got {delta}")
    c = body.center
    y = body.affine_project(np.asarray(y0, dtype=float))
    dist = float(np.linalg.norm(y - c))
    if body.diameter > 0 and dist > body.diameter:
        y = c + (y - c) * (body.diameter / dist)
    limit = math.ceil(body.diameter ** 2 / delta ** 2) + 2
    calls = 0
    while True:
        calls += 1
        g = body.separate(y)
        if g is None:
            return y, calls
        if calls > limit:
            raise InfeasibleProjectionAbort(
                f"separation walk exceeded {limit} calls at {y.tolist()}; separation oracle looks broken")
        g = body.project_direction(g)
        norm = float(np.linalg.norm(g))
        if norm == 0.0:
            raise InfeasibleProjectionAbort("separating direction is orthogonal to the affine hull")
        y = y - delta * g / norm


@dataclass(frozen=True)
class SOOGAParams:
    """Shrink distance ``delta = v / sqrt(T)`` and step ``eta = v r / (2 M1 sqrt(T))``."""

    v: float
    T: int
    inner_radius: float
    grad_bound: float

    @classmethod
    def default(cls, T: int, inner_radius: float, grad_bound: float) -> "SOOGAParams":
        delta = min(0.4 * inner_radius, T ** -0.5)
        return cls(delta * math.sqrt(T), T, inner_radius, grad_bound)

    @property
    def delta(self) -> float:
        return self.v / math.sqrt(self.T)

    @property
    def eta(self) -> float:
        return self.v * self.inner_radius / (2.0 * self.grad_bound * math.sqrt(self.T))

    def validate(self):
        if not (0 < self.delta < min(1.0, self.inner_radius)):
            raise ValueError(f"delta={self.delta} must be in (0, min(1, r))")


class SOOGA(SemiBanditAgent):
    """Online gradient ascent whose projection step is the separation walk ``so_ip``.

    ``v`` fixes the free scale; by default it is chosen so the shrink
    distance is ``min(0.4 r, 1/sqrt(T))``. ``eta`` overrides the step size.
    """

    regret_exponent = 0.5

    def __init__(self, v: Optional[float] = None, eta: Optional[float] = None):
        self.v = v
        self.eta_override = eta

    def begin(self, T, body, rng, **kw):
        super().begin(T, body, rng, **kw)
        if self.v is None:
            self.params = SOOGAParams.default(self.T, body.inner_radius, self.grad_bound)
        else:
            self.params = SOOGAParams(self.v, self.T, body.inner_radius, self.grad_bound)
        self.params.validate()
        self.delta = self.params.delta
        self.eta = self.params.eta if self.eta_override is None else float(self.eta_override)
        self.current = body.center.copy()
        self.iterations = []

    def update(self, t, grad):
        y, calls = so_ip(self.body, self.delta, self.current + self.eta * grad)
        self.iterations.append(calls)
        self.current = y

    def describe(self):
        return {"so_oga.delta": self.delta, "so_oga.eta": self.eta}


def _require_projection(body: ConvexBody, who: str):
    if not body.supports_projection:
        raise UnsupportedProjection(f"{who} needs exact Euclidean projection onto {type(body.root).__name__}")


class ProjectedOGA(SemiBanditAgent):
    """Projected gradient ascent with step ``eta0 / sqrt(t)``; ``eta0`` defaults to ``D / M1``."""

    regret_exponent = 0.5

    def __init__(self, eta0: Optional[float] = None):
        self.eta0 = eta0

    def begin(self, T, body, rng, **kw):
        super().begin(T, body, rng, **kw)
        _require_projection(body, "projected OGA")
        self.step0 = body.diameter / self.grad_bound if self.eta0 is None else float(self.eta0)
        self.current = body.center.copy()

    def update(self, t, grad):
        self.current = self.body.euclid_project(self.current + self.step0 / math.sqrt(t) * grad)

    def describe(self):
        return {"oga.eta0": self.step0}


@dataclass(frozen=True)
class IAParams:
    """Step-size grid, Hedge rate and prior of the Improved Ader ensemble."""

    T: int
    diameter: float
    grad_bound: float

    @property
    def n_experts(self) -> int:
        return math.ceil(0.5 * math.log2(1.0 + 4.0 * self.T / 7.0)) + 1

    @property
    def etas(self) -> np.ndarray:
        base = self.diameter / self.grad_bound * math.sqrt(7.0 / (2.0 * self.T))
        return base * 2.0 ** np.arange(self.n_experts)

    @property
    def hedge_rate(self) -> float:
        return math.sqrt(2.0 / (self.T * self.grad_bound ** 2 * self.diameter ** 2))

    @property
    def initial_weights(self) -> np.ndarray:
        n = self.n_experts
        i = np.arange(1, n + 1, dtype=float)
        return (1.0 + 1.0 / n) / (i * (i + 1.0))


class ImprovedAder(SemiBanditAgent):
    """Hedge over projected-OGA experts with geometrically spaced step sizes.

    The mixture is played; each expert is scored by the linearized reward
    ``<o_t, x_expert - x_t>`` and reweighted by ``exp(+rate * reward)``.
    Passing ``etas`` replaces the default grid (the prior stays ``C/(i(i+1))``
    renormalized).
    """

    regret_exponent = 0.5

    def __init__(self, etas: Optional[Sequence[float]] = None):
        self.custom_etas = None if etas is None else np.asarray(etas, dtype=float)

    def begin(self, T, body, rng, **kw):
        super().begin(T, body, rng, **kw)
        _require_projection(body, "Improved Ader")
        self.params = IAParams(self.T, body.diameter, self.grad_bound)
        if self.custom_etas is None:
            self.etas = self.params.etas
            w = self.params.initial_weights
        else:
            self.etas = np.sort(self.custom_etas)
            i = np.arange(1, self.etas.size + 1, dtype=float)
            w = 1.0 / (i * (i + 1.0))
            w /= w.sum()
        self.rate = self.params.hedge_rate
        self.log_w = np.log(w)
        self.experts = np.tile(body.center, (self.etas.size, 1))
        self.current = self.weights @ self.experts

    @property
    def weights(self) -> np.ndarray:
        z = self.log_w - self.log_w.max()
        w = np.exp(z)
        return w / w.sum()

    def update(self, t, grad):
        rewards = (self.experts - self.current) @ grad
        self.log_w = self.log_w + self.rate * rewards
        self.log_w -= self.log_w.max()
        stepped = self.experts + self.etas[:, None] * grad[None, :]
        self.experts = np.array([self.body.euclid_project(y) for y in stepped])
        self.current = self.weights @ self.experts

    def describe(self):
        return {"ia.n_experts": self.etas.size, "ia.rate": self.rate}


def agent_from_json(spec: dict):
    algo = spec.get("algo")
    if algo == "so_oga":
        return SOOGA(v=spec.get("v"))
    if algo == "ia":
        return ImprovedAder()
    if algo == "oga":
        return ProjectedOGA(eta0=spec.get("eta0"))
    raise ValueError(f"unknown base algorithm {algo!r}")
