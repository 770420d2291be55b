"""Quadratization schemes, boosted gradient queries and the OMBQ wrapper."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import ConvexBody, TOL_GEOM
from .protocol import Agent

__all__ = [
    "SETTINGS",
    "QUERY_ALGOS",
    "QuadratizationScheme",
    "SchemeError",
    "scheme_for",
    "bqm0_point",
    "bqm0_query",
    "bqm0_cdf",
    "bqn_point",
    "bqn_query",
    "bqn_cdf",
    "OMBQ",
]

SETTINGS = ("mono_general", "mono_zero", "nonmono")
QUERY_ALGOS = ("trivial", "bqm0", "bqn")


class SchemeError(ValueError):
    """Setting, parameters and body do not fit together."""


# ---------------------------------------------------------------------------
# boosting laws
# ---------------------------------------------------------------------------


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 0 < gamma <= 1:
        raise SchemeError(f"gamma must lie in (0, 1], got {gamma}")
    return gamma


def bqm0_point(gamma: float, p):
    """Inverse CDF of the monotone boosting law, density ``gamma e^{gamma(z-1)} / (1 - e^{-gamma})``."""
    gamma = _check_gamma(gamma)
    p = np.asarray(p, dtype=float)
    e = math.exp(-gamma)
    return 1.0 + np.log(e + p * (1.0 - e)) / gamma


def bqm0_cdf(gamma: float, z):
    e = math.exp(-gamma)
    return (np.exp(gamma * (np.asarray(z, dtype=float) - 1.0)) - e) / (1.0 - e)


def bqn_point(p):
    """Inverse CDF of the non-monotone boosting law, density ``1 / (3 (1 - z/2)^3)``."""
    p = np.asarray(p, dtype=float)
    return 2.0 * (1.0 - (1.0 + 3.0 * p) ** -0.5)


def bqn_cdf(z):
    z = np.asarray(z, dtype=float)
    return ((1.0 - z / 2.0) ** -2 - 1.0) / 3.0


def bqm0_query(gamma: float, oracle, x, rng: np.random.Generator, anchor=None):
    """Query the gradient oracle at ``anchor + z (x - anchor)`` with ``z`` from the monotone law.

    ``anchor`` defaults to the origin.
    """
    z = float(bqm0_point(gamma, rng.uniform()))
    x = np.asarray(x, dtype=float)
    if anchor is None:
        point = z * x
    else:
        point = anchor + z * (x - anchor)
    return oracle.sample(point, rng)


def bqn_query(x_low, oracle, x, rng: np.random.Generator):
    """Query the gradient oracle at ``(z/2)(x - x_low) + x_low`` with ``z`` from the non-monotone law."""
    z = float(bqn_point(rng.uniform()))
    x_low = np.asarray(x_low, dtype=float)
    return oracle.sample(0.5 * z * (np.asarray(x, dtype=float) - x_low) + x_low, rng)


# ---------------------------------------------------------------------------
# schemes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratizationScheme:
    setting: str
    alpha: float
    beta: float
    mu_out: float
    query_algo: str
    gamma: float = 1.0
    curvature: float = 0.0
    anchor: Optional[tuple] = None

    @property
    def anchor_array(self) -> Optional[np.ndarray]:
        return None if self.anchor is None else np.array(self.anchor, dtype=float)

    @property
    def identity_map(self) -> bool:
        return self.setting != "nonmono"

    def h_map(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.identity_map:
            return x
        return 0.5 * (x + self.anchor_array)


def scheme_for(setting: str, *, gamma: float = 1.0, mu: float = 0.0,
               curvature: float = 0.0, body: Optional[ConvexBody] = None,
               monotone: Optional[bool] = None) -> QuadratizationScheme:
    """Ratios, transfer coefficient, map and query algorithm for one of the three settings.

    ``body`` must be given for ``nonmono`` (whose anchor is the body's
    minimum-sup-norm point) and is checked to contain the origin for
    ``mono_zero``.
    """
    gamma = _check_gamma(gamma)
    if setting not in SETTINGS:
        raise SchemeError(f"unknown setting {setting!r}")
    if setting in ("mono_general", "mono_zero") and monotone is False:
        raise SchemeError(f"{setting} needs monotone objectives")
    if setting == "mono_general":
        if not 0 <= curvature <= 1:
            raise SchemeError(f"curvature must lie in [0, 1], got {curvature}")
        denom = 1.0 + curvature * gamma ** 2
        return QuadratizationScheme(setting, gamma ** 2 / denom, gamma / denom, float(mu),
                                    "trivial", gamma, float(curvature))
    if setting == "mono_zero":
        if body is not None and not body.root.membership(np.zeros(body.dim)):
            raise SchemeError("the boosted monotone scheme needs the origin inside the body")
        one_minus = -math.expm1(-gamma)
        anchor = None
        if body is not None and body.root is not body:
            anchor = tuple(float(v) for v in body.to_local(np.zeros(body.dim)))
        return QuadratizationScheme(setting, one_minus, one_minus / gamma, 0.0, "bqm0", gamma,
                                    0.0, anchor)
    if body is None:
        raise SchemeError("nonmono needs a body to locate its minimum-sup-norm point")
    x_low = body.to_local(body.root.min_inf_point) if body.root is not body else body.min_inf_point
    h = float(np.max(np.abs(body.root.min_inf_point)))
    return QuadratizationScheme(setting, (1.0 - h) / 4.0, 3.0 / 8.0, 0.0, "bqn", gamma, 0.0,
                                tuple(float(v) for v in x_low))


# ---------------------------------------------------------------------------
# OMBQ
# ---------------------------------------------------------------------------


class OMBQ(Agent):
    """Play ``h(x_t)`` for the base action ``x_t`` and feed the base a boosted gradient.

    With the trivial query algorithm and identity map this is the base agent
    itself, RNG draws included. Otherwise the wrapped agent issues a single
    query per round at the boosted point. When the game body is a shrunk
    copy of the body the scheme was built for, the anchor is moved to its
    image so queries stay inside the game body.
    """

    def __init__(self, base: Agent, scheme: QuadratizationScheme):
        if base.feedback_class != "semi_bandit":
            raise SchemeError("OMBQ needs a semi-bandit base agent")
        self.base = base
        self.scheme = scheme
        self.passthrough = scheme.query_algo == "trivial" and scheme.identity_map
        self.feedback_class = "semi_bandit" if self.passthrough else "full_info_first"
        self.queries_per_round = 1
        self.regret_exponent = base.regret_exponent
        self.deterministic = base.deterministic and scheme.query_algo == "trivial"

    def begin(self, T, body, rng, **kw):
        super().begin(T, body, rng, **kw)
        if self.scheme.setting == "mono_zero" and not body.root.membership(np.zeros(body.dim)):
            raise SchemeError("the boosted monotone scheme needs the origin inside the body")
        self.active = self.scheme
        if self.scheme.setting != "mono_general":
            root_anchor = (np.zeros(body.dim) if self.scheme.setting == "mono_zero"
                           else body.root.min_inf_point)
            anchor = None if body.root is body and self.scheme.setting == "mono_zero" else \
                tuple(float(v) for v in body.to_local(root_anchor))
            self.active = QuadratizationScheme(
                self.scheme.setting, self.scheme.alpha, self.scheme.beta, self.scheme.mu_out,
                self.scheme.query_algo, self.scheme.gamma, self.scheme.curvature, anchor)
        if self.active.anchor is not None and not body.membership(self.active.anchor_array):
            raise SchemeError("scheme anchor lies outside the body")
        self.base.begin(T, body, rng, **kw)
        self._x = None
        self._asked = False

    def action(self, t):
        self._x = np.asarray(self.base.action(t), dtype=float)
        self._asked = False
        return self.active.h_map(self._x)

    def inner_action(self):
        return None if self.passthrough else self._x

    def next_query(self, t):
        if self.passthrough:
            return self.base.next_query(t)
        if self._asked:
            return None
        self._asked = True
        self.base.next_query(t)  # keeps the base's query state machine in step
        z_draw = self.rng.uniform()
        if self.active.query_algo == "bqm0":
            z = float(bqm0_point(self.active.gamma, z_draw))
            anchor = self.active.anchor_array
            self._query = z * self._x if anchor is None else anchor + z * (self._x - anchor)
        elif self.active.query_algo == "bqn":
            z = float(bqn_point(z_draw))
            x_low = self.active.anchor_array
            self._query = 0.5 * z * (self._x - x_low) + x_low
        else:
            self._query = self._x
        if not self.body.membership(self._query):
            raise SchemeError(f"boosted query {self._query.tolist()} left the body by more than {TOL_GEOM}")
        return self._query

    def observe(self, t, response):
        self.base.observe(t, response)

    def end_round(self, t):
        self.base.end_round(t)

    def describe(self):
        info = dict(self.base.describe())
        if not self.passthrough:
            info["ombq.query_algo"] = self.active.query_algo
            info["ombq.alpha"] = self.active.alpha
        return info
