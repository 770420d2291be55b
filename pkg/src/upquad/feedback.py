"""Feedback-model conversions: value-only estimators, blocking and online-to-offline."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .geometry import ConvexBody
from .protocol import Agent, ObliviousAdversary, ProtocolError, run_game

__all__ = [
    "FOTZO",
    "STB",
    "FOTZO2P",
    "SFTT",
    "OfflineResult",
    "otb",
    "default_one_point_delta",
    "default_two_point_delta",
    "default_block_length",
]


def default_one_point_delta(T: int, inner_radius: float, base_exponent: float) -> float:
    return min(0.9 * inner_radius * (1.0 - 1e-6), T ** ((base_exponent - 1.0) / 2.0))


def default_two_point_delta(T: int, inner_radius: float) -> float:
    return min(0.9 * inner_radius, 1.0 / T)


def default_block_length(T: int, queries: int, base_exponent: float, theta: float = 0.0) -> int:
    length = int(round(T ** ((1.0 + theta - base_exponent) / (2.0 - base_exponent))))
    return max(queries + 1, length)


def _check_delta(delta: float, body: ConvexBody) -> float:
    if not 0 < delta < body.inner_radius:
        raise ValueError(f"smoothing radius {delta} must lie in (0, r={body.inner_radius})")
    return float(delta)


class _Smoothing(Agent):
    """Shared plumbing: the base runs on the shrunk body and sees estimated gradients."""

    def __init__(self, base: Agent, delta: Optional[float] = None):
        if base.oracle_order != "first":
            raise ProtocolError(f"{type(self).__name__} wraps a first-order agent")
        self.base = base
        self.delta_override = delta
        self.deterministic = False
        self.requires_deterministic_oracle = base.requires_deterministic_oracle

    def _default_delta(self, T, body):
        raise NotImplementedError

    def _base_grad_bound(self):
        raise NotImplementedError

    def begin(self, T, body, rng, **kw):
        super().begin(T, body, rng, **kw)
        delta = self._default_delta(self.T, body) if self.delta_override is None else self.delta_override
        self.delta = _check_delta(delta, body)
        self.inner_body = body.shrink(self.delta)
        self.dim_hull = body.k
        self.base.begin(T, self.inner_body, rng, grad_bound=self._base_grad_bound(),
                        value_bound=self.value_bound)

    def action(self, t):
        return self.base.action(t)

    def inner_action(self):
        return self.base.inner_action()

    def end_round(self, t):
        self.base.end_round(t)


class FOTZO(_Smoothing):
    """One-point spherical estimator for every query of a full-information first-order agent."""

    feedback_class = "full_info_zeroth"

    def __init__(self, base, delta=None):
        super().__init__(base, delta)
        self.queries_per_round = base.queries_per_round
        self.regret_exponent = (1.0 + base.regret_exponent) / 2.0

    def _default_delta(self, T, body):
        return default_one_point_delta(T, body.inner_radius, self.base.regret_exponent)

    def _base_grad_bound(self):
        return self.dim_hull / self.delta * self.value_bound

    def begin(self, T, body, rng, **kw):
        super().begin(T, body, rng, **kw)
        self._directions = deque()

    def next_query(self, t):
        y = self.base.next_query(t)
        if y is None:
            return None
        v = self.body.sample_sphere_L0(self.rng)
        self._directions.append(v)
        return np.asarray(y, dtype=float) + self.delta * v

    def observe(self, t, response):
        v = self._directions.popleft()
        self.base.observe(t, (self.dim_hull / self.delta) * float(response) * v)

    def describe(self):
        return {**self.base.describe(), "fotzo.delta": self.delta}


class STB(_Smoothing):
    """Semi-bandit to bandit: play a random sphere perturbation and feed the one-point estimate."""

    feedback_class = "bandit"
    queries_per_round = 1

    def __init__(self, base, delta=None):
        if base.feedback_class != "semi_bandit":
            raise ProtocolError("STB wraps a semi-bandit agent")
        super().__init__(base, delta)
        self.regret_exponent = (1.0 + base.regret_exponent) / 2.0

    def _default_delta(self, T, body):
        return default_one_point_delta(T, body.inner_radius, self.base.regret_exponent)

    def _base_grad_bound(self):
        return self.dim_hull / self.delta * self.value_bound

    def action(self, t):
        self._x = np.asarray(self.base.action(t), dtype=float)
        self._v = self.body.sample_sphere_L0(self.rng)
        self._played = self._x + self.delta * self._v
        self._asked = False
        return self._played

    def inner_action(self):
        return self._x

    def next_query(self, t):
        if self._asked:
            return None
        self._asked = True
        self.base.next_query(t)
        return self._played

    def observe(self, t, response):
        self.base.observe(t, (self.dim_hull / self.delta) * float(response) * self._v)

    def describe(self):
        return {**self.base.describe(), "stb.delta": self.delta}


class FOTZO2P(_Smoothing):
    """Two-point symmetric difference estimator; two value queries per base query."""

    feedback_class = "full_info_zeroth"

    def __init__(self, base, delta=None):
        super().__init__(base, delta)
        self.queries_per_round = 2 * base.queries_per_round
        self.regret_exponent = base.regret_exponent
        self.requires_deterministic_oracle = True

    def _default_delta(self, T, body):
        return default_two_point_delta(T, body.inner_radius)

    def _base_grad_bound(self):
        return self.dim_hull * self.grad_bound

    def begin(self, T, body, rng, **kw):
        super().begin(T, body, rng, **kw)
        self._outgoing = deque()
        self._pending = deque()
        self._first_value = None

    def next_query(self, t):
        if not self._outgoing:
            y = self.base.next_query(t)
            if y is None:
                return None
            y = np.asarray(y, dtype=float)
            v = self.body.sample_sphere_L0(self.rng)
            self._pending.append(v)
            self._outgoing.extend([y + self.delta * v, y - self.delta * v])
        return self._outgoing.popleft()

    def observe(self, t, response):
        if self._first_value is None:
            self._first_value = float(response)
            return
        v = self._pending.popleft()
        diff = self._first_value - float(response)
        self._first_value = None
        self.base.observe(t, (self.dim_hull / (2.0 * self.delta)) * diff * v)

    def describe(self):
        return {**self.base.describe(), "fotzo_2p.delta": self.delta}


class SFTT(Agent):
    """Hide a full-information agent's queries inside blocks of trivially queried rounds.

    The base runs for ``T // L`` rounds. In each block of ``L`` rounds its
    queries are played in uniformly permuted slots and its action fills the
    rest; responses are handed over in query order when the block ends. Any
    leftover rounds after the last full block repeat the last base action.
    """

    def __init__(self, base: Agent, block_length: Optional[int] = None):
        if base.feedback_class not in ("full_info_first", "full_info_zeroth", "semi_bandit", "bandit"):
            raise ProtocolError("SFTT needs a full-information base agent")
        if not base.observation_independent_queries:
            raise ProtocolError("SFTT needs queries that do not depend on same-round observations")
        self.base = base
        self.block_override = block_length
        self.feedback_class = "semi_bandit" if base.oracle_order == "first" else "bandit"
        self.queries_per_round = 1
        self.regret_exponent = 1.0 / (2.0 - base.regret_exponent)
        self.deterministic = False
        self.requires_deterministic_oracle = base.requires_deterministic_oracle

    def begin(self, T, body, rng, **kw):
        super().begin(T, body, rng, **kw)
        K = self.base.queries_per_round
        L = (default_block_length(self.T, K, self.base.regret_exponent)
             if self.block_override is None else int(self.block_override))
        if L <= K:
            raise ValueError(f"block length {L} must exceed the base's {K} queries per round")
        self.L = L
        self.n_blocks = self.T // L
        if self.n_blocks < 1:
            raise ValueError(f"horizon {self.T} is shorter than one block of {L} rounds")
        self.base.begin(self.n_blocks, body, rng, **kw)
        self._xhat = None
        self._block = 0
        self.slot_log = []

    def _start_block(self, q):
        self._xhat = np.asarray(self.base.action(q), dtype=float)
        queries = []
        while True:
            y = self.base.next_query(q)
            if y is None:
                break
            queries.append(np.asarray(y, dtype=float))
            if len(queries) > self.base.queries_per_round:
                raise ProtocolError("base emitted more queries than it declared")
        perm = self.rng.permutation(self.L)
        self._slot_of = {int(perm[i]): i for i in range(len(queries))}
        self._queries = queries
        self._answers = [None] * len(queries)
        self.slot_log.append([int(perm[i]) for i in range(len(queries))])

    def action(self, t):
        q, s = divmod(t - 1, self.L)
        q += 1
        self._asked = False
        if q > self.n_blocks:
            self._slot = None
            self._played = self._xhat
            return self._played
        if s == 0:
            self._block = q
            self._start_block(q)
        self._slot = self._slot_of.get(s)
        self._played = self._xhat if self._slot is None else self._queries[self._slot]
        return self._played

    def next_query(self, t):
        if self._asked:
            return None
        self._asked = True
        return self._played

    def observe(self, t, response):
        if self._slot is not None:
            self._answers[self._slot] = response

    def end_round(self, t):
        q, s = divmod(t - 1, self.L)
        if q + 1 <= self.n_blocks and s == self.L - 1:
            for ans in self._answers:
                self.base.observe(q + 1, ans)
            self.base.end_round(q + 1)

    def describe(self):
        return {**self.base.describe(), "sftt.L": self.L}


@dataclass
class OfflineResult:
    point: np.ndarray
    value: float
    mean_value: float
    suboptimality: Optional[float]
    mean_suboptimality: Optional[float]
    queries: int
    transcript: object


def otb(agent: Agent, adversary: ObliviousAdversary, T: int, body: ConvexBody, seed: int,
        optimum: Optional[float] = None) -> OfflineResult:
    """Run an online agent against a constant adversary and return a uniformly drawn iterate.

    ``optimum``, when known, turns the returned value and the transcript
    average into suboptimality gaps. The transcript average is the expected
    value of the returned iterate.
    """
    if not isinstance(adversary, ObliviousAdversary) or not adversary.constant:
        raise ProtocolError("online-to-offline conversion needs a constant oblivious adversary")
    tr = run_game(agent, adversary, T, body, seed)
    pick_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(4)[3])
    idx = int(pick_rng.integers(T))
    f = adversary.objectives[0]
    point = tr.played[idx].copy()
    value = f.value(point)
    mean_value = float(tr.values.mean())
    gap = None if optimum is None else optimum - value
    mean_gap = None if optimum is None else optimum - mean_value
    return OfflineResult(point, value, mean_value, gap, mean_gap, int(tr.query_counts.sum()), tr)
