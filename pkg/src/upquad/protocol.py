"""Agent/adversary repeated game with complete transcripts."""

from __future__ import annotations

import hashlib
import io
import json
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .geometry import ConvexBody
from .objectives import ObjectiveSpec, QueryOracle

__all__ = [
    "FEEDBACK_CLASSES",
    "Agent",
    "Adversary",
    "ObliviousAdversary",
    "AdaptiveAdversary",
    "GameTranscript",
    "DomainViolation",
    "ProtocolError",
    "make_oblivious",
    "run_game",
    "config_hash",
]

FEEDBACK_CLASSES = ("semi_bandit", "bandit", "full_info_first", "full_info_zeroth")
_ORDER_OF = {
    "semi_bandit": "first",
    "full_info_first": "first",
    "bandit": "zeroth",
    "full_info_zeroth": "zeroth",
}


class ProtocolError(RuntimeError):
    """The agent or adversary broke the rules of the game."""


class DomainViolation(ProtocolError):
    def __init__(self, t: int, what: str, point):
        self.round = t
        self.point = np.asarray(point, dtype=float)
        super().__init__(f"round {t}: {what} {self.point.tolist()} is outside the domain")


class Agent:
    """Action/query state machine.

    The engine calls ``begin`` once, then per round ``action``, ``next_query``
    until it returns ``None`` (feeding each answer to ``observe``) and finally
    ``end_round``. Subclasses set the class attributes below.
    """

    feedback_class: str = "semi_bandit"
    queries_per_round: int = 1
    regret_exponent: float = 0.5
    deterministic: bool = True
    observation_independent_queries: bool = True
    requires_deterministic_oracle: bool = False

    def begin(self, T: int, body: ConvexBody, rng: np.random.Generator, *,
              grad_bound: float = 1.0, value_bound: float = 1.0) -> None:
        self.T = int(T)
        self.body = body
        self.rng = rng
        self.grad_bound = float(grad_bound)
        self.value_bound = float(value_bound)

    @property
    def oracle_order(self) -> str:
        return _ORDER_OF[self.feedback_class]

    def action(self, t: int) -> np.ndarray:
        raise NotImplementedError

    def next_query(self, t: int) -> Optional[np.ndarray]:
        raise NotImplementedError

    def observe(self, t: int, response) -> None:
        raise NotImplementedError

    def end_round(self, t: int) -> None:
        pass

    def inner_action(self) -> Optional[np.ndarray]:
        """The pre-map action when the played point is a transformed one."""
        return None

    def describe(self) -> dict:
        """Numeric parameters worth recording in the transcript header."""
        return {}


class SemiBanditAgent(Agent):
    """Convenience base: one query at the action, observation stored for ``end_round``."""

    feedback_class = "semi_bandit"
    queries_per_round = 1

    def begin(self, T, body, rng, **kw):
        super().begin(T, body, rng, **kw)
        self._asked = False
        self._obs = None

    def action(self, t):
        self._asked = False
        return self.current

    def next_query(self, t):
        if self._asked:
            return None
        self._asked = True
        return self.current

    def observe(self, t, response):
        self._obs = np.asarray(response, dtype=float)

    def end_round(self, t):
        self.update(t, self._obs)

    def update(self, t: int, grad: np.ndarray) -> None:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# adversaries
# ---------------------------------------------------------------------------


class Adversary:
    mode = "oblivious"

    def reset(self, T: int, rng: np.random.Generator) -> None:
        pass

    def realize(self, t: int, history: Sequence[np.ndarray]) -> Tuple[ObjectiveSpec, QueryOracle]:
        raise NotImplementedError


class ObliviousAdversary(Adversary):
    """Pre-drawn sequence of (objective, oracle factory) pairs.

    Each entry's oracle is either a ``QueryOracle`` or a callable
    ``order -> QueryOracle`` so that the same sequence serves agents of any
    feedback order.
    """

    mode = "oblivious"

    def __init__(self, specs: Sequence[Tuple[ObjectiveSpec, object]]):
        self.specs = list(specs)
        self.objectives = [s for s, _ in self.specs]

    def __len__(self):
        return len(self.specs)

    @property
    def constant(self) -> bool:
        first = self.specs[0]
        return all(s is first[0] and o is first[1] for s, o in self.specs)

    def realize(self, t, history=()):
        return self.specs[t - 1]


class AdaptiveAdversary(Adversary):
    """Chooses ``f_t`` as a function of the actions played so far."""

    mode = "fully_adaptive"

    def __init__(self, choose: Callable[[int, Sequence[np.ndarray]], Tuple[ObjectiveSpec, object]]):
        self.choose = choose

    def realize(self, t, history):
        return self.choose(t, history)


def make_oblivious(specs: Sequence[Tuple[ObjectiveSpec, object]]) -> ObliviousAdversary:
    if len(specs) == 0:
        raise ValueError("an oblivious adversary needs at least one round")
    return ObliviousAdversary(specs)


def _resolve_oracle(oracle_like, order: str) -> QueryOracle:
    oracle = oracle_like(order) if callable(oracle_like) and not isinstance(oracle_like, QueryOracle) else oracle_like
    if oracle.order != order:
        raise ProtocolError(f"agent needs a {order}-order oracle, adversary supplied {oracle.order}")
    return oracle


# ---------------------------------------------------------------------------
# transcript
# ---------------------------------------------------------------------------


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class GameTranscript:
    T: int
    dim: int
    seed: int
    actions: np.ndarray
    played: np.ndarray
    query_counts: np.ndarray
    values: np.ndarray
    queries: List[List[np.ndarray]] = field(default_factory=list, repr=False)
    responses: List[list] = field(default_factory=list, repr=False)
    objectives: List[ObjectiveSpec] = field(default_factory=list, repr=False)
    meta: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    @property
    def total_value(self) -> float:
        return float(self.values.sum())

    def to_csv(self) -> str:
        d = self.dim
        buf = io.StringIO()
        for key in sorted(self.meta):
            buf.write(f"# {key}={self.meta[key]}\n")
        buf.write(f"# seed={self.seed}\n")
        cols = ["t"] + [f"action_{i}" for i in range(d)] + [f"played_{i}" for i in range(d)]
        buf.write(",".join(cols + ["query_count", "value"]) + "\n")
        for t in range(self.T):
            row = [str(t + 1)]
            row += [format(v, ".17g") for v in self.actions[t]]
            row += [format(v, ".17g") for v in self.played[t]]
            row += [str(int(self.query_counts[t])), format(self.values[t], ".17g")]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def file_name(self, cfg_hash: str) -> str:
        return f"transcript_{cfg_hash}_T{self.T}_seed{self.seed}.csv"

    def write(self, directory, cfg_hash: str):
        from pathlib import Path

        path = Path(directory) / self.file_name(cfg_hash)
        path.write_text(self.to_csv())
        return path


# ---------------------------------------------------------------------------
# engine
# ---------------------------------------------------------------------------


def run_game(agent: Agent, adversary: Adversary, T: int, body: ConvexBody, seed: int,
             *, keep_queries: bool = False) -> GameTranscript:
    """Play ``T`` rounds and record everything.

    The seed is split into independent agent, adversary and oracle streams.
    Queries and responses are kept only when ``keep_queries`` is set.
    """
    T = int(T)
    if isinstance(adversary, ObliviousAdversary) and len(adversary) != T:
        raise ValueError(f"adversary has {len(adversary)} rounds, game has {T}")
    if agent.feedback_class not in FEEDBACK_CLASSES:
        raise ProtocolError(f"unknown feedback class {agent.feedback_class!r}")
    agent_ss, adv_ss, oracle_ss = np.random.SeedSequence(seed).spawn(3)
    rng_agent = np.random.default_rng(agent_ss)
    rng_adv = np.random.default_rng(adv_ss)
    rng_oracle = np.random.default_rng(oracle_ss)
    adversary.reset(T, rng_adv)

    order = agent.oracle_order
    trivial_query = agent.feedback_class in ("semi_bandit", "bandit")
    K = agent.queries_per_round

    bounds = _declared_bounds(adversary)
    agent.begin(T, body, rng_agent, grad_bound=bounds[0], value_bound=bounds[1])

    d = body.dim
    actions = np.empty((T, d))
    played = np.empty((T, d))
    counts = np.zeros(T, dtype=int)
    values = np.empty(T)
    queries: list = []
    responses: list = []
    objectives: list = []
    history: list = []
    start = time.perf_counter()

    for t in range(1, T + 1):
        x = np.array(agent.action(t), dtype=float)
        if not body.membership(x):
            raise DomainViolation(t, "action", x)
        f, oracle_like = adversary.realize(t, history)
        oracle = _resolve_oracle(oracle_like, order)
        if adversary.mode == "fully_adaptive" and not (oracle.deterministic and agent.deterministic):
            raise ProtocolError("fully adaptive adversaries need a deterministic agent and oracle")
        if agent.requires_deterministic_oracle and not oracle.deterministic:
            raise ProtocolError("agent's estimator is only valid with a deterministic oracle")
        q_round, r_round = [], []
        while True:
            y = agent.next_query(t)
            if y is None:
                break
            y = np.asarray(y, dtype=float)
            if len(q_round) >= K:
                raise ProtocolError(f"round {t}: more than {K} queries")
            if not body.membership(y):
                raise DomainViolation(t, "query", y)
            if trivial_query and not np.array_equal(y, x):
                raise ProtocolError(f"round {t}: trivial-query agent queried away from its action")
            resp = oracle.sample(y, rng_oracle)
            agent.observe(t, resp)
            q_round.append(y)
            r_round.append(resp)
        if trivial_query and len(q_round) != 1:
            raise ProtocolError(f"round {t}: trivial-query agent made {len(q_round)} queries")
        agent.end_round(t)
        inner = agent.inner_action()
        actions[t - 1] = x if inner is None else inner
        played[t - 1] = x
        counts[t - 1] = len(q_round)
        values[t - 1] = f.value(x)
        history.append(x)
        objectives.append(f)
        if keep_queries:
            queries.append(q_round)
            responses.append(r_round)

    elapsed = time.perf_counter() - start
    return GameTranscript(T, d, int(seed), actions, played, counts, values, queries, responses,
                          objectives, meta=dict(agent.describe()), wall_clock=elapsed)


def _declared_bounds(adversary) -> Tuple[float, float]:
    """Gradient and value bounds the adversary's oracles promise (oblivious only)."""
    specs = getattr(adversary, "specs", None)
    if not specs:
        return 1.0, 1.0
    first, zeroth = 0.0, 0.0
    seen = set()
    for f, oracle_like in specs:
        if id(oracle_like) in seen:
            continue
        seen.add(id(oracle_like))
        if isinstance(oracle_like, QueryOracle):
            if oracle_like.order == "first":
                first = max(first, oracle_like.bound)
                zeroth = max(zeroth, f.M0)
            else:
                zeroth = max(zeroth, oracle_like.bound)
                first = max(first, f.M1)
        else:
            first = max(first, oracle_like("first").bound)
            zeroth = max(zeroth, oracle_like("zeroth").bound)
    return max(first, 1e-12), max(zeroth, 1e-12)
