import numpy as np
import pytest

from upquad.geometry import AxisBox
from upquad.objectives import OracleFactory, make_linear, noisy_oracle
from upquad.protocol import (
    AdaptiveAdversary,
    Agent,
    DomainViolation,
    ProtocolError,
    SemiBanditAgent,
    make_oblivious,
    run_game,
)

BOX = AxisBox([0, 0], [1, 1])


class Constant(SemiBanditAgent):
    def __init__(self, point):
        self.point = np.asarray(point, dtype=float)
        self.seen = []

    def begin(self, T, body, rng, **kw):
        super().begin(T, body, rng, **kw)
        self.current = self.point

    def update(self, t, grad):
        self.seen.append(grad)


class Wanderer(SemiBanditAgent):
    """Random member each round; exercises the agent RNG stream."""

    deterministic = False

    def begin(self, T, body, rng, **kw):
        super().begin(T, body, rng, **kw)
        self.current = rng.uniform(size=2)

    def update(self, t, grad):
        self.current = self.rng.uniform(size=2)


def seq(h, T, sigma=0.0):
    f = make_linear(h)
    return make_oblivious([(f, OracleFactory(f, sigma))] * T)


def test_constant_agent_constant_objective():
    tr = run_game(Constant([0.25, 0.5]), seq([1.0, 2.0], 20), 20, BOX, seed=0)
    np.testing.assert_allclose(tr.values, 1.25)
    assert tr.query_counts.sum() == 20


def test_same_seed_same_bytes():
    a = run_game(Wanderer(), seq([1, -1], 50, sigma=0.2), 50, BOX, seed=7).to_csv()
    b = run_game(Wanderer(), seq([1, -1], 50, sigma=0.2), 50, BOX, seed=7).to_csv()
    c = run_game(Wanderer(), seq([1, -1], 50, sigma=0.2), 50, BOX, seed=8).to_csv()
    assert a == b and a != c


def test_adaptive_adversary_with_deterministic_agent():
    def choose(t, history):
        h = [1.0, 0.0] if not history or history[-1][0] < 0.5 else [0.0, 1.0]
        f = make_linear(h)
        return f, noisy_oracle(f, "first")

    tr = run_game(Constant([0.2, 0.2]), AdaptiveAdversary(choose), 5, BOX, seed=0)
    assert tr.T == 5


def test_adaptive_adversary_rejects_stochastic_oracle():
    def choose(t, history):
        f = make_linear([1.0, 0.0])
        return f, noisy_oracle(f, "first", 0.1)

    with pytest.raises(ProtocolError):
        run_game(Constant([0.2, 0.2]), AdaptiveAdversary(choose), 3, BOX, seed=0)


def test_oblivious_adversary_ignores_history():
    adv = seq([1.0, 1.0], 3)
    assert adv.realize(2, [np.zeros(2)]) is adv.realize(2, [np.ones(2), np.zeros(2)])


def test_make_oblivious_errors():
    with pytest.raises(ValueError):
        make_oblivious([])
    with pytest.raises(ValueError):
        run_game(Constant([0.5, 0.5]), seq([1, 1], 4), 5, BOX, seed=0)


def test_piecewise_sequence_switches():
    f1, f2 = make_linear([1, 0]), make_linear([0, 1])
    adv = make_oblivious([(f1, OracleFactory(f1))] * 3 + [(f2, OracleFactory(f2))] * 3)
    tr = run_game(Constant([0.2, 0.7]), adv, 6, BOX, seed=0)
    np.testing.assert_allclose(tr.values, [0.2] * 3 + [0.7] * 3)


def test_action_outside_domain_is_fatal_with_round():
    class Escaper(Constant):
        def update(self, t, grad):
            self.current = np.array([1.5, 0.5]) if t == 2 else self.current

    with pytest.raises(DomainViolation) as err:
        run_game(Escaper([0.5, 0.5]), seq([1, 1], 5), 5, BOX, seed=0)
    assert err.value.round == 3


def test_order_mismatch():
    f = make_linear([1.0, 1.0])
    adv = make_oblivious([(f, noisy_oracle(f, "zeroth"))] * 2)
    with pytest.raises(ProtocolError):
        run_game(Constant([0.5, 0.5]), adv, 2, BOX, seed=0)


def test_semi_bandit_sees_only_gradients_at_action():
    agent = Constant([0.3, 0.3])
    run_game(agent, seq([2.0, 3.0], 4), 4, BOX, seed=0)
    for g in agent.seen:
        np.testing.assert_array_equal(g, [2.0, 3.0])


def test_query_budget_enforced():
    class Greedy(Agent):
        feedback_class = "full_info_first"
        queries_per_round = 2

        def action(self, t):
            return np.array([0.5, 0.5])

        def next_query(self, t):
            return np.array([0.1, 0.1])

        def observe(self, t, response):
            pass

    with pytest.raises(ProtocolError):
        run_game(Greedy(), seq([1, 1], 2), 2, BOX, seed=0)


def test_transcript_csv_layout(tmp_path):
    tr = run_game(Constant([0.25, 0.5]), seq([1.0, 2.0], 3), 3, BOX, seed=4)
    text = tr.to_csv()
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    assert lines[0] == "t,action_0,action_1,played_0,played_1,query_count,value"
    assert lines[1].startswith("1,0.25,0.5,0.25,0.5,1,1.25")
    path = tr.write(tmp_path, "abc")
    assert path.name == "transcript_abc_T3_seed4.csv"
