import math

import numpy as np
import pytest

from oracles import distance_to, random_infeasible_start
from upquad.base_algorithms import (
    IAParams,
    ImprovedAder,
    InfeasibleProjectionAbort,
    ProjectedOGA,
    SOOGA,
    SOOGAParams,
    agent_from_json,
    so_ip,
)
from upquad.geometry import AxisBox, BudgetedBox, HalfspacePolytope, UnsupportedProjection
from upquad.harness.optimum import grid_optimum
from upquad.harness.regret import static_alpha_regret
from upquad.objectives import OracleFactory, make_linear
from upquad.protocol import make_oblivious, run_game

SQUARE = AxisBox([0, 0], [1, 1])


def linear_sequence(hs):
    keys = {tuple(np.asarray(h, dtype=float)) for h in hs}
    objs = {k: make_linear(k) for k in keys}
    facs = {k: OracleFactory(f) for k, f in objs.items()}
    hs = [tuple(np.asarray(h, dtype=float)) for h in hs]
    return make_oblivious([(objs[tuple(h)], facs[tuple(h)]) for h in hs])


# -- so_ip ----------------------------------------------------------------------


def test_so_ip_member_start():
    y0 = np.array([0.3, 0.8])
    p, calls = so_ip(SQUARE, 0.1, y0)
    np.testing.assert_array_equal(p, y0)
    assert calls == 1


def test_so_ip_hand_simulated_walk():
    p, calls = so_ip(AxisBox([0], [1]), 0.1, [1.25])
    np.testing.assert_allclose(p, [0.95], atol=1e-12)
    # three separating steps, then the call that certifies membership
    assert calls == 4


def test_so_ip_contracts_toward_shrunk_points():
    rng = np.random.default_rng(0)
    body = HalfspacePolytope([[1, 2], [2, 1]], [2, 2])
    delta = 0.3 * body.inner_radius
    inner = body.shrink(delta).sample_members(20, rng)
    for _ in range(50):
        y0 = random_infeasible_start(body, rng)
        p, _ = so_ip(body, delta, y0)
        assert body.membership(p)
        assert np.all(np.linalg.norm(p - inner, axis=1) <= np.linalg.norm(y0 - inner, axis=1) + 1e-9)


def test_so_ip_iteration_bound_on_budgeted_box():
    rng = np.random.default_rng(1)
    body = BudgetedBox(3, 1.2)
    delta = 0.2 * body.inner_radius
    small = body.shrink(delta)
    for _ in range(50):
        y0 = random_infeasible_start(body, rng)
        p, calls = so_ip(body, delta, y0)
        bound = (distance_to(small, y0) ** 2 - distance_to(small, p) ** 2) / delta ** 2 + 1
        assert calls <= bound + 1


def test_so_ip_rejects_bad_delta():
    with pytest.raises(ValueError):
        so_ip(SQUARE, 0.6, [2.0, 2.0])


def test_so_ip_aborts_on_broken_oracle():
    class Liar(AxisBox):
        def _separate(self, y):
            return -super()._separate(y)

    with pytest.raises(InfeasibleProjectionAbort):
        so_ip(Liar([0, 0], [1, 1]), 0.1, [1.4, 0.5])


# -- SO-OGA ---------------------------------------------------------------------


def test_sooga_params():
    p = SOOGAParams(v=2.0, T=400, inner_radius=0.5, grad_bound=2.0)
    assert p.delta == pytest.approx(0.1)
    assert p.eta == pytest.approx(2.0 * 0.5 / (2 * 2.0 * 20))
    d = SOOGAParams.default(T=4, inner_radius=0.5, grad_bound=1.0)
    assert d.delta == pytest.approx(0.2)


def test_sooga_zero_step_stays_at_center():
    tr = run_game(SOOGA(eta=0.0), linear_sequence([[1, 1]] * 30), 30, SQUARE, seed=0)
    np.testing.assert_allclose(tr.played, np.tile(SQUARE.center, (30, 1)))


def test_sooga_climbs_constant_gradient():
    body = BudgetedBox(2, 1.0)
    T = 4096
    h = [1.0, 0.5]
    agent = SOOGA()
    tr = run_game(agent, linear_sequence([h] * T), T, body, seed=0)
    _, opt = grid_optimum(body, make_linear(h))
    slack = math.sqrt(1.25) * (agent.delta * (1 + 2 * body.diameter / body.inner_radius)
                                + body.diameter / math.sqrt(T) * 10)
    assert opt - tr.values[-1] <= slack


def test_sooga_sign_flip_regret_frozen_constant():
    T = 2 ** 12
    h = np.array([1.0, -1.0])
    tr = run_game(SOOGA(), linear_sequence([h if t % 2 == 0 else -h for t in range(T)]), T,
                  SQUARE, seed=0)
    regret = static_alpha_regret(tr, 1.0, SQUARE)
    assert regret <= 3 * math.sqrt(2) * math.sqrt(2) * math.sqrt(T)


def test_sooga_played_points_are_members():
    body = HalfspacePolytope([[1, 2], [2, 1]], [2, 2])
    rng = np.random.default_rng(2)
    hs = rng.normal(size=(500, 2))
    tr = run_game(SOOGA(), linear_sequence(hs), 500, body, seed=1)
    assert body.contains(tr.played).all()


def test_sooga_translation_invariance():
    a = AxisBox([0, 0], [0.5, 0.5])
    shift = np.array([0.3, 0.2])
    b = AxisBox(shift, shift + 0.5)
    rng = np.random.default_rng(3)
    hs = rng.normal(size=(300, 2))
    ta = run_game(SOOGA(), linear_sequence(hs), 300, a, seed=0)
    tb = run_game(SOOGA(), linear_sequence(hs), 300, b, seed=0)
    np.testing.assert_allclose(tb.played - ta.played, np.tile(shift, (300, 1)), atol=1e-12)


# -- Improved Ader ----------------------------------------------------------------


def test_ia_parameters_worked_example():
    p = IAParams(T=10_000, diameter=1.0, grad_bound=1.0)
    assert p.n_experts == 8
    assert p.etas[0] == pytest.approx(math.sqrt(7 / 20_000), rel=1e-12)
    assert p.etas[0] == pytest.approx(0.0187083, abs=1e-7)
    assert p.hedge_rate == pytest.approx(0.0141421, abs=1e-7)
    assert p.initial_weights[0] == pytest.approx(0.5625)
    assert p.initial_weights.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(p.etas[1:] / p.etas[:-1], 2.0)


def test_ia_single_expert_equals_projected_step():
    T = 200
    rng = np.random.default_rng(4)
    hs = rng.normal(size=(T, 2))
    eta = 0.05
    ia = ImprovedAder(etas=[eta])
    tr = run_game(ia, linear_sequence(hs), T, SQUARE, seed=0)
    x = SQUARE.center.copy()
    for t in range(T):
        np.testing.assert_allclose(tr.played[t], x, atol=1e-12)
        x = np.clip(x + eta * hs[t], 0, 1)


def test_ia_weights_stay_on_simplex():
    T = 500
    rng = np.random.default_rng(5)
    hs = rng.normal(size=(T, 2))
    ia = ImprovedAder()

    class Spy(ImprovedAder):
        sums = []

        def update(self, t, grad):
            super().update(t, grad)
            w = self.weights
            Spy.sums.append((w.sum(), w.min()))

    run_game(Spy(), linear_sequence(hs), T, BudgetedBox(2, 1.0), seed=0)
    sums = np.array(Spy.sums)
    np.testing.assert_allclose(sums[:, 0], 1.0, atol=1e-12)
    assert sums[:, 1].min() >= 0


def test_ia_needs_projection():
    with pytest.raises(UnsupportedProjection):
        run_game(ImprovedAder(), linear_sequence([[1, 1]] * 3), 3,
                 HalfspacePolytope([[1, 2]], [2]), seed=0)


# -- projected OGA ------------------------------------------------------------------


def test_oga_reaches_best_corner():
    T = 2000
    tr = run_game(ProjectedOGA(), linear_sequence([[1.0, -0.5]] * T), T, SQUARE, seed=0)
    np.testing.assert_allclose(tr.played[-1], [1.0, 0.0])


def test_oga_zero_gradient_stays_put():
    tr = run_game(ProjectedOGA(), linear_sequence([[0.0, 0.0]] * 20), 20, SQUARE, seed=0)
    np.testing.assert_allclose(tr.played, np.tile(SQUARE.center, (20, 1)))


def test_oga_quadratic_sequence_slope():
    from upquad.harness.experiment import ExperimentConfig, run_experiment

    cfg = ExperimentConfig.from_dict({
        "body": {"kind": "axis_box", "lo": [0, 0], "hi": [1, 1]},
        "objectives": {"kind": "iid", "family": "dr_quadratic_mono"},
        "pipeline": "oga", "seeds": 3, "sigma": 0.0,
    })
    res = run_experiment(cfg, write=False)
    assert res.slope.slope <= 0.6


def test_agent_json():
    assert isinstance(agent_from_json({"algo": "so_oga", "v": 1.0}), SOOGA)
    assert isinstance(agent_from_json({"algo": "ia"}), ImprovedAder)
    assert isinstance(agent_from_json({"algo": "oga", "eta0": 0.1}), ProjectedOGA)
    with pytest.raises(ValueError):
        agent_from_json({"algo": "fw"})
