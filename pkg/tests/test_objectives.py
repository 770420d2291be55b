import math

import numpy as np
import pytest

from upquad.objectives import (
    CoverageObjective,
    OracleFactory,
    boosted_surrogate_grad,
    make_coverage_like,
    make_dr_quadratic,
    make_linear,
    noisy_oracle,
    objective_from_json,
    sum_objectives,
)

E1 = 1 - math.exp(-1)


def test_linear_quadratic_is_modular():
    f = make_dr_quadratic(np.zeros((2, 2)), [1, 1])
    assert f.monotone and f.curvature == 0.0
    assert f.value([0.3, 0.4]) == pytest.approx(0.7)


def test_fully_curved_quadratic():
    f = make_dr_quadratic([[0, -1], [-1, 0]], [1, 1])
    assert f.monotone
    assert f.curvature == pytest.approx(1.0)


def test_half_curved_quadratic():
    f = make_dr_quadratic([[-0.5, 0], [0, -0.5]], [1, 1])
    assert f.curvature == pytest.approx(0.5)


def test_positive_hessian_entry_rejected():
    with pytest.raises(ValueError):
        make_dr_quadratic([[0, 0.1], [0.1, 0]], [1, 1])


def test_nonmonotone_auto_offset():
    f = make_dr_quadratic([[-1, -1], [-1, -1]], [0.5, 0.2], auto_offset=True)
    assert not f.monotone and f.curvature is None
    assert f.nonneg
    g = np.linspace(0, 1, 65)
    X = np.array([[a, b] for a in g for b in g])
    assert f.values(X).min() >= -1e-12


def test_coverage_examples():
    f = make_coverage_like([1.0])
    assert f.value([0.0]) == 0.0
    assert f.value([1.0]) == pytest.approx(E1, abs=1e-12)
    np.testing.assert_allclose(f.grad([0.0]), [1.0])
    np.testing.assert_allclose(f.grad([1.0]), [math.exp(-1)])
    assert f.curvature == pytest.approx(E1)


def test_coverage_rejects_negative_weights():
    with pytest.raises(ValueError):
        make_coverage_like([1.0, -0.1])


def test_exact_first_order_oracle():
    f = make_dr_quadratic([[-0.5, -0.2], [-0.2, -0.3]], [1, 1])
    o = noisy_oracle(f, "first", 0.0)
    x = np.array([0.3, 0.9])
    np.testing.assert_array_equal(o.sample(x, np.random.default_rng(0)), f.grad(x))
    assert o.deterministic and o.bound == f.M1


def test_noisy_value_oracle_mean():
    f = make_linear([0.4, 0.2])
    o = noisy_oracle(f, "zeroth", 0.1)
    rng = np.random.default_rng(1)
    x = np.array([0.5, 0.5])
    samples = np.array([o.sample(x, rng) for _ in range(100_000)])
    assert abs(samples.mean() - f.value(x)) < 3 * (0.1 / math.sqrt(3)) / math.sqrt(100_000)
    assert np.all(np.abs(samples) <= o.bound + 1e-12)


def test_noisy_gradient_oracle_bound_and_mean():
    f = CoverageObjective([0.7, 0.4])
    o = noisy_oracle(f, "first", 0.1)
    rng = np.random.default_rng(2)
    x = np.array([0.2, 0.6])
    samples = np.array([o.sample(x, rng) for _ in range(20_000)])
    assert np.all(np.linalg.norm(samples, axis=1) <= f.M1 + 0.1 + 1e-12)
    se = samples.std(axis=0) / math.sqrt(len(samples))
    assert np.all(np.abs(samples.mean(axis=0) - f.grad(x)) < 4 * se)
    assert not o.deterministic


def test_negative_sigma_rejected():
    with pytest.raises(ValueError):
        noisy_oracle(make_linear([1.0]), "first", -0.1)


def test_surrogate_of_linear_is_its_gradient():
    f = make_linear([0.3, 0.8])
    for gamma in (0.5, 1.0):
        np.testing.assert_allclose(
            boosted_surrogate_grad(f, ("mono_zero", gamma), [0.2, 0.9]), [0.3, 0.8], atol=1e-12)


def test_surrogate_closed_form_and_monte_carlo():
    f = make_dr_quadratic([[-1.0]], [1.0])  # x - x^2/2
    quad = boosted_surrogate_grad(f, ("mono_zero", 1.0), [0.5])[0]
    assert quad == pytest.approx(1 - 0.5 / (math.e - 1), abs=1e-12)
    rng = np.random.default_rng(3)
    p = rng.uniform(size=1_000_000)
    z = 1 + np.log(math.exp(-1) + p * E1)
    mc = 1 - 0.5 * z
    assert abs(mc.mean() - quad) < 3 * mc.std() / 1000


def test_surrogate_at_anchor_is_plain_gradient():
    f = make_dr_quadratic([[-1, -0.5], [-0.5, -1]], [0.6, 0.4], auto_offset=True)
    x_low = np.array([0.2, 0.1])
    np.testing.assert_allclose(boosted_surrogate_grad(f, ("nonmono", x_low), x_low), f.grad(x_low),
                               atol=1e-12)


def test_surrogate_needs_enough_nodes():
    with pytest.raises(ValueError):
        boosted_surrogate_grad(make_linear([1.0]), ("mono_zero", 1.0), [0.5], n_quad=8)


def test_sum_merges_families():
    a = CoverageObjective([1, 0.5])
    b = CoverageObjective([0.2, 0.3])
    s = sum_objectives([a, b])
    x = np.array([0.3, 0.7])
    assert s.value(x) == pytest.approx(a.value(x) + b.value(x))
    q = sum_objectives([make_linear([1, 0]), make_linear([0, 2])])
    assert q.value(x) == pytest.approx(0.3 + 1.4)
    mixed = sum_objectives([a, make_linear([1, 1])])
    assert mixed.value(x) == pytest.approx(a.value(x) + 1.0)
    np.testing.assert_allclose(mixed.values(np.array([x, x])), [mixed.value(x)] * 2)


def test_objective_json():
    f = objective_from_json({"kind": "coverage", "a": [1, 2]})
    assert isinstance(f, CoverageObjective)
    g = objective_from_json({"kind": "dr_quadratic", "H": [[-1]], "h": [1]})
    assert g.value([1.0]) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        objective_from_json({"kind": "nope"})


def test_oracle_factory_caches_by_order():
    fac = OracleFactory(make_linear([1.0]), 0.0)
    assert fac("first") is fac("first")
    assert fac("zeroth").order == "zeroth"


# -- declared class parameters hold on samples ---------------------------------


def _builtin_objectives():
    rng = np.random.default_rng(11)
    out = [make_linear([0.5, 0.2, 0.9]), CoverageObjective([0.3, 1.0, 0.6])]
    for _ in range(3):
        M = -rng.uniform(0, 0.5, size=(3, 3))
        H = (M + M.T) / 2
        out.append(make_dr_quadratic(H, -H.sum(axis=1) + rng.uniform(0, 0.5, 3)))
        M = -rng.uniform(0.5, 1.5, size=(3, 3))
        out.append(make_dr_quadratic((M + M.T) / 2, rng.uniform(0, 1, 3), auto_offset=True))
    return out


@pytest.mark.parametrize("f", _builtin_objectives(), ids=lambda f: type(f).__name__)
def test_declared_parameters_hold(f):
    rng = np.random.default_rng(12)
    X = rng.uniform(size=(10_000, f.dim))
    vals = f.values(X)
    grads = np.array([f.grad(x) for x in X[:2000]])
    if f.nonneg:
        assert vals.min() >= -1e-9
    if f.monotone:
        assert grads.min() >= -1e-9
    assert np.abs(vals).max() <= f.M0 + 1e-9
    assert np.linalg.norm(grads, axis=1).max() <= f.M1 + 1e-9


@pytest.mark.parametrize("f", _builtin_objectives(), ids=lambda f: type(f).__name__)
def test_up_concavity_along_positive_directions(f):
    rng = np.random.default_rng(13)
    x = rng.uniform(size=(2000, f.dim))
    y = x + rng.uniform(size=x.shape) * (1 - x)
    for a, b in zip(x, y):
        gap = f.value(b) - f.value(a) - (f.grad(a) @ (b - a)) / f.gamma
        assert gap <= 1e-9
