import math
from unittest.mock import MagicMock, call, patch

import numpy as np
import pytest
from pydantic import ValidationError

from varinf.exact_oracle import exact_marginals
from varinf.fmin import (FALLBACK_STEP, Q_HIGH, Q_LOW, FminConfig, _bfgs_update, _project, minimize,
                         wolfe_line_search)
from varinf.free_energy import bethe_spec, counting_spec
from varinf.graph_model import IsingModel, make_complete, make_random_tree, sample_ising


def square(x):
    return float(x @ x)


def square_grad(x):
    return 2.0 * x


def scripted_rng(*values):
    rng = MagicMock()
    rng.uniform.side_effect = list(values)
    return rng


#FMIN CONFIG
def test_config_defaults():
    config = FminConfig()
    assert config.grad_tol == 1e-6
    assert (config.wolfe_c1, config.wolfe_c2) == (1e-4, 0.9)
    assert config.projection_shrink == 0.9
    assert config.restarts == 5


@pytest.mark.parametrize("kwargs", [
    {'wolfe_c1': 0.95},
    {'grad_tol': 0.0},
    {'restarts': 0},
    {'init_low': 0.9, 'init_high': 0.1},
    {'unknown_option': 1},
])
def test_config_rejects_invalid_settings(kwargs):
    with pytest.raises(ValidationError):
        FminConfig(**kwargs)


def test_config_is_frozen():
    with pytest.raises(ValidationError):
        FminConfig().restarts = 3


#WOLFE_LINE_SEARCH
def test_line_search_on_quadratic():
    """f(x) = x^2 from 1 towards -1: W1 holds for rho <= 0.9999 and W2 for rho >= 0.05."""
    config = FminConfig()
    tail, head = np.array([1.0]), np.array([-1.0])
    result = wolfe_line_search(square, square_grad, tail, head, config, np.random.default_rng(0))
    assert result.satisfied
    assert 0.05 <= result.step <= 0.9999
    assert square(tail + result.step * (head - tail)) < square(tail)


def test_line_search_contracts_after_w1_failure():
    config = FminConfig()
    rng = scripted_rng(0.99995, 0.5)
    result = wolfe_line_search(square, square_grad, np.array([1.0]), np.array([-1.0]), config, rng)
    assert rng.uniform.call_args_list == [call(0.5, 1.0), call(0.25, 0.75)]
    assert [entry[1:] for entry in result.trace] == [(False, False, 'initial'), (True, True, 'contract')]
    assert result.step == pytest.approx(0.499975)
    assert result.satisfied


def test_line_search_expands_up_to_full_step():
    """A linear objective never meets the curvature condition, so the search grows rho to 1."""
    config = FminConfig()

    def gradient(x):
        return np.array([-1.0])

    result = wolfe_line_search(lambda x: -float(x[0]), gradient, np.array([0.0]), np.array([1.0]), config,
                               scripted_rng(0.8))
    rhos = [entry[0] for entry in result.trace]
    assert rhos == pytest.approx([0.8, 0.88, 0.968, 1.0])
    assert [entry[3] for entry in result.trace] == ['initial', 'expand', 'expand', 'expand']
    assert result.step == 1.0
    assert result.satisfied


def test_line_search_falls_back_when_w1_never_holds():
    config = FminConfig(line_search_max_iters=5)

    def gradient(x):
        # claims descent while the objective grows
        return np.array([-1.0])

    result = wolfe_line_search(lambda x: float(x[0]), gradient, np.array([0.0]), np.array([1.0]), config,
                               np.random.default_rng(1))
    assert not result.satisfied
    assert result.step == FALLBACK_STEP
    assert len(result.trace) == 6
    assert result.trace[-1][3] == 'fallback'
    assert all(not entry[1] for entry in result.trace)


def test_line_search_accepts_w1_only_at_full_step():
    config = FminConfig()
    result = wolfe_line_search(lambda x: -float(x[0]), lambda x: np.array([-1.0]), np.array([0.0]),
                               np.array([1.0]), config, scripted_rng(0.999))
    assert result.trace[-1][:3] == (1.0, True, False)
    assert result.satisfied


#PROJECTION AND BFGS
def test_projection_keeps_head_inside_box():
    q = np.array([0.5, Q_LOW, 0.3])
    head = _project(q, np.array([1.0, -1.0, 0.2]), 0.9)
    assert np.all((head >= Q_LOW) & (head <= Q_HIGH))
    assert head[1] == Q_LOW
    assert head[0] == pytest.approx(0.5 + 0.9 ** 7)


def test_projection_leaves_interior_step_alone():
    q = np.array([0.4, 0.6])
    assert np.array_equal(_project(q, np.array([0.1, -0.1]), 0.9), q + np.array([0.1, -0.1]))


def test_bfgs_update_satisfies_secant_condition():
    rng = np.random.default_rng(3)
    s = rng.normal(size=4)
    y = s + 0.1 * rng.normal(size=4)
    B = _bfgs_update(np.eye(4), s, y, 1e-10)
    assert np.allclose(B @ y, s, atol=1e-12)
    assert np.allclose(B, B.T)


def test_bfgs_update_skipped_without_curvature():
    B = np.eye(2)
    assert _bfgs_update(B, np.array([1.0, 0.0]), np.array([-1.0, 0.0]), 1e-10) is B


#MINIMIZE
def test_minimize_independent_spins():
    """With J = 0 every counting number is exact and the minimizer is p_i(+1) = sigmoid(2 theta_i)."""
    theta = np.array([0.3, -0.8, 1.1, 0.0])
    model = IsingModel(make_complete(4), np.zeros(6), theta)
    result = minimize(counting_spec(model, 1.6))
    assert result.converged
    assert np.allclose(result.q_min, 1.0 / (1.0 + np.exp(-2.0 * theta)), atol=1e-5)
    expected = -sum(math.log(2.0 * math.cosh(t)) for t in theta)
    assert result.f_value == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_minimize_bethe_exact_on_trees(seed):
    model = sample_ising(make_random_tree(7, seed), -1.0, 1.0, 0.6, seed=40 + seed)
    exact = exact_marginals(model)
    result = minimize(bethe_spec(model))
    assert result.converged
    assert result.grad_norm <= 1e-6
    assert np.allclose(result.q_min, exact.singleton, atol=1e-5)
    assert -result.f_value == pytest.approx(exact.log_z, abs=1e-8)


def test_minimize_is_deterministic():
    model = sample_ising(make_complete(6), -2.0, 2.0, 0.5, seed=13)
    config = FminConfig(restarts=3, seed=11)
    first = minimize(bethe_spec(model), config)
    second = minimize(bethe_spec(model), config)
    assert np.array_equal(first.q_min, second.q_min)
    assert first.f_value == second.f_value
    np.testing.assert_array_equal(first.restart_values, second.restart_values)


def test_minimize_keeps_lowest_restart():
    model = sample_ising(make_complete(6), 0.0, 2.0, 0.2, seed=5)
    result = minimize(bethe_spec(model), FminConfig(restarts=4, seed=2))
    assert len(result.restart_values) == 4
    finite = [v for v in result.restart_values if np.isfinite(v)]
    assert result.f_value == min(finite)
    assert result.restart_values[result.restart_index] == result.f_value
    assert result.restart_values.index(result.f_value) == result.restart_index


def test_minimize_warm_start_at_optimum():
    model = sample_ising(make_random_tree(6, 8), -1.0, 1.0, 0.6, seed=8)
    exact = exact_marginals(model)
    result = minimize(bethe_spec(model), FminConfig(restarts=1), q_init=exact.singleton)
    assert result.converged
    assert result.iterations == 0
    assert result.restart_index == 0


def test_minimize_reports_non_finite_gradient(caplog):
    model = sample_ising(make_complete(3), -1.0, 1.0, 0.5, seed=0)
    with patch('varinf.fmin.gradient_on_manifold', return_value=np.full(3, np.nan)):
        result = minimize(bethe_spec(model), FminConfig(restarts=2))
    assert not result.converged
    assert np.isnan(result.f_value)
    assert result.restart_index == 0
    assert "non-finite free energy" in caplog.text


def test_minimize_iteration_cap(caplog):
    model = sample_ising(make_complete(6), -2.0, 2.0, 0.5, seed=1)
    result = minimize(bethe_spec(model), FminConfig(restarts=1, max_iters=1, grad_tol=1e-14))
    assert not result.converged
    assert result.iterations == 1
    assert "iteration cap 1 reached" in caplog.text
