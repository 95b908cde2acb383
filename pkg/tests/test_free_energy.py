import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from varinf.errors import BoxConstraintError, GraphError
from varinf.exact_oracle import exact_marginals
from varinf.free_energy import (CountingNumbers, FreeEnergySpec, PseudoMarginals, ScaleFactors, bethe_counting,
                                bethe_spec, counting_spec, estimate_log_partition, evaluate,
                                free_energy_on_manifold, gradient_on_manifold, pairwise_table, uniform_counting,
                                uniform_scaling, xi_star, zeta_spec)
from varinf.graph_model import Graph, IsingModel, make_complete, make_erdos_renyi, make_grid, make_random_tree, \
    sample_ising


def edge_term(xi, q_i, q_j, J, c, z):
    """The xi-dependent part of a single edge's contribution to F."""
    cells = np.array([xi, q_i - xi, q_j - xi, 1 + xi - q_i - q_j])
    return -4.0 * xi * z * J + c * float(np.sum(cells * np.log(cells)))


def random_spec(rng, graph):
    c = rng.uniform(0.5, 3.0)
    zeta = rng.uniform(0.0, 1.5)
    model = sample_ising(graph, -1.0, 1.0, 0.6, seed=int(rng.integers(1 << 31)))
    spec = FreeEnergySpec(model, uniform_counting(graph, c), uniform_scaling(graph, zeta))
    return spec


#COUNTING NUMBERS
def test_bethe_counting_k10():
    counting = bethe_counting(make_complete(10))
    assert np.all(counting.c_pair == 1.0)
    assert np.all(counting.c_node == -8.0)
    assert counting.is_variable_valid(make_complete(10))


def test_bethe_counting_small_graphs():
    assert bethe_counting(Graph(1, ())).c_node.tolist() == [1.0]
    assert bethe_counting(Graph(2, ((0, 1),))).c_node.tolist() == [0.0, 0.0]


def test_uniform_counting():
    assert uniform_counting(make_complete(10), 2.0).c_node[0] == -17.0
    assert uniform_counting(make_grid(5, 5), 0.5).c_node[0] == 0.0
    graph = make_grid(3, 4)
    one = uniform_counting(graph, 1.0)
    bethe = bethe_counting(graph)
    assert np.array_equal(one.c_pair, bethe.c_pair) and np.array_equal(one.c_node, bethe.c_node)


@pytest.mark.parametrize("c", [0.0, -1.0])
def test_uniform_counting_rejects_nonpositive(c):
    with pytest.raises(GraphError):
        uniform_counting(make_complete(3), c)


def test_counting_numbers_reject_nonpositive_pairs():
    with pytest.raises(GraphError):
        CountingNumbers([1.0, 0.0], [0.0, 0.0, 0.0])


def test_spec_rejects_mismatched_sizes():
    model = sample_ising(make_complete(3), -1.0, 1.0, 0.5, seed=0)
    with pytest.raises(GraphError):
        FreeEnergySpec(model, bethe_counting(make_complete(4)), uniform_scaling(model.graph, 1.0))
    with pytest.raises(GraphError):
        FreeEnergySpec(model, bethe_counting(model.graph), ScaleFactors([1.0], [1.0, 1.0, 1.0]))


def test_spec_variable_valid_flag():
    model = sample_ising(make_complete(4), -1.0, 1.0, 0.5, seed=0)
    assert counting_spec(model, 1.7).variable_valid
    invalid = CountingNumbers(np.ones(6), np.zeros(4))
    assert not FreeEnergySpec(model, invalid, uniform_scaling(model.graph, 1.0)).variable_valid


#XI_STAR
def test_xi_star_independence_limit():
    assert xi_star(0.3, 0.6, 0.0, 1.0, 1.0) == pytest.approx(0.18, abs=1e-15)


def test_xi_star_strong_coupling_limit():
    xi = xi_star(0.5, 0.5, 1e6, 1.0, 1.0)
    assert xi == pytest.approx(0.5, abs=1e-9)
    assert xi < 0.5


def test_xi_star_strong_anticoupling_limit():
    xi = xi_star(0.5, 0.5, -1e6, 1.0, 1.0)
    assert xi == pytest.approx(0.0, abs=1e-9)
    assert xi > 0.0


def test_xi_star_stationary_against_numeric_minimization():
    xi = xi_star(0.3, 0.6, 1.0, 1.0, 1.0)
    found = minimize_scalar(edge_term, bounds=(1e-12, 0.3 - 1e-12), args=(0.3, 0.6, 1.0, 1.0, 1.0),
                            method='bounded', options={'xatol': 1e-12})
    assert xi == pytest.approx(found.x, abs=1e-6)
    h = 1e-7
    derivative = (edge_term(xi + h, 0.3, 0.6, 1.0, 1.0, 1.0) - edge_term(xi - h, 0.3, 0.6, 1.0, 1.0, 1.0)) / (2 * h)
    assert abs(derivative) < 1e-6


def test_xi_star_stationarity_on_random_tuples():
    """The analytic derivative of the edge term vanishes at xi*, and xi* stays strictly in the box."""
    rng = np.random.default_rng(0)
    n = 10_000
    q_i, q_j = rng.uniform(0.01, 0.99, n), rng.uniform(0.01, 0.99, n)
    c, z = rng.uniform(0.2, 3.0, n), rng.uniform(0.0, 1.5, n)
    J = rng.uniform(-1.0, 1.0, n) * 3.0 * c / np.maximum(4.0 * z, 1e-3)
    J = np.clip(J, -3.0, 3.0)
    xi = xi_star(q_i, q_j, J, c, z)
    lo, hi = np.maximum(0.0, q_i + q_j - 1.0), np.minimum(q_i, q_j)
    assert np.all((xi > lo) & (xi < hi))
    derivative = -4.0 * z * J + c * (np.log(xi) + np.log(1 + xi - q_i - q_j) - np.log(q_i - xi) - np.log(q_j - xi))
    assert np.max(np.abs(derivative)) < 1e-8


def test_xi_star_vectorized_matches_scalar():
    q_i, q_j = np.array([0.2, 0.7, 0.5]), np.array([0.9, 0.4, 0.5])
    J = np.array([1.5, -0.7, 0.0])
    vector = xi_star(q_i, q_j, J, 1.3, 0.8)
    scalar = [xi_star(a, b, j, 1.3, 0.8) for a, b, j in zip(q_i, q_j, J)]
    assert np.allclose(vector, scalar, rtol=0, atol=1e-15)


#PAIRWISE_TABLE
def test_pairwise_table_uniform():
    assert np.allclose(pairwise_table(0.5, 0.5, 0.25), 0.25)


def test_pairwise_table_margins():
    table = pairwise_table(0.7, 0.4, 0.3)
    assert np.allclose(table, [[0.3, 0.4], [0.1, 0.2]])
    assert table.sum() == pytest.approx(1.0)
    assert table.sum(axis=1).tolist() == pytest.approx([0.7, 0.3])
    assert table.sum(axis=0).tolist() == pytest.approx([0.4, 0.6])


def test_pairwise_table_boundary_needs_guard():
    with pytest.raises(BoxConstraintError):
        pairwise_table(0.7, 0.2, 0.2)
    table = pairwise_table(0.7, 0.2, 0.2, guard=True)
    assert np.all(table > 0)
    assert table[0, 0] == pytest.approx(0.2, abs=1e-11)
    assert table[1, 0] == pytest.approx(0.0, abs=1e-11)


#EVALUATE
def test_evaluate_uniform_point():
    graph = make_complete(3)
    model = IsingModel(graph, [0.4, -0.3, 1.2], [0.0, 0.0, 0.0])
    spec = FreeEnergySpec(model, bethe_counting(graph), ScaleFactors(np.zeros(3), np.zeros(3)))
    point = PseudoMarginals(np.full(3, 0.5), np.full(3, 0.25))
    expected = -(3 * math.log(4) + (-1.0) * 3 * math.log(2))
    assert evaluate(spec, point) == pytest.approx(expected, abs=1e-12)


def test_evaluate_single_edge_against_cells():
    model = IsingModel(Graph(2, ((0, 1),)), [0.8], [0.3, -0.4])
    spec = bethe_spec(model)
    q, xi = np.array([0.6, 0.35]), 0.25
    cells = {(1, 1): xi, (1, -1): 0.6 - xi, (-1, 1): 0.35 - xi, (-1, -1): 1 + xi - 0.95}
    energy = sum(p * model.energy([a, b]) for (a, b), p in cells.items())
    entropy = -sum(p * math.log(p) for p in cells.values())
    # Bethe on one edge: c_ij = 1, c_i = 0
    assert evaluate(spec, PseudoMarginals(q, [xi])) == pytest.approx(energy - entropy, abs=1e-12)


def test_evaluate_rejects_box_violation():
    model = IsingModel(Graph(2, ((0, 1),)), [0.8], [0.0, 0.0])
    with pytest.raises(BoxConstraintError):
        evaluate(bethe_spec(model), PseudoMarginals([0.5, 0.5], [0.6]))
    with pytest.raises(BoxConstraintError):
        evaluate(bethe_spec(model), PseudoMarginals([1.0, 0.5], [0.4]))


def test_evaluate_exact_on_trees():
    """At the exact marginals of a tree model, the Bethe free energy equals -log Z."""
    for seed in range(5):
        model = sample_ising(make_random_tree(6, seed), -1.0, 1.0, 0.6, seed=100 + seed)
        exact = exact_marginals(model)
        point = PseudoMarginals(exact.singleton, exact.pairwise[:, 0, 0])
        assert evaluate(bethe_spec(model), point) == pytest.approx(-exact.log_z, abs=1e-9)


def test_exact_tree_marginals_lie_on_manifold():
    model = sample_ising(make_random_tree(7, 3), -1.0, 1.0, 0.6, seed=5)
    exact = exact_marginals(model)
    assert PseudoMarginals(exact.singleton, exact.pairwise[:, 0, 0]).on_manifold(bethe_spec(model), tol=1e-9)


#GRADIENT_ON_MANIFOLD
def test_gradient_vanishes_for_isolated_node():
    theta = 0.45
    model = IsingModel(Graph(1, ()), [], [theta])
    q = np.array([1.0 / (1.0 + math.exp(-2 * theta))])
    assert abs(gradient_on_manifold(bethe_spec(model), q)[0]) < 1e-12


GRADIENT_FAMILIES = [make_complete(5), make_grid(3, 3), make_erdos_renyi(8, 0.4, seed=2)]


def assert_gradient_matches_finite_differences(graph, points, seed):
    rng = np.random.default_rng(seed)
    h = 1e-6
    for _ in range(points):
        spec = random_spec(rng, graph)
        q = rng.uniform(0.1, 0.9, graph.node_count)
        numeric = np.empty_like(q)
        for i in range(q.size):
            step = np.zeros_like(q)
            step[i] = h
            numeric[i] = (free_energy_on_manifold(spec, q + step) - free_energy_on_manifold(spec, q - step)) / (2 * h)
        assert np.allclose(gradient_on_manifold(spec, q), numeric, rtol=1e-5, atol=1e-6)


@pytest.mark.parametrize("graph", GRADIENT_FAMILIES)
def test_gradient_matches_finite_differences(graph):
    assert_gradient_matches_finite_differences(graph, 10, graph.edge_count)


@pytest.mark.slow
@pytest.mark.parametrize("graph", GRADIENT_FAMILIES)
def test_gradient_matches_finite_differences_at_many_points(graph):
    assert_gradient_matches_finite_differences(graph, 100, 1000 + graph.edge_count)


def test_symmetric_point_is_stationary_without_fields():
    """With theta = 0 the point q = 1/2 is stationary for any coupling signs."""
    model = sample_ising(make_complete(5), -1.0, 1.0, 0.0, seed=8)
    assert np.allclose(gradient_on_manifold(zeta_spec(model, 0.7), np.full(5, 0.5)), 0.0, atol=1e-12)


#ESTIMATE_LOG_PARTITION
def test_estimate_log_partition_on_tree():
    model = sample_ising(make_random_tree(8, 1), -1.0, 1.0, 0.6, seed=21)
    exact = exact_marginals(model)
    assert estimate_log_partition(bethe_spec(model), exact.singleton) == pytest.approx(exact.log_z, abs=1e-9)


def test_estimate_log_partition_is_negated_free_energy():
    model = sample_ising(make_complete(4), -1.0, 1.0, 0.6, seed=2)
    q = np.array([0.2, 0.4, 0.6, 0.8])
    spec = counting_spec(model, 1.5)
    assert estimate_log_partition(spec, q) == -free_energy_on_manifold(spec, q)
