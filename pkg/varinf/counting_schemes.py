import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy.linalg import pinvh
from scipy.optimize import minimize as scipy_minimize

from varinf.errors import CountingSchemeError
from varinf.free_energy import CountingNumbers, bethe_counting

NODE_CONSTRAINT_TOL = 1e-8
SLSQP_ACCEPTED = (0, 8)


#1. Tree-reweighted counting numbers
def trw_counting(graph):
    """
    Tree-reweighted counting numbers under the uniform distribution over spanning trees.

    The appearance probability of an edge in a uniformly drawn spanning tree of a unit-weight graph
    equals its effective resistance, read off the pseudo-inverse of the Laplacian. Components are
    handled independently; c_i = 1 - sum_j c_ij.

    Parameters:
    - graph (Graph): Any graph; disconnected graphs get spanning forests.

    Returns:
    - CountingNumbers: 0 < c_ij <= 1 with sum of c_ij equal to n_component - 1 per component.
    """
    c_pair = np.ones(graph.edge_count)
    if graph.edge_count:
        nxg = graph.to_networkx()
        edge_index = {edge: k for k, edge in enumerate(graph.edges)}
        for component in graph.components():
            if len(component) < 2:
                continue
            laplacian = nx.laplacian_matrix(nxg.subgraph(component), nodelist=component).toarray().astype(float)
            green = pinvh(laplacian)
            local = {node: pos for pos, node in enumerate(component)}
            for i, j in nxg.subgraph(component).edges():
                a, b = local[i], local[j]
                k = edge_index[(min(i, j), max(i, j))]
                c_pair[k] = green[a, a] + green[b, b] - 2.0 * green[a, b]
        c_pair = np.clip(c_pair, np.finfo(float).tiny, 1.0)
    logging.debug(f"TRW counting numbers: mean c_ij {c_pair.mean() if c_pair.size else float('nan'):.4f}")
    return CountingNumbers(c_pair, 1.0 - graph.edge_sum(c_pair))


#2. LS-convex counting numbers
@dataclass(frozen=True)
class AuxiliaryNumbers:
    """
    Nonnegative auxiliary numbers certifying convexity of a pairwise entropy.

    Parameters:
    - c_edge (np.ndarray): c_hat_(i,j) per edge.
    - c_arrow (np.ndarray): Shape (E, 2); column 0 is c_hat_(i,j)->i (towards the first endpoint),
      column 1 is c_hat_(i,j)->j.
    - c_node (np.ndarray): c_hat_i per node.
    """

    c_edge: np.ndarray
    c_arrow: np.ndarray
    c_node: np.ndarray

    def node_residual(self, graph):
        """Largest violation of c_hat_i + sum_j (c_hat_(i,j) + c_hat_(i,j)->j) = 1."""
        load = _node_load(graph, self.c_edge, self.c_arrow)
        return float(np.max(np.abs(self.c_node + load - 1.0))) if graph.node_count else 0.0

    def is_valid(self, graph, tol=NODE_CONSTRAINT_TOL):
        nonnegative = all(np.all(v >= -tol) for v in (self.c_edge, self.c_arrow, self.c_node))
        return bool(nonnegative and self.node_residual(graph) <= tol)

    def to_counting(self, graph):
        """c_ij = c_hat_(i,j) + both arrows; c_i = c_hat_i - sum of the arrows pointing at i."""
        c_pair = self.c_edge + self.c_arrow[:, 0] + self.c_arrow[:, 1]
        incoming = (np.bincount(graph.heads, weights=self.c_arrow[:, 0], minlength=graph.node_count)
                    + np.bincount(graph.tails, weights=self.c_arrow[:, 1], minlength=graph.node_count))
        return CountingNumbers(c_pair, self.c_node - incoming)


def _node_load(graph, c_edge, c_arrow):
    # edge terms charged to node i: c_hat_(i,j) plus the arrow pointing away from i
    return (np.bincount(graph.heads, weights=c_edge + c_arrow[:, 1], minlength=graph.node_count)
            + np.bincount(graph.tails, weights=c_edge + c_arrow[:, 0], minlength=graph.node_count))


def _load_matrix(graph):
    """Node-load matrix G over w = [c_edge, arrow_to_head, arrow_to_tail]."""
    n, m = graph.node_count, graph.edge_count
    load = np.zeros((n, 3 * m))
    edges = np.arange(m)
    load[graph.heads, edges] = 1.0
    load[graph.tails, edges] = 1.0
    load[graph.heads, 2 * m + edges] = 1.0
    load[graph.tails, m + edges] = 1.0
    return load


def solve_ls_convex(graph, max_iter=1000, ftol=1e-12):
    """
    Least-squares program for convex counting numbers closest to Bethe.

    Minimizes sum_ij (c_hat_(i,j) + c_hat_(i,j)->i + c_hat_(i,j)->j - 1)^2 over nonnegative auxiliary
    numbers subject to c_hat_i + sum_j (c_hat_(i,j) + c_hat_(i,j)->j) = 1. c_hat_i is eliminated through
    the equality, leaving the inequality G w <= 1, and the program is handed to SLSQP with analytic
    derivatives starting from the feasible point w = 0.

    Raises:
    - CountingSchemeError: If SLSQP stops without success or the returned point is infeasible.
    """
    m = graph.edge_count
    if m == 0:
        return AuxiliaryNumbers(np.zeros(0), np.zeros((0, 2)), np.ones(graph.node_count))

    load = _load_matrix(graph)

    def pairwise_sum(w):
        return w[:m] + w[m:2 * m] + w[2 * m:]

    def objective(w):
        r = pairwise_sum(w) - 1.0
        return float(r @ r)

    def objective_grad(w):
        return np.tile(2.0 * (pairwise_sum(w) - 1.0), 3)

    constraints = [{'type': 'ineq', 'fun': lambda w: 1.0 - load @ w, 'jac': lambda w: -load}]
    result = scipy_minimize(objective, np.zeros(3 * m), jac=objective_grad, method='SLSQP',
                            bounds=[(0.0, None)] * (3 * m), constraints=constraints,
                            options={'maxiter': max_iter, 'ftol': ftol})
    w = np.maximum(result.x, 0.0)
    residual = float(max(np.max(load @ w - 1.0), 0.0))
    # status 8 is SLSQP stalling in its line search at the numerical optimum
    if result.status not in SLSQP_ACCEPTED or residual > NODE_CONSTRAINT_TOL:
        logging.error(f"LS-convex program failed: {result.message}")
        raise CountingSchemeError(f"LS-convex program did not converge: {result.message}",
                                  objective=objective(w), constraint_residual=residual)

    c_node = 1.0 - load @ w
    aux = AuxiliaryNumbers(w[:m], np.column_stack([w[m:2 * m], w[2 * m:]]), c_node)
    logging.debug(f"LS-convex objective {objective(w):.3e} after {result.nit} SLSQP iterations")
    return aux


def ls_convex_counting(graph):
    """Counting numbers from solve_ls_convex; Bethe on forests, convex by construction everywhere."""
    if graph.edge_count == 0:
        return bethe_counting(graph)
    return solve_ls_convex(graph).to_counting(graph)
