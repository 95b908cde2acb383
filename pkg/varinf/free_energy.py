import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import entr

from varinf.errors import BoxConstraintError, GraphError

# interior margin of the open local polytope
EPS_BOX = 1e-12
# below this |alpha| the closed form for xi* is replaced by its limit q_i * q_j
ALPHA_ZERO = 1e-12


#1. Counting numbers and scale factors
@dataclass(frozen=True)
class CountingNumbers:
    """
    Entropy weights of the generalized pairwise entropy sum_ij c_ij S_ij + sum_i c_i S_i.

    Parameters:
    - c_pair (np.ndarray): c_ij per edge, strictly positive.
    - c_node (np.ndarray): c_i per node.
    """

    c_pair: np.ndarray
    c_node: np.ndarray

    def __post_init__(self):
        c_pair = np.array(self.c_pair, dtype=float).reshape(-1)
        c_node = np.array(self.c_node, dtype=float).reshape(-1)
        if not (np.all(np.isfinite(c_pair)) and np.all(np.isfinite(c_node))):
            raise GraphError("counting numbers must be finite")
        if np.any(c_pair <= 0):
            raise GraphError(f"pairwise counting numbers must be positive, min is {c_pair.min():.3g}")
        object.__setattr__(self, 'c_pair', c_pair)
        object.__setattr__(self, 'c_node', c_node)

    def is_variable_valid(self, graph, tol=1e-10):
        """True iff c_i = 1 - sum_{j in N(i)} c_ij for every node."""
        return bool(np.all(np.abs(self.c_node - (1.0 - graph.edge_sum(self.c_pair))) <= tol))

    @property
    def mean_pair(self):
        return float(self.c_pair.mean()) if self.c_pair.size else float('nan')


@dataclass(frozen=True)
class ScaleFactors:
    """Multipliers zeta_ij on J_ij and zeta_i on theta_i."""

    z_pair: np.ndarray
    z_node: np.ndarray

    def __post_init__(self):
        z_pair = np.array(self.z_pair, dtype=float).reshape(-1)
        z_node = np.array(self.z_node, dtype=float).reshape(-1)
        if not (np.all(np.isfinite(z_pair)) and np.all(np.isfinite(z_node))):
            raise GraphError("scale factors must be finite")
        object.__setattr__(self, 'z_pair', z_pair)
        object.__setattr__(self, 'z_node', z_node)


def bethe_counting(graph):
    """c_ij = 1 and c_i = 1 - d_i."""
    return CountingNumbers(np.ones(graph.edge_count), 1.0 - graph.degrees.astype(float))


def uniform_counting(graph, c):
    """Shared pairwise counting number c with variable-valid local numbers c_i = 1 - c * d_i."""
    if not c > 0:
        raise GraphError(f"uniform counting number must be positive, got {c}")
    c = float(c)
    return CountingNumbers(np.full(graph.edge_count, c), 1.0 - c * graph.degrees.astype(float))


def uniform_scaling(graph, zeta):
    """All zeta_ij = zeta, all zeta_i = 1."""
    return ScaleFactors(np.full(graph.edge_count, float(zeta)), np.ones(graph.node_count))


#2. Free energy definitions
@dataclass(frozen=True)
class FreeEnergySpec:
    """
    A model together with counting numbers and scale factors; defines F_{c, zeta}.

    The effective couplings zeta_ij * J_ij and fields zeta_i * theta_i are precomputed as
    `coupling` and `external_field`.
    """

    model: object
    c: CountingNumbers
    z: ScaleFactors
    coupling: np.ndarray = field(init=False, repr=False)
    external_field: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        g = self.model.graph
        if self.c.c_pair.size != g.edge_count or self.c.c_node.size != g.node_count:
            raise GraphError("counting numbers do not match the model's graph")
        if self.z.z_pair.size != g.edge_count or self.z.z_node.size != g.node_count:
            raise GraphError("scale factors do not match the model's graph")
        object.__setattr__(self, 'coupling', self.z.z_pair * self.model.J)
        object.__setattr__(self, 'external_field', self.z.z_node * self.model.theta)

    @property
    def graph(self):
        return self.model.graph

    @property
    def variable_valid(self):
        return self.c.is_variable_valid(self.model.graph)


def bethe_spec(model):
    return FreeEnergySpec(model, bethe_counting(model.graph), uniform_scaling(model.graph, 1.0))


def counting_spec(model, c):
    return FreeEnergySpec(model, uniform_counting(model.graph, c), uniform_scaling(model.graph, 1.0))


def zeta_spec(model, zeta):
    return FreeEnergySpec(model, bethe_counting(model.graph), uniform_scaling(model.graph, zeta))


#3. Pseudo-marginals
def _box_bounds(q_i, q_j):
    return np.maximum(0.0, q_i + q_j - 1.0), np.minimum(q_i, q_j)


@dataclass(frozen=True)
class PseudoMarginals:
    """A point (q; xi) of the reparameterized local polytope."""

    q: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'q', np.array(self.q, dtype=float).reshape(-1))
        object.__setattr__(self, 'xi', np.array(self.xi, dtype=float).reshape(-1))

    def in_box(self, graph):
        """Strict local-polytope constraints."""
        q = self.q
        if q.size != graph.node_count or self.xi.size != graph.edge_count:
            return False
        if not np.all((q > 0.0) & (q < 1.0)):
            return False
        lo, hi = _box_bounds(q[graph.heads], q[graph.tails])
        return bool(np.all((self.xi > lo) & (self.xi < hi)))

    def on_manifold(self, spec, tol=1e-10):
        """True iff xi equals xi*(q) edge by edge."""
        g = spec.graph
        target = xi_star(self.q[g.heads], self.q[g.tails], spec.model.J, spec.c.c_pair, spec.z.z_pair)
        return bool(np.all(np.abs(self.xi - target) <= tol))


#4. Closed-form inner minimizer
def xi_star(q_i, q_j, J, c_ij, z_ij):
    """
    Minimizer over xi of the edge terms of F_{c, zeta} for fixed singleton pseudo-marginals.

    Solves alpha xi^2 - Q xi + (1 + alpha) q_i q_j = 0 with alpha = exp(4 zeta J / c) - 1 and
    Q = 1 + alpha (q_i + q_j), taking the root inside the box. Each regime of alpha uses a form of
    the root without cancellation; |alpha| < 1e-12 returns q_i q_j. The result is clamped strictly
    inside (max(0, q_i + q_j - 1), min(q_i, q_j)).

    Parameters:
    - q_i, q_j (float or np.ndarray): Singleton pseudo-marginals in (0, 1).
    - J, c_ij, z_ij (float or np.ndarray): Coupling, pairwise counting number (> 0), scale factor.

    Returns:
    - float or np.ndarray: xi*, broadcast over the inputs.
    """
    q_i, q_j, J, c_ij, z_ij = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (q_i, q_j, J, c_ij, z_ij)))
    scalar = q_i.ndim == 0
    q_i, q_j = np.atleast_1d(q_i), np.atleast_1d(q_j)
    x = np.atleast_1d(4.0 * z_ij * J / c_ij)
    s = q_i + q_j
    p = q_i * q_j
    xi = p.copy()

    with np.errstate(over='ignore', divide='ignore', invalid='ignore'):
        alpha = np.expm1(x)

        neg = alpha <= -ALPHA_ZERO
        if np.any(neg):
            a, qs, qp = alpha[neg], s[neg], p[neg]
            Q = 1.0 + a * qs
            root = np.sqrt(np.maximum(Q * Q - 4.0 * a * (1.0 + a) * qp, 0.0))
            den = Q + root
            # den = 0 only for alpha = -1 and q_i + q_j = 1, where the root is the lower bound 0
            rationalized = np.where(den > 0.0, 2.0 * (1.0 + a) * qp / np.where(den > 0.0, den, 1.0), 0.0)
            xi[neg] = np.where(Q >= 0.0, rationalized, (Q - root) / (2.0 * a))

        mid = (alpha >= ALPHA_ZERO) & (alpha <= 1.0)
        if np.any(mid):
            a, qs, qp, d = alpha[mid], s[mid], p[mid], q_i[mid] - q_j[mid]
            Q = 1.0 + a * qs
            disc = 1.0 + 2.0 * a * (qs - 2.0 * qp) + a * a * d * d
            xi[mid] = 2.0 * (1.0 + a) * qp / (Q + np.sqrt(disc))

        big = alpha > 1.0
        if np.any(big):
            # divide the quadratic by alpha; beta = 0 is the alpha = inf limit
            beta = np.where(np.isinf(alpha[big]), 0.0, 1.0 / alpha[big])
            qs, qp, d = s[big], p[big], q_i[big] - q_j[big]
            b = beta + qs
            disc = d * d + beta * (2.0 * qs - 4.0 * qp) + beta * beta
            xi[big] = 2.0 * (1.0 + beta) * qp / (b + np.sqrt(disc))

    lo, hi = _box_bounds(q_i, q_j)
    margin = np.minimum(EPS_BOX, 0.25 * (hi - lo))
    xi = np.clip(xi, lo + margin, hi - margin)
    return float(xi[0]) if scalar else xi


def _xi_on_manifold(spec, q):
    g = spec.graph
    return xi_star(q[g.heads], q[g.tails], spec.model.J, spec.c.c_pair, spec.z.z_pair)


#5. Tables and energies
def pairwise_table(q_i, q_j, xi, guard=False):
    """
    Joint table of two binary variables, shape (..., 2, 2): [[xi, q_i - xi], [q_j - xi, 1 + xi - q_i - q_j]].

    With guard=False the point must satisfy the strict box constraints; with guard=True it is first
    moved EPS_BOX inside them.
    """
    q_i, q_j, xi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (q_i, q_j, xi)))
    lo, hi = _box_bounds(q_i, q_j)
    if guard:
        q_i = np.clip(q_i, EPS_BOX, 1.0 - EPS_BOX)
        q_j = np.clip(q_j, EPS_BOX, 1.0 - EPS_BOX)
        lo, hi = _box_bounds(q_i, q_j)
        margin = np.minimum(EPS_BOX, 0.25 * (hi - lo))
        xi = np.clip(xi, lo + margin, hi - margin)
    elif not (np.all((q_i > 0) & (q_i < 1) & (q_j > 0) & (q_j < 1)) and np.all((xi > lo) & (xi < hi))):
        raise BoxConstraintError("pairwise point lies outside the open local polytope")
    table = np.empty(q_i.shape + (2, 2))
    table[..., 0, 0] = xi
    table[..., 0, 1] = q_i - xi
    table[..., 1, 0] = q_j - xi
    table[..., 1, 1] = 1.0 + xi - q_i - q_j
    return table


def _entropies(q, q_i, q_j, xi):
    s_pair = (entr(xi) + entr(np.maximum(q_i - xi, 0.0)) + entr(np.maximum(q_j - xi, 0.0))
              + entr(np.maximum(1.0 + xi - q_i - q_j, 0.0)))
    s_node = entr(q) + entr(1.0 - q)
    return s_pair, s_node


def evaluate(spec, point):
    """
    F_{c, zeta}(q; xi) = average scaled energy - generalized entropy.

    The average energy is -sum_ij (1 + 2 (2 xi_ij - q_i - q_j)) zeta_ij J_ij + sum_i (1 - 2 q_i) zeta_i theta_i
    and the entropy is sum_ij c_ij S_ij + sum_i c_i S_i, with 0 log 0 = 0.

    Raises:
    - BoxConstraintError: If the point violates the strict local-polytope constraints.
    """
    g = spec.graph
    if not point.in_box(g):
        raise BoxConstraintError("point lies outside the open local polytope")
    q, xi = point.q, point.xi
    q_i, q_j = q[g.heads], q[g.tails]
    energy = (-np.dot(1.0 + 2.0 * (2.0 * xi - q_i - q_j), spec.coupling)
              + np.dot(1.0 - 2.0 * q, spec.external_field))
    s_pair, s_node = _entropies(q, q_i, q_j, xi)
    entropy = np.dot(spec.c.c_pair, s_pair) + np.dot(spec.c.c_node, s_node)
    return float(energy - entropy)


def free_energy_on_manifold(spec, q):
    """F_{c, zeta}(q; xi*(q)); the objective minimized by fmin."""
    q = np.asarray(q, dtype=float)
    return evaluate(spec, PseudoMarginals(q, _xi_on_manifold(spec, q)))


def gradient_on_manifold(spec, q):
    """
    Gradient of q -> F_{c, zeta}(q; xi*(q)).

    dF/dq_i = -2 zeta_i theta_i + 2 sum_j zeta_ij J_ij + c_i log(q_i / (1 - q_i))
              + sum_j c_ij log((q_i - xi*_ij) / (1 + xi*_ij - q_i - q_j))

    xi* is stationary in xi, so no chain-rule term through xi* appears.
    """
    g = spec.graph
    q = np.asarray(q, dtype=float)
    xi = _xi_on_manifold(spec, q)
    q_i, q_j = q[g.heads], q[g.tails]
    log_both_minus = np.log(1.0 + xi - q_i - q_j)
    to_head = spec.c.c_pair * (np.log(q_i - xi) - log_both_minus)
    to_tail = spec.c.c_pair * (np.log(q_j - xi) - log_both_minus)
    grad = (-2.0 * spec.external_field + 2.0 * g.edge_sum(spec.coupling)
            + spec.c.c_node * (np.log(q) - np.log1p(-q)))
    grad += np.bincount(g.heads, weights=to_head, minlength=g.node_count)
    grad += np.bincount(g.tails, weights=to_tail, minlength=g.node_count)
    return grad


def estimate_log_partition(spec, q_min):
    """log Z estimate -F_{c, zeta}(q_min; xi*(q_min))."""
    value = -free_energy_on_manifold(spec, q_min)
    logging.debug(f"log Z estimate {value:.6f}")
    return value
