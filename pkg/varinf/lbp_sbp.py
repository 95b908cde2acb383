import logging
import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import sparse
from scipy.special import expit, logsumexp

from varinf.free_energy import EPS_BOX, bethe_spec, estimate_log_partition, zeta_spec
from varinf.result_handling import InferenceResult

LOG2 = math.log(2.0)
DENSE_EIGEN_LIMIT = 200


class LbpConfig(BaseModel):
    """Settings of one loopy belief propagation run; damping is a diagnostic option and 0 by default."""

    model_config = ConfigDict(frozen=True, extra='forbid')

    max_sweeps: int = Field(10_000, ge=1)
    tol: float = Field(1e-10, gt=0)
    damping: float = Field(0.0, ge=0, lt=1)
    seed: int = Field(0, ge=0)


@dataclass(frozen=True)
class MessageState:
    """
    Messages of a belief propagation run.

    messages[k] for k < E is the cavity-field message from the first endpoint of edge k to the second;
    messages[E + k] runs the other way.
    """

    messages: np.ndarray
    iterations: int
    converged: bool
    max_delta: float


@dataclass(frozen=True)
class UniquenessCertificate:
    spectral_radius: float
    holds: bool


#1. Belief propagation
def _logcosh(x):
    x = abs(x)
    return x + math.log1p(math.exp(-2.0 * x)) - LOG2


def _message(coupling, cavity):
    """atanh(tanh(K) tanh(h)) written through log cosh so it stays finite for large |K|, |h|."""
    return 0.5 * (_logcosh(coupling + cavity) - _logcosh(coupling - cavity))


def _endpoints(graph, k):
    """(sender, receiver, edge) of directed edge k."""
    m = graph.edge_count
    e = k % m
    if k < m:
        return int(graph.heads[e]), int(graph.tails[e]), e
    return int(graph.tails[e]), int(graph.heads[e]), e


def random_messages(graph, seed, scale=1.0):
    """Messages drawn uniformly from [-scale, scale], for cold starts away from zero."""
    return np.random.default_rng(seed).uniform(-scale, scale, size=2 * graph.edge_count)


def _node_totals(model, messages):
    g = model.graph
    m = g.edge_count
    # message k < m arrives at the second endpoint, message m + k at the first
    return (model.theta
            + np.bincount(g.tails, weights=messages[:m], minlength=g.node_count)
            + np.bincount(g.heads, weights=messages[m:], minlength=g.node_count))


def _beliefs(model, coupling, messages):
    g = model.graph
    m = g.edge_count
    totals = _node_totals(model, messages)
    singleton = expit(2.0 * totals)
    # cavity fields: first endpoint without the message from the second, and vice versa
    h_head = totals[g.heads] - messages[m:]
    h_tail = totals[g.tails] - messages[:m]
    spins = np.array([1.0, -1.0])
    log_table = (coupling[:, None, None] * spins[None, :, None] * spins[None, None, :]
                 + h_head[:, None, None] * spins[None, :, None]
                 + h_tail[:, None, None] * spins[None, None, :])
    norm = logsumexp(log_table.reshape(m, 4), axis=1) if m else np.zeros(0)
    pairwise = np.exp(log_table - norm[:, None, None])
    return singleton, pairwise


def lbp_run(model, zeta=1.0, config=None, initial_messages=None):
    """
    Belief propagation on the model with couplings zeta * J and unchanged fields.

    Messages are updated one at a time in a fresh random order every sweep:

        m_{u->v} = atanh(tanh(zeta J_uv) tanh(theta_u + sum_{w in N(u), w != v} m_{w->u}))

    The run converges when no message changed by more than config.tol during a sweep.

    Parameters:
    - model (IsingModel): The model.
    - zeta (float): Pairwise scale factor.
    - config (LbpConfig, optional): Defaults to LbpConfig().
    - initial_messages (np.ndarray, optional): Starting messages; zeros otherwise.

    Returns:
    - tuple: (MessageState, InferenceResult). The result's log_z is minus the Bethe free energy of the
      scaled model at the singleton beliefs.
    """
    config = config or LbpConfig()
    g = model.graph
    m = g.edge_count
    coupling = float(zeta) * model.J
    messages = (np.zeros(2 * m) if initial_messages is None
                else np.array(initial_messages, dtype=float).reshape(-1).copy())
    rng = np.random.default_rng(config.seed)

    totals = _node_totals(model, messages).tolist()
    msg = messages.tolist()
    couplings = coupling.tolist()
    ends = [_endpoints(g, k) for k in range(2 * m)]
    keep = config.damping

    converged = m == 0
    max_delta = 0.0
    sweeps = 0
    while not converged and sweeps < config.max_sweeps:
        sweeps += 1
        max_delta = 0.0
        for k in rng.permutation(2 * m).tolist():
            sender, receiver, e = ends[k]
            reverse = k + m if k < m else k - m
            new = _message(couplings[e], totals[sender] - msg[reverse])
            if keep:
                new = keep * msg[k] + (1.0 - keep) * new
            delta = new - msg[k]
            totals[receiver] += delta
            msg[k] = new
            max_delta = max(max_delta, abs(delta))
        converged = max_delta <= config.tol

    messages = np.array(msg)
    if not converged:
        logging.warning(f"LBP at zeta={zeta:.4g} did not converge in {config.max_sweeps} sweeps "
                        f"(last change {max_delta:.3e})")
    state = MessageState(messages, sweeps, converged, max_delta)

    singleton, pairwise = _beliefs(model, coupling, messages)
    q = np.clip(singleton, EPS_BOX, 1.0 - EPS_BOX)
    log_z = estimate_log_partition(zeta_spec(model, zeta), q)
    result = InferenceResult(singleton, pairwise, log_z, converged, sweeps, zeta_final=float(zeta))
    return state, result


#2. Uniqueness certificate
def _transition_matrix(model, zeta):
    g = model.graph
    m = g.edge_count
    weights = np.tanh(np.abs(float(zeta) * model.J))
    rows, cols, vals = [], [], []
    for k in range(2 * m):
        sender, receiver, _ = _endpoints(g, k)
        for e2, nxt in g.incident[receiver]:
            if nxt == sender:
                continue
            rows.append(k)
            cols.append(e2 if receiver == g.heads[e2] else e2 + m)
            vals.append(weights[e2])
    return sparse.csr_matrix((np.array(vals, dtype=float), (np.array(rows, dtype=int), np.array(cols, dtype=int))),
                             shape=(2 * m, 2 * m))


def mooij_radius(model, zeta=1.0, max_iter=10_000, tol=1e-10):
    """
    Spectral radius of the directed-edge matrix with entries tanh|zeta J_jk| from (i->j) to (j->k), k != i.

    A radius below 1 guarantees a unique belief propagation fixed point, hence a unique minimum of the
    zeta-scaled Bethe free energy. Power iteration runs on M + I from the all-ones vector and stops when
    the Collatz-Wielandt lower and upper bounds agree to tol. If they do not, the radius comes from a
    dense eigensolve for up to DENSE_EIGEN_LIMIT directed edges and from the upper bound otherwise.
    """
    m = model.graph.edge_count
    if m == 0:
        return UniquenessCertificate(0.0, True)

    shifted = _transition_matrix(model, zeta) + sparse.identity(2 * m, format='csr')
    x = np.ones(2 * m)
    lower, upper = 1.0, np.inf
    for _ in range(max_iter):
        y = shifted @ x
        ratios = y / x
        lower, upper = float(ratios.min()), float(ratios.max())
        if upper - lower <= tol * max(1.0, upper):
            radius = 0.5 * (lower + upper) - 1.0
            break
        x = y / np.linalg.norm(y)
    else:
        if 2 * m <= DENSE_EIGEN_LIMIT:
            radius = float(np.max(np.abs(np.linalg.eigvals(shifted.toarray() - np.eye(2 * m)))))
        else:
            radius = upper - 1.0
        logging.debug(f"Power iteration stagnated with bounds [{lower - 1:.6g}, {upper - 1:.6g}]")
    radius = max(radius, 0.0)
    return UniquenessCertificate(radius, radius < 1.0)


#3. Self-guided belief propagation
def _zeta_schedule(delta_zeta):
    steps = int(math.ceil(1.0 / delta_zeta - 1e-9))
    return [min(round(k * delta_zeta, 12), 1.0) for k in range(1, steps + 1)]


def sbp(model, delta_zeta=0.05, lbp_config=None):
    """
    Self-guided belief propagation.

    Starts from the uncorrelated model (zeta = 0) and raises zeta by delta_zeta up to 1, warm-starting
    every LBP run from the previous fixed point. The first step at which LBP does not converge ends the
    homotopy and the last converged beliefs are kept. The log-partition estimate is minus the Bethe free
    energy of the original model at those singleton beliefs.

    Raises:
    - ValueError: If delta_zeta is outside (0, 1].
    """
    if not 0.0 < delta_zeta <= 1.0:
        raise ValueError(f"delta_zeta must lie in (0, 1], got {delta_zeta}")
    config = lbp_config or LbpConfig()

    state, result = lbp_run(model, 0.0, config)
    reached, sweeps, attempted = 0.0, state.iterations, []
    for zeta in _zeta_schedule(delta_zeta):
        attempted.append(zeta)
        next_state, next_result = lbp_run(model, zeta, config, initial_messages=state.messages)
        sweeps += next_state.iterations
        if not next_state.converged:
            logging.info(f"SBP stopped at zeta={zeta:.4g}; keeping the fixed point at zeta={reached:.4g}")
            break
        state, result, reached = next_state, next_result, zeta

    flags = []
    if reached == 0.0 and attempted:
        flags.append('sbp_first_step_failed')
    if reached < 1.0:
        flags.append('sbp_incomplete')
    q = np.clip(result.singleton, EPS_BOX, 1.0 - EPS_BOX)
    log_z = estimate_log_partition(bethe_spec(model), q)
    return InferenceResult(result.singleton, result.pairwise, log_z, reached == 1.0, sweeps,
                           zeta_final=reached, flags=tuple(flags),
                           details={'zeta_schedule': attempted})
