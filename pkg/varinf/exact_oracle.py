"""Ground truth by exhaustive enumeration of all 2^N states."""
import logging
from dataclasses import dataclass

import numpy as np

from config import get_enumeration_cap
from varinf.errors import EnumerationCapError

CHUNK_BITS = 15


@dataclass(frozen=True)
class ExactAnswers:
    """
    Exact log-partition function and marginals of a model.

    Parameters:
    - log_z (float): log Z.
    - singleton (np.ndarray): p_i(x_i = +1) for every node.
    - pairwise (np.ndarray): Shape (E, 2, 2) tables p_ij(x_i, x_j); index 0 is state +1, index 1 state -1.
    """

    log_z: float
    singleton: np.ndarray
    pairwise: np.ndarray


def _check_cap(model):
    cap = get_enumeration_cap()
    n = model.graph.node_count
    if n > cap:
        raise EnumerationCapError(f"exact enumeration supports at most {cap} nodes, model has {n}")


def _state_chunks(n):
    """Yield (S, N) arrays of ±1 states in a fixed order; bit k of the state index set means x_k = -1."""
    total = 1 << n
    chunk = 1 << min(CHUNK_BITS, n)
    shifts = np.arange(n, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = (idx[:, None] >> shifts) & 1
        yield 1.0 - 2.0 * bits


def _sweep(model, with_marginals):
    # running log-sum-exp: every accumulator is scaled by exp(-log_max)
    g = model.graph
    log_max = -np.inf
    total = 0.0
    node_plus = np.zeros(g.node_count)
    edge_plus = np.zeros(g.edge_count)
    for states in _state_chunks(g.node_count):
        log_w = -model.energy(states)
        chunk_max = float(log_w.max())
        if chunk_max > log_max:
            scale = np.exp(log_max - chunk_max) if np.isfinite(log_max) else 0.0
            total *= scale
            node_plus *= scale
            edge_plus *= scale
            log_max = chunk_max
        w = np.exp(log_w - log_max)
        total += float(w.sum())
        if with_marginals:
            plus = states > 0
            node_plus += w @ plus
            edge_plus += w @ (plus[:, g.heads] & plus[:, g.tails])
    return log_max + np.log(total), total, node_plus, edge_plus


def exact_log_partition(model):
    """log of the sum over all states of exp(-E(x)), accumulated in log-sum-exp form."""
    _check_cap(model)
    log_z, _, _, _ = _sweep(model, with_marginals=False)
    return float(log_z)


def exact_marginals(model):
    """
    Exact singleton and pairwise marginals computed in the same pass as Z.

    Pairwise tables are assembled from p_i(+1), p_j(+1) and p_ij(+1, +1), so their row and column
    sums reproduce the singleton marginals up to rounding.

    Raises:
    - EnumerationCapError: If the model has more nodes than the enumeration cap.
    """
    _check_cap(model)
    g = model.graph
    logging.debug(f"Enumerating {1 << g.node_count} states for {g.node_count} nodes")
    log_z, total, node_plus, edge_plus = _sweep(model, with_marginals=True)
    singleton = node_plus / total
    xi = edge_plus / total
    q_i, q_j = singleton[g.heads], singleton[g.tails]
    pairwise = np.empty((g.edge_count, 2, 2))
    pairwise[:, 0, 0] = xi
    pairwise[:, 0, 1] = q_i - xi
    pairwise[:, 1, 0] = q_j - xi
    pairwise[:, 1, 1] = 1.0 + xi - q_i - q_j
    return ExactAnswers(float(log_z), singleton, pairwise)
