"""Error measures between exact answers and an inference result."""
import numpy as np

from varinf.errors import GraphError


def err_singleton(exact, approx, normalize=True):
    """Mean (or, with normalize=False, summed) absolute difference of p_i(+1) over the nodes."""
    p = np.asarray(exact.singleton, dtype=float)
    q = np.asarray(approx.singleton, dtype=float)
    if p.shape != q.shape:
        raise GraphError(f"singleton marginals have shapes {p.shape} and {q.shape}")
    diff = np.abs(p - q)
    return float(diff.mean() if normalize else diff.sum()) if diff.size else 0.0


def err_pairwise(exact, approx, normalize=True):
    """
    l1 distance of the pairwise tables.

    Normalized: (1/E) sum_ij (1/4) sum_ab |p_ij(a, b) - p^_ij(a, b)|. Unnormalized: the plain sum. Graphs
    without edges score 0.
    """
    p = np.asarray(exact.pairwise, dtype=float)
    q = np.asarray(approx.pairwise, dtype=float)
    if p.shape != q.shape:
        raise GraphError(f"pairwise tables have shapes {p.shape} and {q.shape}")
    if p.shape[0] == 0:
        return 0.0
    diff = np.abs(p - q)
    return float(diff.mean() if normalize else diff.sum())


def err_log_z(exact, approx):
    """|log Z - estimate|; NaN when the estimate is not finite."""
    estimate = float(approx.log_z)
    if not np.isfinite(estimate):
        return float('nan')
    return abs(float(exact.log_z) - estimate)
