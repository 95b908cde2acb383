import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from varinf.free_energy import EPS_BOX, pairwise_table, xi_star


#1. Inference results
@dataclass(frozen=True)
class InferenceResult:
    """
    Output of any inference algorithm.

    Parameters:
    - singleton (np.ndarray): Estimated p_i(+1) per node.
    - pairwise (np.ndarray): Shape (E, 2, 2) tables laid out like the exact ones (index 0 is state +1).
    - log_z (float): Estimated log-partition function; NaN when the algorithm has none.
    - converged (bool): Whether the underlying solver reached its tolerance.
    - iterations (int): Solver iterations (fmin steps or LBP sweeps, summed over stages).
    - c_final (float): Pairwise counting number used at the end, NaN when not applicable.
    - zeta_final (float): Pairwise scale factor used at the end, NaN when not applicable.
    - flags (tuple of str): Diagnostic flags such as 'model_modified_log_z' or 'c_max_reached'.
    - details (dict): Algorithm-specific diagnostics (schedules, certificates, restarts).
    """

    singleton: np.ndarray
    pairwise: np.ndarray
    log_z: float
    converged: bool
    iterations: int
    c_final: float = float('nan')
    zeta_final: float = float('nan')
    flags: tuple = ()
    details: dict = field(default_factory=dict, repr=False)

    def with_flags(self, *extra):
        """Copy of the result with additional flags appended."""
        return InferenceResult(self.singleton, self.pairwise, self.log_z, self.converged, self.iterations,
                               self.c_final, self.zeta_final, self.flags + tuple(extra), self.details)

    def summary(self):
        """JSON-ready dictionary used by the CLI."""
        return {
            'log_z': _json_float(self.log_z),
            'converged': bool(self.converged),
            'iterations': int(self.iterations),
            'c_final': _json_float(self.c_final),
            'zeta_final': _json_float(self.zeta_final),
            'flags': list(self.flags),
            'singleton': [float(v) for v in self.singleton],
            'pairwise': np.asarray(self.pairwise, dtype=float).tolist(),
        }


def _json_float(value):
    value = float(value)
    return value if np.isfinite(value) else None


def result_from_minimum(spec, minimum, c_final=float('nan'), zeta_final=float('nan'), flags=(), details=None):
    """
    Package an FminResult of `spec` as an InferenceResult.

    The pairwise tables are built at (q_min, xi*(q_min)) and the log-partition estimate is -f_value.
    """
    g = spec.graph
    q = np.clip(minimum.q_min, EPS_BOX, 1.0 - EPS_BOX)
    xi = xi_star(q[g.heads], q[g.tails], spec.model.J, spec.c.c_pair, spec.z.z_pair)
    tables = pairwise_table(q[g.heads], q[g.tails], xi, guard=True)
    info = {'grad_norm': minimum.grad_norm, 'restart_index': minimum.restart_index}
    info.update(details or {})
    return InferenceResult(q, tables, -float(minimum.f_value), bool(minimum.converged), int(minimum.iterations),
                           float(c_final), float(zeta_final), tuple(flags), info)


#2. Marginal dumps
def dump_marginals(result, path, exact=None):
    """
    Write estimated (and optionally exact) marginals of one run to a JSON file.

    Parameters:
    - result (InferenceResult): The estimate to store.
    - path (str): Destination file.
    - exact (ExactAnswers, optional): Ground truth stored next to the estimate.

    Raises:
    - IOError: If the file cannot be written.
    """
    payload = {'estimate': result.summary()}
    if exact is not None:
        payload['exact'] = {
            'log_z': float(exact.log_z),
            'singleton': [float(v) for v in exact.singleton],
            'pairwise': np.asarray(exact.pairwise, dtype=float).tolist(),
        }
    try:
        with open(path, 'w') as dump_file:
            json.dump(payload, dump_file)
    except IOError as e:
        logging.error(f"IOError when writing marginal dump {path}: {e}")
        raise IOError(f"Failed to write marginal dump {os.path.basename(path)}: {e}")


def load_marginals(path):
    """Read a dump written by dump_marginals; arrays come back as numpy arrays."""
    with open(path) as dump_file:
        payload = json.load(dump_file)
    for part in payload.values():
        part['singleton'] = np.array(part['singleton'], dtype=float)
        part['pairwise'] = np.array(part['pairwise'], dtype=float)
        part['log_z'] = np.nan if part['log_z'] is None else float(part['log_z'])
    return payload
