"""Adaptive choice of the pairwise counting number (ADAPT-c) and of the pairwise scale factor (ADAPT-zeta)."""
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from varinf.fmin import FminConfig, minimize
from varinf.free_energy import counting_spec, zeta_spec
from varinf.lbp_sbp import mooij_radius
from varinf.result_handling import result_from_minimum


class AdaptCConfig(BaseModel):
    """delta_c is the step of the c grid, c_tol the plateau tolerance on successive log Z estimates."""

    model_config = ConfigDict(frozen=True, extra='forbid')

    delta_c: float = Field(0.1, gt=0)
    c_tol: float = Field(0.05, gt=0)
    c_max: float = Field(10.0, ge=1)
    fmin_config: FminConfig = Field(default_factory=FminConfig)


class AdaptZetaConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    delta_zeta: float = Field(0.02, gt=0, lt=1)
    fmin_config: FminConfig = Field(default_factory=FminConfig)


def _usable(minimum):
    return minimum.converged and np.isfinite(minimum.f_value)


#1. ADAPT-c
def adapt_c(model, config=None):
    """
    Increase a shared pairwise counting number until the log Z estimate stops moving.

    c = 1 (Bethe) is minimized with all restarts. Then c = 1 + k delta_c for k = 1, 2, ... with
    variable-valid local numbers c_i = 1 - c d_i; each step warm-starts a single restart from the
    previous minimizer and falls back to a full multi-restart minimization if that does not converge.
    The loop stops as soon as two successive estimates -min F_c differ by less than c_tol, or at c_max
    (flag 'c_max_reached'). If a minimization fails, the last successful step is returned with the
    flag 'fmin_failed'.

    Returns:
    - tuple: (InferenceResult, c_final). The visited (c, estimate) pairs are in details['c_schedule'].
    """
    config = config or AdaptCConfig()
    full = config.fmin_config
    warm = full.model_copy(update={'restarts': 1})

    spec = counting_spec(model, 1.0)
    minimum = minimize(spec, full)
    c_final = 1.0
    schedule = [(1.0, -minimum.f_value)]
    flags = []
    if not _usable(minimum):
        logging.warning("ADAPT-c: Bethe minimization failed")
        flags.append('fmin_failed')
    else:
        estimate = -minimum.f_value
        k = 1
        while True:
            c = min(round(1.0 + k * config.delta_c, 12), config.c_max)
            candidate_spec = counting_spec(model, c)
            candidate = minimize(candidate_spec, warm, q_init=minimum.q_min)
            if not _usable(candidate):
                logging.debug(f"ADAPT-c: warm start at c={c:.4g} failed, running all restarts")
                candidate = minimize(candidate_spec, full)
            if not _usable(candidate):
                logging.warning(f"ADAPT-c: minimization failed at c={c:.4g}, keeping c={c_final:.4g}")
                flags.append('fmin_failed')
                break

            spec, minimum, c_final = candidate_spec, candidate, c
            new_estimate = -candidate.f_value
            schedule.append((c, new_estimate))
            if abs(new_estimate - estimate) < config.c_tol:
                break
            if c >= config.c_max:
                logging.info(f"ADAPT-c: no plateau found up to c_max={config.c_max}")
                flags.append('c_max_reached')
                break
            estimate = new_estimate
            k += 1

    logging.info(f"ADAPT-c: c_final={c_final:.4g} after {len(schedule)} minimizations")
    result = result_from_minimum(spec, minimum, c_final=c_final, zeta_final=1.0, flags=flags,
                                 details={'c_schedule': schedule})
    return result, c_final


#2. ADAPT-zeta
def adapt_zeta(model, config=None):
    """
    Lower a shared pairwise scale factor until the uniqueness certificate holds, then minimize once.

    zeta runs through 1, 1 - delta_zeta, 1 - 2 delta_zeta, ... and stops at the first value where
    mooij_radius certifies a unique minimum. If the grid reaches zero, zeta = delta_zeta is used with
    the flag 'zeta_underflow'. The marginals come from the minimizer of F_zeta (zeta_i = 1); when
    zeta < 1 its log Z estimate belongs to the modified model and carries the flag 'model_modified_log_z'.

    Returns:
    - tuple: (InferenceResult, zeta_final).
    """
    config = config or AdaptZetaConfig()
    zeta = 1.0
    certificate = mooij_radius(model, zeta)
    flags = []
    k = 0
    while not certificate.holds:
        k += 1
        zeta = round(1.0 - k * config.delta_zeta, 12)
        if zeta <= 0.0:
            zeta = config.delta_zeta
            flags.append('zeta_underflow')
            certificate = mooij_radius(model, zeta)
            logging.warning(f"ADAPT-zeta: certificate never held, using zeta={zeta:.4g}")
            break
        certificate = mooij_radius(model, zeta)

    logging.info(f"ADAPT-zeta: zeta_final={zeta:.4g}, spectral radius {certificate.spectral_radius:.4f}")
    spec = zeta_spec(model, zeta)
    minimum = minimize(spec, config.fmin_config)
    if zeta < 1.0:
        flags.append('model_modified_log_z')
    details = {'spectral_radius': certificate.spectral_radius, 'certificate_holds': certificate.holds}
    result = result_from_minimum(spec, minimum, c_final=1.0, zeta_final=zeta, flags=flags, details=details)
    return result, zeta
