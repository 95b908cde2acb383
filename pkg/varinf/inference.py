import logging

from pydantic import BaseModel, ConfigDict, Field

from varinf.adaptive import AdaptCConfig, AdaptZetaConfig, adapt_c, adapt_zeta
from varinf.counting_schemes import ls_convex_counting, trw_counting
from varinf.errors import ConfigError
from varinf.fmin import FminConfig, minimize
from varinf.free_energy import FreeEnergySpec, bethe_spec, counting_spec, uniform_scaling, zeta_spec
from varinf.lbp_sbp import LbpConfig, lbp_run, sbp
from varinf.result_handling import result_from_minimum


class InferenceSettings(BaseModel):
    """Solver settings shared by every algorithm of a run."""

    model_config = ConfigDict(frozen=True, extra='forbid')

    fmin: FminConfig = Field(default_factory=FminConfig)
    lbp: LbpConfig = Field(default_factory=LbpConfig)
    adapt_c: AdaptCConfig = Field(default_factory=AdaptCConfig)
    adapt_zeta: AdaptZetaConfig = Field(default_factory=AdaptZetaConfig)
    sbp_delta_zeta: float = Field(0.05, gt=0, le=1)


#1. Algorithms
def _minimized(spec, settings, c_final, zeta_final, details=None):
    return result_from_minimum(spec, minimize(spec, settings.fmin), c_final=c_final, zeta_final=zeta_final,
                               details=details)


def run_bethe(model, settings, value=None):
    return _minimized(bethe_spec(model), settings, 1.0, 1.0)


def run_trw(model, settings, value=None):
    counting = trw_counting(model.graph)
    spec = FreeEnergySpec(model, counting, uniform_scaling(model.graph, 1.0))
    return _minimized(spec, settings, counting.mean_pair, 1.0)


def run_ls_convex(model, settings, value=None):
    counting = ls_convex_counting(model.graph)
    spec = FreeEnergySpec(model, counting, uniform_scaling(model.graph, 1.0))
    return _minimized(spec, settings, counting.mean_pair, 1.0)


def run_sbp(model, settings, value=None):
    return sbp(model, settings.sbp_delta_zeta, settings.lbp)


def run_lbp(model, settings, value=None):
    _, result = lbp_run(model, 1.0, settings.lbp)
    return result


def run_adapt_c(model, settings, value=None):
    config = settings.adapt_c.model_copy(update={'fmin_config': settings.fmin})
    result, _ = adapt_c(model, config)
    return result


def run_adapt_zeta(model, settings, value=None):
    config = settings.adapt_zeta.model_copy(update={'fmin_config': settings.fmin})
    result, _ = adapt_zeta(model, config)
    return result


def run_fc(model, settings, value):
    return _minimized(counting_spec(model, value), settings, float(value), 1.0)


def run_fzeta(model, settings, value):
    return _minimized(zeta_spec(model, value), settings, 1.0, float(value))


ALGORITHMS = {
    'bethe': run_bethe,
    'trw': run_trw,
    'ls_convex': run_ls_convex,
    'sbp': run_sbp,
    'lbp': run_lbp,
    'adapt_c': run_adapt_c,
    'adapt_zeta': run_adapt_zeta,
    'fc': run_fc,
    'fzeta': run_fzeta,
}
# algorithms that need a c or zeta value
PARAMETRIC = {'fc': 'c', 'fzeta': 'zeta'}


def run_algorithm(name, model, settings=None, value=None):
    """
    Run one algorithm of the roster on a model.

    Parameters:
    - name (str): A key of ALGORITHMS.
    - model (IsingModel): The model.
    - settings (InferenceSettings, optional): Solver settings; defaults to InferenceSettings().
    - value (float, optional): c for 'fc', zeta for 'fzeta'.

    Returns:
    - InferenceResult: The algorithm's estimate.

    Raises:
    - ConfigError: If the name is unknown or a parametric algorithm has no value.
    """
    if name not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm '{name}', choose from {sorted(ALGORITHMS)}")
    if name in PARAMETRIC and value is None:
        raise ConfigError(f"algorithm '{name}' needs --{PARAMETRIC[name]}")
    settings = settings or InferenceSettings()
    logging.debug(f"Running {name} on a model with {model.graph.node_count} nodes")
    return ALGORITHMS[name](model, settings, value)
