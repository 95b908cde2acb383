"""
Error sweeps over random models.

Every model instance is identified by (sweep point, theta scenario, repetition). Its seed is derived from
the master seed and these indices only, so records do not depend on execution order or worker count.
"""
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

import config as settings_env
from varinf.errors import ConfigError, EnumerationCapError
from varinf.exact_oracle import exact_marginals
from varinf.graph_model import make_complete, make_erdos_renyi, make_grid, pairwise_range, sample_ising
from varinf.inference import ALGORITHMS, PARAMETRIC, InferenceSettings, run_algorithm
from varinf.initialization import run_name, setup_file_paths
from varinf.manifest import save_manifest
from varinf.metrics import err_log_z, err_pairwise, err_singleton
from varinf.reporting import compile_summary, save_records
from varinf.result_handling import dump_marginals

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = ['schema_version', 'family', 'n_nodes', 'n_edges', 'model_class', 'theta_halfwidth',
               'sweep_kind', 'sweep_value', 'rep', 'instance_seed', 'algorithm', 'err_singleton',
               'err_pairwise', 'err_logZ', 'logz_est', 'logz_exact', 'converged', 'iterations',
               'c_final', 'zeta_final', 'wall_ms']
ROSTER = tuple(name for name in ALGORITHMS if name not in PARAMETRIC)
GRID_ALGORITHM = {'over_c': 'fc', 'over_zeta': 'fzeta'}


#1. Configuration
class GraphFamily(BaseModel):
    """complete(n), grid(rows, cols) or erdos_renyi(n, p)."""

    model_config = ConfigDict(frozen=True, extra='forbid')

    kind: Literal['complete', 'grid', 'erdos_renyi']
    n: Optional[int] = Field(None, ge=1)
    rows: Optional[int] = Field(None, ge=1)
    cols: Optional[int] = Field(None, ge=1)
    p: Optional[float] = Field(None, ge=0, le=1)

    @model_validator(mode='after')
    def check_arguments(self):
        if self.kind == 'grid' and (self.rows is None or self.cols is None):
            raise ValueError("grid family needs rows and cols")
        if self.kind in ('complete', 'erdos_renyi') and self.n is None:
            raise ValueError(f"{self.kind} family needs n")
        if self.kind == 'erdos_renyi' and self.p is None:
            raise ValueError("erdos_renyi family needs p")
        return self

    @property
    def node_count(self):
        return self.rows * self.cols if self.kind == 'grid' else self.n

    def build(self, seed):
        if self.kind == 'complete':
            return make_complete(self.n)
        if self.kind == 'grid':
            return make_grid(self.rows, self.cols)
        return make_erdos_renyi(self.n, self.p, seed)


class SweepSpec(BaseModel):
    """
    The swept quantity.

    over_jhat varies the pairwise range J-hat; over_c and over_zeta keep j_hat fixed and vary the shared
    counting number or scale factor on the same instances.
    """

    model_config = ConfigDict(frozen=True, extra='forbid')

    kind: Literal['over_c', 'over_zeta', 'over_jhat']
    values: List[float]
    j_hat: Optional[float] = Field(None, gt=0)

    @field_validator('values')
    @classmethod
    def check_grid(cls, values):
        if not values:
            raise ValueError("sweep grid is empty")
        if not all(math.isfinite(v) for v in values):
            raise ValueError("sweep grid values must be finite")
        if list(values) != sorted(values):
            raise ValueError("sweep grid must be sorted")
        return values

    @model_validator(mode='after')
    def check_kind(self):
        if self.kind in GRID_ALGORITHM and self.j_hat is None:
            raise ValueError(f"{self.kind} sweeps need j_hat")
        if self.kind == 'over_c' and self.values[0] <= 0:
            raise ValueError("counting numbers must be positive")
        if self.kind == 'over_jhat' and self.values[0] <= 0:
            raise ValueError("J-hat values must be positive")
        return self


class ExperimentConfig(BaseModel):
    """A complete sweep, loaded from JSON by `varinf sweep --config`."""

    model_config = ConfigDict(frozen=True, extra='forbid', protected_namespaces=())

    graph_family: GraphFamily
    model_class: Literal['attractive', 'mixed']
    sweep: SweepSpec
    theta_scenarios: List[float] = Field(min_length=1)
    repetitions: int = Field(1, ge=1)
    algorithms: List[str] = Field(default_factory=lambda: ['bethe'])
    master_seed: int = Field(0, ge=0)
    output_path: str = settings_env.default_output_dir
    run_name: Optional[str] = None
    replication_mode: bool = False
    normalize_errors: bool = True
    dump_marginals: bool = False
    record_timing: bool = False
    workers: int = Field(default_factory=settings_env.get_workers, ge=1)
    settings: InferenceSettings = Field(default_factory=InferenceSettings)

    @field_validator('theta_scenarios')
    @classmethod
    def check_half_widths(cls, widths):
        if any(w < 0 or not math.isfinite(w) for w in widths):
            raise ValueError("theta half-widths must be finite and nonnegative")
        return widths

    @field_validator('algorithms')
    @classmethod
    def check_algorithms(cls, algorithms):
        unknown = [name for name in algorithms if name not in ROSTER]
        if unknown:
            raise ValueError(f"unknown algorithms {unknown}; choose from {list(ROSTER)}")
        if len(set(algorithms)) != len(algorithms):
            raise ValueError("algorithms listed twice")
        return algorithms

    @model_validator(mode='after')
    def check_replication(self):
        if self.replication_mode:
            allowed = set(settings_env.replication_theta_half_widths)
            if not set(self.theta_scenarios) <= allowed:
                raise ValueError(f"replication mode allows theta half-widths {sorted(allowed)} only")
        if not self.algorithms and self.sweep.kind == 'over_jhat':
            raise ValueError("over_jhat sweeps need at least one algorithm")
        return self


def load_experiment_config(path):
    """
    Read an ExperimentConfig from a JSON file.

    Raises:
    - ConfigError: If the file is missing, not JSON or fails validation.
    """
    try:
        with open(path, 'r', encoding='utf-8') as config_file:
            data = json.load(config_file)
    except (IOError, json.JSONDecodeError) as e:
        logging.error(f"Failed to read experiment config {path}: {e}")
        raise ConfigError(f"cannot read experiment config {path}: {e}")
    return parse_experiment_config(data)


def parse_experiment_config(data):
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid experiment config: {e}")


#2. Records
@dataclass(frozen=True)
class ErrorRecord:
    schema_version: int
    family: str
    n_nodes: int
    n_edges: int
    model_class: str
    theta_halfwidth: float
    sweep_kind: str
    sweep_value: float
    rep: int
    instance_seed: int
    algorithm: str
    err_singleton: float
    err_pairwise: float
    err_logZ: float
    logz_est: float
    logz_exact: float
    converged: bool
    iterations: int
    c_final: float
    zeta_final: float
    wall_ms: float

    def as_row(self):
        return asdict(self)


def instance_seed(master_seed, point_index, scenario_index, rep):
    """64-bit seed of one model instance, a pure function of the master seed and the instance indices."""
    state = np.random.SeedSequence([master_seed, point_index, scenario_index, rep]).generate_state(2)
    return int(state[0]) << 32 | int(state[1])


def _child_seeds(seed):
    # graph, potentials, solvers
    return [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(seed).spawn(3)]


def _instance_tasks(config):
    """(point index, sweep value or None, j_hat, scenario index, rep) for every model instance."""
    sweep = config.sweep
    if sweep.kind == 'over_jhat':
        points = [(k, v, v) for k, v in enumerate(sweep.values)]
    else:
        points = [(0, None, sweep.j_hat)]
    return [(point, value, j_hat, scenario, rep)
            for point, value, j_hat in points
            for scenario in range(len(config.theta_scenarios))
            for rep in range(config.repetitions)]


#3. One instance
def _evaluate(config, model, exact, seed, algorithm, value, dump_path):
    solver_settings = config.settings.model_copy(update={
        'fmin': config.settings.fmin.model_copy(update={'seed': seed}),
        'lbp': config.settings.lbp.model_copy(update={'seed': seed}),
    })
    start = time.perf_counter()
    try:
        result = run_algorithm(algorithm, model, solver_settings, value)
    except Exception as e:
        logging.error(f"{algorithm} failed on instance (value={value}): {e}")
        return dict(err_singleton=np.nan, err_pairwise=np.nan, err_logZ=np.nan, logz_est=np.nan,
                    converged=False, iterations=0, c_final=np.nan, zeta_final=np.nan,
                    wall_ms=np.nan)
    wall_ms = (time.perf_counter() - start) * 1000.0 if config.record_timing else np.nan
    if dump_path is not None:
        dump_marginals(result, dump_path, exact)
    return dict(
        err_singleton=err_singleton(exact, result, config.normalize_errors),
        err_pairwise=err_pairwise(exact, result, config.normalize_errors),
        err_logZ=err_log_z(exact, result),
        logz_est=float(result.log_z),
        converged=bool(result.converged),
        iterations=int(result.iterations),
        c_final=float(result.c_final),
        zeta_final=float(result.zeta_final),
        wall_ms=wall_ms,
    )


def _run_instance(config, task, dumps_dir=None):
    point, value, j_hat, scenario, rep = task
    half_width = config.theta_scenarios[scenario]
    seed = instance_seed(config.master_seed, point, scenario, rep)
    graph_seed, model_seed, solver_seed = _child_seeds(seed)

    graph = config.graph_family.build(graph_seed)
    j_low, j_high = pairwise_range(config.model_class, j_hat)
    model = sample_ising(graph, j_low, j_high, half_width, model_seed)
    exact = exact_marginals(model)

    runs = [(name, None) for name in config.algorithms]
    if config.sweep.kind in GRID_ALGORITHM:
        runs += [(GRID_ALGORITHM[config.sweep.kind], v) for v in config.sweep.values]

    records = []
    for name, grid_value in runs:
        sweep_value = value if grid_value is None else grid_value
        dump_path = None
        if dumps_dir is not None:
            suffix = '' if grid_value is None else f"_{grid_value:g}"
            dump_path = os.path.join(dumps_dir, f"p{point}_s{scenario}_r{rep}_{name}{suffix}.json")
        outcome = _evaluate(config, model, exact, solver_seed, name, grid_value, dump_path)
        records.append(ErrorRecord(
            schema_version=CSV_SCHEMA_VERSION,
            family=config.graph_family.kind,
            n_nodes=graph.node_count,
            n_edges=graph.edge_count,
            model_class=config.model_class,
            theta_halfwidth=half_width,
            sweep_kind=config.sweep.kind,
            sweep_value=np.nan if sweep_value is None else float(sweep_value),
            rep=rep,
            instance_seed=seed,
            algorithm=name,
            logz_exact=float(exact.log_z),
            **outcome,
        ))
    logging.debug(f"Instance point={point} scenario={scenario} rep={rep} done ({len(records)} records)")
    return records


def _record_key(record):
    value = record.sweep_value
    return record.algorithm, (1, 0.0) if math.isnan(value) else (0, value)


#4. Sweeps
def run_sweep(config, write=True):
    """
    Run every algorithm on every model instance of the sweep and collect one ErrorRecord per run.

    For each sweep point, theta scenario and repetition a graph and model are sampled from the instance
    seed and solved exactly once. over_c and over_zeta sweeps add one 'fc' or 'fzeta' row per grid value
    to the roster rows. Algorithm failures are logged and recorded as non-converged rows. With write=True
    the raw CSV, the summary (CSV and Excel) and the manifest are written to config.output_path.

    Parameters:
    - config (ExperimentConfig): The sweep.
    - write (bool): Whether to write the output files.

    Returns:
    - list of ErrorRecord: Sorted by (sweep point, scenario, repetition, algorithm, grid value).

    Raises:
    - EnumerationCapError: If the graphs exceed the exact-enumeration cap.
    """
    cap = settings_env.get_enumeration_cap()
    if config.graph_family.node_count > cap:
        raise EnumerationCapError(f"graph family has {config.graph_family.node_count} nodes, "
                                  f"exact enumeration supports at most {cap}")

    paths = setup_file_paths(config) if write else None
    dumps_dir = paths['dumps_dir'] if write and config.dump_marginals else None
    tasks = _instance_tasks(config)
    logging.info(f"Sweep {config.sweep.kind}: {len(tasks)} model instances, algorithms {config.algorithms}, "
                 f"{config.workers} worker(s)")

    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            batches = list(executor.map(_run_instance, [config] * len(tasks), tasks, [dumps_dir] * len(tasks)))
    else:
        batches = [_run_instance(config, task, dumps_dir) for task in tasks]

    # batches follow the (point, scenario, rep) order of the tasks
    records = [r for batch in batches for r in sorted(batch, key=_record_key)]

    if write:
        frame = save_records(records, CSV_COLUMNS, paths['raw_csv'])
        summary_csv, summary_excel = compile_summary(frame, paths['summary_csv'], paths['summary_excel'])
        files = [{'path': os.path.basename(paths['raw_csv']), 'type': 'rawCSV'}]
        if summary_csv:
            files += [{'path': os.path.basename(summary_csv), 'type': 'summaryCSV'},
                      {'path': os.path.basename(summary_excel), 'type': 'summaryExcel'}]
        if dumps_dir:
            files.append({'path': os.path.basename(dumps_dir), 'type': 'marginalDumps'})
        save_manifest(config.output_path, run_name(config), config.model_dump(mode='json'), files)
    logging.info(f"Sweep finished with {len(records)} records")
    return records


def sweep_c(config):
    """run_sweep for an over_c configuration; rows of algorithm 'fc' carry the counting number."""
    if config.sweep.kind != 'over_c':
        raise ConfigError(f"sweep_c needs an over_c sweep, got {config.sweep.kind}")
    return run_sweep(config)


def sweep_zeta(config):
    """run_sweep for an over_zeta configuration; rows of algorithm 'fzeta' carry the scale factor."""
    if config.sweep.kind != 'over_zeta':
        raise ConfigError(f"sweep_zeta needs an over_zeta sweep, got {config.sweep.kind}")
    return run_sweep(config)
