import argparse
import json
import logging
import sys
import warnings

import numpy as np
from pydantic import ValidationError

from config import get_log_level
from varinf.errors import ConfigError, GraphError, VarInfError
from varinf.exact_oracle import exact_marginals
from varinf.file_management import load_model_file, save_model_file
from varinf.fmin import FminConfig
from varinf.graph_model import (make_complete, make_erdos_renyi, make_grid, make_random_tree, pairwise_range,
                                sample_ising, serialize_model)
from varinf.harness import load_experiment_config, run_sweep
from varinf.inference import ALGORITHMS, InferenceSettings, run_algorithm
from varinf.initialization import run_name
from varinf.result_handling import dump_marginals

warnings.filterwarnings("ignore", category=DeprecationWarning)

FMIN_FLAGS = ('grad_tol', 'max_iters', 'restarts', 'seed')


#1. Argument parsing
def build_parser():
    """Argument parser of the `varinf` command line."""
    parser = argparse.ArgumentParser(prog='varinf',
                                     description="Approximate inference with generalized pairwise free energies.")
    commands = parser.add_subparsers(dest='command', required=True)

    sweep = commands.add_parser('sweep', help="Run an error sweep described by a JSON config.")
    sweep.add_argument('--config', required=True, help="Path to an ExperimentConfig JSON file.")

    infer = commands.add_parser('infer', help="Run one algorithm on a model file.")
    infer.add_argument('--model', required=True, help="Model file in the 'ising N E' format.")
    infer.add_argument('--algo', required=True, choices=sorted(ALGORITHMS))
    value = infer.add_mutually_exclusive_group()
    value.add_argument('--c', type=float, help="Counting number for --algo fc.")
    value.add_argument('--zeta', type=float, help="Scale factor for --algo fzeta.")
    infer.add_argument('--grad-tol', dest='grad_tol', type=float)
    infer.add_argument('--max-iters', dest='max_iters', type=int)
    infer.add_argument('--restarts', type=int)
    infer.add_argument('--seed', type=int)
    infer.add_argument('--delta-c', dest='delta_c', type=float)
    infer.add_argument('--c-tol', dest='c_tol', type=float)
    infer.add_argument('--c-max', dest='c_max', type=float)
    infer.add_argument('--delta-zeta', dest='delta_zeta', type=float)
    infer.add_argument('--sbp-delta-zeta', dest='sbp_delta_zeta', type=float)
    infer.add_argument('--dump', help="Also write the marginals to this JSON file.")

    exact = commands.add_parser('exact', help="Exact log Z and marginals by enumeration.")
    exact.add_argument('--model', required=True)

    gen = commands.add_parser('gen', help="Sample a random model.")
    gen.add_argument('--family', required=True, choices=['complete', 'grid', 'er', 'tree'])
    gen.add_argument('--n', type=int)
    gen.add_argument('--rows', type=int)
    gen.add_argument('--cols', type=int)
    gen.add_argument('--p', type=float)
    gen.add_argument('--model-class', dest='model_class', default='mixed', choices=['attractive', 'mixed'])
    gen.add_argument('--j-hat', dest='j_hat', type=float, default=1.0)
    gen.add_argument('--theta-half-width', dest='theta_half_width', type=float, default=0.6)
    gen.add_argument('--seed', type=int, default=0)
    gen.add_argument('--output', help="Write the model here instead of stdout.")
    return parser


#2. Commands
def _settings_from_args(args):
    fmin = {name: getattr(args, name) for name in FMIN_FLAGS if getattr(args, name) is not None}
    adapt_c = {name: getattr(args, name) for name in ('delta_c', 'c_tol', 'c_max') if getattr(args, name) is not None}
    extra = {'sbp_delta_zeta': args.sbp_delta_zeta} if args.sbp_delta_zeta is not None else {}
    try:
        fmin_config = FminConfig(**fmin)
        data = {'fmin': fmin_config, 'adapt_c': {**adapt_c, 'fmin_config': fmin_config},
                'adapt_zeta': {'fmin_config': fmin_config}, **extra}
        if args.delta_zeta is not None:
            data['adapt_zeta']['delta_zeta'] = args.delta_zeta
        if args.seed is not None:
            data['lbp'] = {'seed': args.seed}
        return InferenceSettings.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid solver settings: {e}")


def _read_model(path):
    try:
        return load_model_file(path)
    except IOError as e:
        raise ConfigError(str(e))


def command_sweep(args):
    config = load_experiment_config(args.config)
    try:
        records = run_sweep(config)
    except IOError as e:
        raise ConfigError(f"cannot write sweep output: {e}")
    return {'run_name': run_name(config), 'output_path': config.output_path, 'records': len(records)}


def command_infer(args):
    model = _read_model(args.model)
    settings = _settings_from_args(args)
    value = args.c if args.algo == 'fc' else args.zeta if args.algo == 'fzeta' else None
    try:
        result = run_algorithm(args.algo, model, settings, value)
    except GraphError as e:
        raise ConfigError(f"invalid value for {args.algo}: {e}")
    if args.dump:
        dump_marginals(result, args.dump)
    return {'algorithm': args.algo, **result.summary()}


def command_exact(args):
    exact = exact_marginals(_read_model(args.model))
    return {'log_z': exact.log_z, 'singleton': exact.singleton.tolist(), 'pairwise': exact.pairwise.tolist()}


def command_gen(args):
    graph_seed, model_seed = (int(s.generate_state(1)[0]) for s in np.random.SeedSequence(args.seed).spawn(2))
    try:
        if args.family == 'grid':
            if args.rows is None or args.cols is None:
                raise ConfigError("--family grid needs --rows and --cols")
            graph = make_grid(args.rows, args.cols)
        else:
            if args.n is None:
                raise ConfigError(f"--family {args.family} needs --n")
            if args.family == 'complete':
                graph = make_complete(args.n)
            elif args.family == 'tree':
                graph = make_random_tree(args.n, graph_seed)
            else:
                if args.p is None:
                    raise ConfigError("--family er needs --p")
                graph = make_erdos_renyi(args.n, args.p, graph_seed)
        j_low, j_high = pairwise_range(args.model_class, args.j_hat)
        model = sample_ising(graph, j_low, j_high, args.theta_half_width, model_seed)
    except ValueError as e:
        raise ConfigError(str(e))
    if args.output is None:
        sys.stdout.write(serialize_model(model))
        return None
    save_model_file(model, args.output)
    return {'path': args.output, 'n_nodes': graph.node_count, 'n_edges': graph.edge_count}


COMMANDS = {'sweep': command_sweep, 'infer': command_infer, 'exact': command_exact, 'gen': command_gen}


def main(argv=None):
    """
    Entry point of the `varinf` command line.

    Results are printed as JSON on stdout; logs go to stderr.

    Returns:
    - int: 0 on success, 2 for configuration errors, 3 for unparsable model files and 4 when a model is
      too large for exact enumeration.
    """
    logging.basicConfig(level=get_log_level(), format='%(asctime)s - %(levelname)s - %(message)s')
    args = build_parser().parse_args(argv)
    try:
        payload = COMMANDS[args.command](args)
    except VarInfError as e:
        logging.error(f"{args.command} failed: {e}")
        return e.exit_code
    if payload is not None:
        print(json.dumps(payload, indent=2))
    return 0


if __name__ == '__main__':
    sys.exit(main())
