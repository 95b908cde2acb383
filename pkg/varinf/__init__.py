"""Generalized pairwise free energies for binary pairwise models."""
from varinf.errors import (BoxConstraintError, ConfigError, CountingSchemeError, EnumerationCapError,
                           GraphError, ModelParseError, VarInfError)
from varinf.graph_model import (Graph, IsingModel, make_complete, make_erdos_renyi, make_grid, make_random_tree,
                                parse_model, sample_ising, serialize_model)
from varinf.inference import ALGORITHMS, InferenceSettings, run_algorithm
from varinf.result_handling import InferenceResult

__all__ = [
    'ALGORITHMS', 'BoxConstraintError', 'ConfigError', 'CountingSchemeError', 'EnumerationCapError', 'Graph',
    'GraphError', 'InferenceResult', 'InferenceSettings', 'IsingModel', 'ModelParseError', 'VarInfError',
    'make_complete', 'make_erdos_renyi', 'make_grid', 'make_random_tree', 'parse_model', 'run_algorithm',
    'sample_ising', 'serialize_model',
]
