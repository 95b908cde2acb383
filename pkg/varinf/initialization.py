import logging
import os

from varinf.file_management import ensure_directory


#1. Output layout of a sweep run
def run_name(config):
    """Deterministic name of a sweep run, built from its family, model class, sweep kind and seed."""
    if config.run_name:
        return config.run_name
    return f"{config.graph_family.kind}_{config.model_class}_{config.sweep.kind}_seed{config.master_seed}"


def setup_file_paths(config):
    """
    Create the output directory of a sweep and return the paths of its artifacts.

    Parameters:
    - config (ExperimentConfig): The sweep configuration; files go to config.output_path.

    Returns:
    - dict: Paths keyed 'raw_csv', 'summary_csv', 'summary_excel', 'manifest' and 'dumps_dir'. The dumps
      directory is created only when config.dump_marginals is set.

    Raises:
    - IOError: If a directory cannot be created.
    """
    name = run_name(config)
    output_dir = ensure_directory(config.output_path)
    paths = {
        'raw_csv': os.path.join(output_dir, f"{name}_raw.csv"),
        'summary_csv': os.path.join(output_dir, f"{name}_summary.csv"),
        'summary_excel': os.path.join(output_dir, f"{name}_summary.xlsx"),
        'manifest': os.path.join(output_dir, f"{name}_manifest.json"),
        'dumps_dir': os.path.join(output_dir, f"{name}_marginals"),
    }
    if config.dump_marginals:
        ensure_directory(paths['dumps_dir'])
    logging.debug(f"Output paths for run {name}: {paths}")
    return paths
