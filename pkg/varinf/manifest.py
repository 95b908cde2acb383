import json
import logging
import os


def save_manifest(output_dir, run_name, config_data, files):
    """
    Save a JSON manifest with the configuration of a sweep run and the files it produced.

    Parameters:
    - output_dir (str): Directory of the manifest.
    - run_name (str): Names the file `<run_name>_manifest.json`.
    - config_data (dict): JSON-ready echo of the ExperimentConfig.
    - files (list of dict): One {'path': ..., 'type': ...} entry per produced file.

    Returns:
    - str: Path of the manifest.

    Raises:
    - PermissionError: If the file cannot be written due to permissions.
    - IOError: On other I/O failures.
    """
    manifest_path = os.path.join(output_dir, f"{run_name}_manifest.json")
    manifest_data = {
        "run_name": run_name,
        "config": config_data,
        "files": files,
    }
    try:
        with open(manifest_path, 'w') as manifest_file:
            json.dump(manifest_data, manifest_file, indent=2, sort_keys=True)
    except PermissionError as e:
        logging.error(f"No permission to write the manifest of run {run_name} at {manifest_path}: {e}")
        raise PermissionError(f"Permission denied for run manifest {manifest_path}: {e}")
    except IOError as e:
        logging.error(f"Writing the manifest of run {run_name} to {manifest_path} failed: {e}")
        raise IOError(f"Cannot write run manifest {manifest_path}: {e}")
    return manifest_path


def load_manifest(manifest_path):
    """Read a manifest written by save_manifest; FileNotFoundError propagates."""
    try:
        with open(manifest_path, 'r') as manifest_file:
            return json.load(manifest_file)
    except json.JSONDecodeError as e:
        logging.error(f"Manifest {manifest_path} is not valid JSON: {e}")
        raise IOError(f"Corrupt manifest file {manifest_path}: {e}")
