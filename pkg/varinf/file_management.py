import logging
import os

from varinf.errors import ModelParseError
from varinf.graph_model import parse_model, serialize_model


def ensure_directory(directory):
    """
    Create `directory` (and its parents) unless it already exists.

    Raises:
    - IOError: If the directory cannot be created.
    """
    try:
        os.makedirs(directory, exist_ok=True)
        logging.debug(f"Output directory ready: {directory}")
    except OSError as e:
        logging.error(f"Failed to create directory {directory}: {e}")
        raise IOError(f"Cannot create output directory {directory}: {e}")
    return directory


def load_model_file(path):
    """
    Read and parse a model file.

    Parameters:
    - path (str): Path to a file in the `ising N E` text format.

    Returns:
    - IsingModel: The parsed model.

    Raises:
    - IOError: If the file cannot be read.
    - ModelParseError: If the content is not UTF-8 text or is malformed.
    """
    try:
        with open(path, 'rb') as model_file:
            raw = model_file.read()
    except IOError as e:
        logging.error(f"Failed to read model file {path}: {e}")
        raise IOError(f"Cannot read model file {path}: {e}")
    try:
        text = raw.decode('utf-8')
    except UnicodeDecodeError as e:
        line = raw[:e.start].count(b"\n") + 1
        logging.error(f"Model file {path} is not UTF-8 text: {e}")
        raise ModelParseError(f"undecodable byte 0x{raw[e.start]:02x}", line=line)
    model = parse_model(text)
    logging.info(f"Loaded model with {model.graph.node_count} nodes and {model.graph.edge_count} edges from {path}")
    return model


def save_model_file(model, path):
    """Write `model` in the text format; returns the path."""
    try:
        with open(path, 'w', encoding='utf-8') as model_file:
            model_file.write(serialize_model(model))
    except IOError as e:
        logging.error(f"Failed to write model file {path}: {e}")
        raise IOError(f"Cannot write model file {path}: {e}")
    return path
