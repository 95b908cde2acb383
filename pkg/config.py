# in config.py
import os


def get_enumeration_cap(default=25):
    return int(os.getenv('VARINF_ENUMERATION_CAP', default))


def get_log_level(default='INFO'):
    return os.getenv('VARINF_LOG_LEVEL', default).upper()


def get_workers(default=1):
    return int(os.getenv('VARINF_WORKERS', default))


default_output_dir = os.getenv('VARINF_OUTPUT_DIR', 'results')

# θ half-widths allowed in replication mode: weak, medium and strong local potentials
replication_theta_half_widths = (0.2, 0.6, 1.0)
