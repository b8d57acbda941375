"""
Default numerical and operational settings.

Every value can be overridden with an environment variable carrying the
`NCMORITA_` prefix (e.g. `NCMORITA_DEFAULT_EPS=1e-10`).
"""

import logging
import os


def _env(name: str, default, cast=str):
    value = os.environ.get('NCMORITA_' + name)
    return default if value is None else cast(value)


TOOL_VERSION = '0.3.0'

# numerics
DEFAULT_EPS = _env('DEFAULT_EPS', 1e-9, float)
DEFAULT_SEED = _env('DEFAULT_SEED', 0, int)
DEFAULT_LEVEL_CAP = _env('DEFAULT_LEVEL_CAP', 3, int)
JACOBI_MAX_SWEEPS = _env('JACOBI_MAX_SWEEPS', 100, int)

# sampling budgets
PROBE_RESTARTS = _env('PROBE_RESTARTS', 20, int)
PROBE_STEPS = _env('PROBE_STEPS', 60, int)
CP_SAMPLES = _env('CP_SAMPLES', 200, int)
AXIOM_SAMPLES = _env('AXIOM_SAMPLES', 12, int)

# size caps
MAX_AMBIENT_DIM = _env('MAX_AMBIENT_DIM', 64, int)
MAX_VERTICES = _env('MAX_VERTICES', 32, int)
CANON_NODE_BUDGET = _env('CANON_NODE_BUDGET', 200_000, int)

# logging
LOG_LEVEL = getattr(logging, _env('LOG_LEVEL', 'WARNING').upper(), logging.WARNING)
LOG_FILE = _env('LOG_FILE', 'logs_runs.txt')
