"""Python bindings for the pmsim measurement simulator.

Configs and results cross the boundary as JSON text, so the dict helpers
below are thin wrappers around the C++ parser and serializer.
"""

import json

from . import _core
from ._core import (
    ConvergenceError,
    Error,
    IoError,
    ParseError,
    ScalingFit,
    SizingError,
    born_weights,
    expectation,
    fit_power_law,
    log_spaced,
    rabi_aligned_times,
    collapse_counts,
)

__version__ = _core.version()


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def normalize_config(config):
    return json.loads(_core.normalize_config(_text(config)))


def run(config):
    return json.loads(_core.run(_text(config)))


def sweep_csv(config, t_values, workers=0):
    return _core.sweep_csv(_text(config), list(t_values), workers)


def qubit_benchmark_config(theta, gap=2.0):
    return json.loads(_core.qubit_benchmark_config(theta, gap))


def cold_atom(params=None, level="analytic"):
    return json.loads(_core.cold_atom("" if params is None else _text(params), level))
