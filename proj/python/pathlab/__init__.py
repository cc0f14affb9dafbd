"""Python front end for the pathlab core: JSON map specs in, plain Python values out."""

import json as _json

from . import _core
from ._core import ConfigError, NumericalError

__all__ = [
    "ConfigError",
    "NumericalError",
    "eigenvalues",
    "topological_growth",
    "qr_spectrum",
    "integrated_exponent",
    "leaf_volumes",
    "run",
]


def _spec(map_spec):
    return map_spec if isinstance(map_spec, str) else _json.dumps(map_spec)


def eigenvalues(map_spec):
    return _core.eigenvalues(_spec(map_spec))


def topological_growth(map_spec, bundle):
    """lambda_W and the carried class h_W for a 1-based bundle selector."""
    return _json.loads(_core.topological_growth(_spec(map_spec), list(bundle)))


def qr_spectrum(map_spec, x, steps):
    return _core.qr_spectrum(_spec(map_spec), list(x), int(steps))


def integrated_exponent(map_spec, bundle, samples, seed=1, estimator="uniform", threads=1):
    return _json.loads(
        _core.integrated_exponent(_spec(map_spec), list(bundle), int(samples), int(seed), estimator, int(threads))
    )


def leaf_volumes(map_spec, bundle, x, radius, delta, steps):
    """Volumes of the iterated leaf disk after each step, and whether the node budget ran out."""
    volumes, truncated = _core.leaf_volumes(_spec(map_spec), list(bundle), list(x), radius, delta, int(steps))
    return volumes, truncated


def run(command, config_path, out, seed=None, threads=1):
    """Same as the CLI; returns (exit_code, log)."""
    return _core.run(command, str(config_path), str(out), seed, int(threads))
