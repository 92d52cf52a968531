"""Explicit ergodicity rates for degenerate diffusions, with Monte-Carlo verification.

Commands take the TOML text of a run configuration and return the report as a dict.
Passing ``out`` also writes the report files into that directory.
"""

import json

from . import _ergokit
from ._ergokit import ConfigError, ErgokitError, NumericalError

__all__ = [
    "ConfigError",
    "ErgokitError",
    "NumericalError",
    "constants",
    "fiber_rates",
    "gap",
    "identities",
    "langevin_rates",
    "quadratic_gap",
    "verify",
]


def langevin_rates(alpha, beta, gap, kato):
    return json.loads(_ergokit.langevin_rates(alpha, beta, gap, list(kato)))


def fiber_rates(sigma, d, gap, kato):
    return json.loads(_ergokit.fiber_rates(sigma, d, gap, list(kato)))


def quadratic_gap(coefficients, levels=3):
    return json.loads(_ergokit.quadratic_gap(list(coefficients), levels))


def _command(fn, config, out=None):
    return json.loads(fn(config, None if out is None else str(out)))


def gap(config, out=None):
    return _command(_ergokit.gap, config, out)


def constants(config, out=None):
    return _command(_ergokit.constants, config, out)


def verify(config, out=None):
    return _command(_ergokit.verify, config, out)


def identities(config, out=None):
    return _command(_ergokit.identities, config, out)
