"""Stationary states, spectra and dynamics of the radial focusing wave equation outside a ball."""

import json as _json

from . import _core
from ._core import FORMAT_VERSION, WavelabError, eigenvalues, profile_zeros, stationary

__all__ = [
    "FORMAT_VERSION",
    "WavelabError",
    "eigenvalues",
    "evolve",
    "profile_zeros",
    "run_scenario",
    "scenario_defaults",
    "scenarios",
    "stationary",
    "verify",
]


def scenarios():
    """Names of the registered scenarios."""
    return list(_core.scenario_names())


def scenario_defaults(name):
    return _json.loads(_core.scenario_defaults(name))


def run_scenario(name, out_root=None, **overrides):
    """Run a scenario and return its record as a dict.

    Files are written only when out_root is given.
    """
    text = _core.run_scenario(name, _json.dumps(overrides), str(out_root) if out_root else "")
    return _json.loads(text)


def evolve(config_text):
    """Run an evolution described by TOML text; returns the summary with the time series."""
    return _json.loads(_core.evolve_toml(config_text))


def verify(ids=(), quick=False):
    """Acceptance checks; all thirteen when ids is empty."""
    return _core.verify(list(ids), quick)
