"""Quantum low-coherence reflectometry: simulated scans, TPI self-calibration
and separation measurement by autocorrelation.

Configurations are JSON documents (or dicts) with the layout written by
``qolcr print-config``. All lengths passed to and returned from functions in
this module are in meters unless a key name says otherwise.
"""

import json as _json

from . import _core
from ._core import (
    Calibration,
    ConfigError,
    Error,
    InsufficientPeaksError,
    IoError,
    ParseError,
    QualityError,
    Trace,
    autocorrelate,
    coherence_envelope,
)

__all__ = [
    "Calibration",
    "ConfigError",
    "Error",
    "InsufficientPeaksError",
    "IoError",
    "ParseError",
    "QualityError",
    "Trace",
    "autocorrelate",
    "calibrate",
    "coherence_envelope",
    "default_config",
    "linearity",
    "measure",
    "repeatability",
    "simulate",
]


def _text(config):
    if config is None or isinstance(config, str):
        return config
    return _json.dumps(config)


def default_config():
    """The bundled default configuration as a dict."""
    return _json.loads(_core.default_config())


def simulate(config=None):
    return _core.simulate(_text(config))


def calibrate(trace, config=None, grid_step=None):
    return _core.calibrate(trace, _text(config), grid_step)


def measure(calibration, expected_peaks=1, config=None):
    """Separation report as a dict (lengths in the units named by each key)."""
    return _core.measure(calibration, expected_peaks, _text(config))


def repeatability(config=None, runs=70):
    return _core.repeatability(_text(config), runs)


def linearity(config=None, step=5e-9, steps=10):
    return _core.linearity(_text(config), step, steps)
