"""Martingale control variates for Monte-Carlo option pricing."""

import json as _json

from . import _core
from ._core import (
    ConfigError,
    DomainError,
    Error,
    IoError,
    NumericError,
    margrabe_delta,
    margrabe_price,
    preset_names,
    simulate,
    stopping_criterion,
    variance_chi2_ci,
    version,
)

__version__ = version()


def _text(config):
    return config if isinstance(config, str) else _json.dumps(config)


def preset(name):
    """Preset experiment as a dict."""
    return _json.loads(_core.preset_json(name))


def canonical_config(config):
    return _json.loads(_core.canonical_config(_text(config)))


def config_hash(config):
    return _core.config_hash(_text(config))


def train(config, output=None):
    """Runs training; returns the parsed train_summary.json."""
    path = _core.train(_text(config), output)
    with open(path) as f:
        return _json.load(f)


def evaluate(config, output=None, model=None, exact_margrabe=False, lam=None):
    """Variance-reduction report as a dict."""
    return _json.loads(_core.evaluate(_text(config), output, model, exact_margrabe, lam))


__all__ = [
    "ConfigError", "DomainError", "Error", "IoError", "NumericError",
    "canonical_config", "config_hash", "evaluate", "margrabe_delta", "margrabe_price",
    "preset", "preset_names", "simulate", "stopping_criterion", "train", "variance_chi2_ci",
]
