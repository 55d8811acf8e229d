"""EVSI under imperfect implementation, nested Monte Carlo and Moment Matching.

Configs are plain dicts with the same layout as the JSON config files.
"""

import json as _json

from . import _voi
from ._voi import ConfigError, DomainError, FitError, SamplerError, VoiError

__all__ = [
    "ConfigError", "DomainError", "FitError", "SamplerError", "VoiError",
    "default_config", "load_config", "normalize_config", "config_hash",
    "psa", "nmc", "mm", "run", "market_share",
]


def _dump(config):
    return _json.dumps(config if config is not None else {})


def default_config():
    return _json.loads(_voi.default_config())


def load_config(path):
    with open(path) as f:
        return normalize_config(_json.load(f))


def normalize_config(config):
    return _json.loads(_voi.normalize_config(_dump(config)))


def config_hash(config=None):
    return _voi.config_hash(_dump(config))


def psa(config=None):
    return _voi.psa(_dump(config))


def nmc(config=None, study=1):
    return _voi.nmc(_dump(config), study)


def mm(config=None, study=1):
    return _voi.mm(_dump(config), study)


def run(config=None):
    return _voi.run(_dump(config))


def market_share(p, config=None):
    return _voi.market_share(_dump(config), p)
