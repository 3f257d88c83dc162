"""Python bindings for the fracldp C++ core."""

import json as _json

from ._core import (
    BlowUpError,
    ConfigError,
    DomainError,
    Error,
    GridSpec,
    Model,
    ShapeError,
    action,
    bump,
    frac_laplacian,
    gagliardo_seminorm,
    minimize_rate,
    simulate,
    solve_skeleton,
    spectral_seminorm,
    version,
)
from ._core import parse_config as _parse_config
from ._core import run as _run


def _text(config):
    return config if isinstance(config, str) else _json.dumps(config)


def parse_config(config):
    """Canonical config (dict) with defaults filled in. Accepts a dict or JSON text."""
    return _json.loads(_parse_config(_text(config)))


def run(config):
    """Run one experiment; returns {"exit_code", "message", "files"}."""
    return _run(_text(config))


__version__ = version()
