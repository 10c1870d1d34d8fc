"""Time-of-flight quantum state tomography: Python bindings for the C++ core."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import default_config as _default_config, resolve_config as _resolve_config, version

__version__ = version()


def default_config():
    """Built-in defaults as a dict."""
    return _json.loads(_default_config())


def resolve_config(doc):
    """Validate a config dict (unknown keys raise ConfigError) and fill in defaults."""
    return _json.loads(_resolve_config(_json.dumps(doc)))
