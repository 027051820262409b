"""Exact finite-N fluctuation statistics for planar Gaussian eigenvalue
ensembles, their large-N limit laws, and Monte Carlo cross-checks.

Submodules load lazily so the command-line front end can pin thread-count
environment variables before numpy initializes its backend.
"""

import importlib

from ._version import VERSION as __version__

_SUBMODULES = ("specfun", "radial", "angular", "asymptotics", "dpp", "mc", "cli")

__all__ = list(_SUBMODULES) + ["__version__"]


def __getattr__(name: str):
    if name in _SUBMODULES:
        return importlib.import_module("." + name, __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(__all__)
