"""Backend selection for the integration kernels.

The environment variable ``DDEBOUND_BACKEND`` picks the implementation:

* ``auto`` (default): numba when importable, plain numpy otherwise,
* ``numba``: require the jitted kernels, fail loudly if numba is missing,
* ``numpy``: force the pure-python/numpy fallback.

Both variants come from the same source in :mod:`ddebound._kernels`; the
only difference is whether ``numba.njit`` wraps the functions.  Call
:func:`kernels` with an explicit name to compare them side by side (see
``benchmarks/bench_solver.py``).
"""

from __future__ import annotations

import os
from types import SimpleNamespace

from . import _kernels

_VALID = ("auto", "numba", "numpy")
_cache: dict[str, SimpleNamespace] = {}


def _plain(func):
    return func


def backend_name(requested: str | None = None) -> str:
    """Resolve the backend that :func:`kernels` would use."""
    name = requested or os.environ.get("DDEBOUND_BACKEND", "auto")
    if name not in _VALID:
        raise ValueError(f"DDEBOUND_BACKEND must be one of {_VALID}, got {name!r}")
    if name == "auto":
        try:
            import numba  # noqa: F401
        except ImportError:
            return "numpy"
        return "numba"
    return name


def kernels(requested: str | None = None) -> SimpleNamespace:
    """Return the kernel namespace for the resolved backend, building and
    caching it on first use."""
    name = backend_name(requested)
    if name not in _cache:
        if name == "numba":
            from numba import njit

            jit = njit(cache=False, fastmath=False)
        else:
            jit = _plain
        ns = _kernels.make_kernels(jit)
        ns.name = name
        _cache[name] = ns
    return _cache[name]
