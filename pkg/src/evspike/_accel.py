"""Numba acceleration toggle for the hot numeric kernels.

Kernels are written once as plain numpy functions and jit-compiled at import
time. Setting the environment variable ``EVSPIKE_NO_NUMBA=1`` (before import)
selects the pure-numpy path instead; the same happens automatically when
numba is not installed. Jitted kernels keep their original Python function
reachable as ``<kernel>.py_func``, which is what ``benchmarks/bench_kernels.py``
uses to time both paths against each other.
"""

import os

_TRUTHY = {"1", "true", "yes", "on"}


def numba_disabled_by_env():
    return os.environ.get("EVSPIKE_NO_NUMBA", "").strip().lower() in _TRUTHY


if numba_disabled_by_env():
    _njit = None
else:
    try:
        from numba import njit as _njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _njit = None

NUMBA_ENABLED = _njit is not None


def maybe_jit(fn):
    """Compile ``fn`` with numba unless the pure-numpy path is selected."""
    if _njit is None:
        return fn
    return _njit(cache=True)(fn)
