"""Compilation shim: numba when available, plain Python otherwise.

The physics kernels are written as scalar/array functions that compile under
``numba.njit`` unchanged. Set ``PERMAFOREST_DISABLE_JIT=1`` to force the
interpreted path (slow, but useful when debugging the kernels).
"""

from __future__ import annotations

import os

if os.environ.get("PERMAFOREST_DISABLE_JIT") == "1":
    _numba = None
else:
    try:
        import numba as _numba
    except ImportError:  # pragma: no cover - numba is a hard dep in practice
        _numba = None

JIT_ENABLED = _numba is not None


def jit(func):
    if _numba is None:
        return func
    return _numba.njit(cache=True, fastmath=False)(func)
