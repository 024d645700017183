"""Numba switch.

Hot loops in :mod:`gibbslab.kernels` are written once as plain Python/numpy
and compiled with ``numba.njit`` unless ``GIBBSLAB_DISABLE_NUMBA`` is set to a
truthy value (or numba is not importable).  The uncompiled function is always
reachable through ``.py_func`` so the two paths can be compared directly.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

ENV_FLAG = "GIBBSLAB_DISABLE_NUMBA"

JIT_OPTIONS = {
    "nogil": True,
    "cache": True,
}


def _disabled_by_env():
    return os.environ.get(ENV_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


USE_NUMBA = numba is not None and not _disabled_by_env()


def backend_name():
    return "numba" if USE_NUMBA else "numpy"


def jit(fn):
    """Compile ``fn`` with numba when enabled; keep ``fn.py_func`` either way."""
    if USE_NUMBA:
        return numba.njit(**JIT_OPTIONS)(fn)
    fn.py_func = fn
    return fn
