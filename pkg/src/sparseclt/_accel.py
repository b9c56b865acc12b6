"""Numba switch.

Kernels are compiled with numba unless ``SPARSECLT_DISABLE_NUMBA`` is set to a
truthy value (or numba is not importable), in which case the pure numpy/python
fallbacks in :mod:`sparseclt._kernels` are used instead.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency
    numba = None

ENV_FLAG = "SPARSECLT_DISABLE_NUMBA"

_disabled = os.environ.get(ENV_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _disabled


def njit(func):
    """Compile ``func`` in nopython mode when numba is available.

    Always compiles if numba is importable, so the benchmark can compare both
    paths even when the env flag routes production calls to the fallback.
    """
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)
