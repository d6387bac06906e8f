"""Selection between numba-compiled kernels and the pure-numpy fallback.

``NITSCHE_FEM_BACKEND`` chooses the path (``numba`` or ``numpy``); numba is
used when it imports cleanly and the variable is unset.
``NITSCHE_FEM_THREADS`` caps the numba worker count, ``0`` meaning serial.
"""

from __future__ import annotations

import logging
import os

logger = logging.getLogger(__name__)

try:
    import numba

    HAVE_NUMBA = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # the system TBB is often too old and only produces a warning
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def requested_backend() -> str:
    name = os.environ.get("NITSCHE_FEM_BACKEND", "").strip().lower()
    if name in ("", "auto"):
        return "numba" if HAVE_NUMBA else "numpy"
    if name not in ("numba", "numpy"):
        raise ValueError(f"NITSCHE_FEM_BACKEND must be 'numba' or 'numpy', got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        logger.warning("numba requested but not importable; using numpy kernels")
        return "numpy"
    return name


BACKEND = requested_backend()


def configure_threads() -> int:
    """Apply ``NITSCHE_FEM_THREADS`` to numba; returns the thread count in use."""
    if not HAVE_NUMBA:
        return 1
    raw = os.environ.get("NITSCHE_FEM_THREADS")
    if raw is None or raw.strip() == "":
        return numba.get_num_threads()
    n = int(raw)
    if n < 0:
        raise ValueError("NITSCHE_FEM_THREADS must be >= 0")
    n = max(1, min(n, numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


def njit(*args, **kwargs):
    """``numba.njit`` with caching on, or an identity decorator without numba."""
    kwargs.setdefault("cache", True)
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return numba.njit(*args, **kwargs)


prange = numba.prange if HAVE_NUMBA else range
