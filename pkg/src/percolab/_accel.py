"""Backend switch for the hot kernels.

Every kernel exists twice: a numba ``@njit`` loop version and a pure
numpy/scipy version. Both produce bit-identical results. The default is
numba when it imports; ``PERCOLAB_BACKEND=numpy`` (or ``NUMBA_DISABLE_JIT=1``)
selects the numpy path process-wide, and :func:`use_backend` switches it
temporarily (tests and the benchmark do this).
"""

from __future__ import annotations

import contextlib
import os

_requested = os.environ.get("PERCOLAB_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"PERCOLAB_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    if os.environ.get("NUMBA_DISABLE_JIT", "0") == "1":
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False

_backend = "numba" if (HAVE_NUMBA and _requested == "numba") else "numpy"


def njit(fn):
    # without numba the loop versions still run, just slowly
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    _backend = name


@contextlib.contextmanager
def use_backend(name: str):
    old = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(old)


def pick(numba_impl, numpy_impl):
    """Return the implementation for the active backend."""
    return numba_impl if _backend == "numba" else numpy_impl
