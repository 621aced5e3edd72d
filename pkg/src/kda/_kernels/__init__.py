"""Kernel dispatch: numba-compiled by default, pure numpy as fallback.

Set ``KDA_NUMBA=0`` (or ``false``/``no``/``off``) before import to force the
pure-numpy path; the same fallback engages automatically when numba is not
importable. ``benchmarks/kernel_bench.py`` times the two backends against
each other.
"""

import os

import numpy as np

from . import _numpy_impl as numpy_impl

EUCLIDEAN = numpy_impl.EUCLIDEAN
MANHATTAN = numpy_impl.MANHATTAN

_METRIC_CODES = {"euclidean": EUCLIDEAN, "manhattan": MANHATTAN}


def metric_code(name: str) -> int:
    try:
        return _METRIC_CODES[name]
    except KeyError:
        raise ValueError(f"unknown distance measure: {name!r}") from None


def _numba_wanted() -> bool:
    return os.environ.get("KDA_NUMBA", "1").strip().lower() not in {
        "0",
        "false",
        "no",
        "off",
    }


jit_impl = None
if _numba_wanted():
    try:
        from . import _jit_impl as jit_impl
    except ImportError:
        jit_impl = None

active = jit_impl if jit_impl is not None else numpy_impl
BACKEND = "numba" if jit_impl is not None else "numpy"

pairwise_dist = active.pairwise_dist
lloyd_run = active.lloyd_run
dbscan_labels = active.dbscan_labels
lof_from_dmat = active.lof_from_dmat
average_link = active.average_link


def as_matrix(X) -> np.ndarray:
    """Coerce input to the C-contiguous float64 layout the kernels expect."""
    return np.ascontiguousarray(X, dtype=np.float64)
