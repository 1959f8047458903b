"""Backend selection for the hot loops.

``NEWHOUSE_LAB_BACKEND=numpy`` (or ``NEWHOUSE_LAB_DISABLE_NUMBA=1``) forces
the pure-numpy path; otherwise numba is used when importable.
"""

import os

from . import _numpy
from .layout import SIZE

_want = os.environ.get("NEWHOUSE_LAB_BACKEND", "numba").strip().lower()
if os.environ.get("NEWHOUSE_LAB_DISABLE_NUMBA", "").strip() not in ("", "0"):
    _want = "numpy"

backend = _numpy
BACKEND = "numpy"
if _want == "numba":
    try:
        from . import _numba

        backend = _numba
        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba is optional
        pass


def get_backend(name=None):
    """Return the kernel module for ``name`` ("numba" / "numpy"), default active."""
    if name is None:
        return backend
    if name == "numpy":
        return _numpy
    if name == "numba":
        from . import _numba

        return _numba
    raise ValueError(f"unknown backend {name!r}")


bridge_blockers = backend.bridge_blockers
pliss_margins = backend.pliss_margins
strip_entry = backend.strip_entry
orbit_trace = backend.orbit_trace
iterate_batch = backend.iterate_batch
cone_batch = backend.cone_batch
range_sums = backend.range_sums

__all__ = [
    "BACKEND", "SIZE", "get_backend", "bridge_blockers", "pliss_margins",
    "strip_entry", "orbit_trace", "iterate_batch", "cone_batch", "range_sums",
]
