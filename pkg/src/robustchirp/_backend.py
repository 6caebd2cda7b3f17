"""Kernel backend selection.

The propagation kernels exist twice: loop-based versions compiled with
numba, and vectorized pure-numpy versions.  ``ROBUSTCHIRP_BACKEND``
(``numba`` or ``numpy``) picks one at import time; numba is the default
when it imports cleanly.
"""

from __future__ import annotations

import os

ENV_VAR = "ROBUSTCHIRP_BACKEND"

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False


def requested_backend() -> str:
    name = os.environ.get(ENV_VAR, "numba").strip().lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"{ENV_VAR} must be 'numba' or 'numpy', got {name!r}")
    if name == "numba" and not HAS_NUMBA:
        return "numpy"
    return name


BACKEND = requested_backend()
