"""Dispatch to the numba or numpy propagation kernels.

Both backends expose the same five functions; see ``_backend`` for the
selection rule.
"""

from ._backend import BACKEND, HAS_NUMBA

if BACKEND == "numba":
    from ._kernels_numba import (  # noqa: F401
        batch_final,
        batch_perturbative,
        perturbative,
        propagate_final,
        propagate_record,
    )
else:
    from ._kernels_numpy import (  # noqa: F401
        batch_final,
        batch_perturbative,
        perturbative,
        propagate_final,
        propagate_record,
    )

from . import _kernels_numpy as numpy_impl  # noqa: E402,F401

if HAS_NUMBA:
    from . import _kernels_numba as numba_impl  # noqa: F401
else:  # pragma: no cover
    numba_impl = None

N_PARAMS = 8
OMEGA0, TAU, ALPHA, DELTA, PHI, SCALE, T0, DT = range(N_PARAMS)
