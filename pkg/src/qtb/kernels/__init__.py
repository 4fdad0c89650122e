"""Hot numeric kernels with a compiled and a pure-numpy implementation.

The active backend is chosen once at import time from ``QTB_NUMBA``; both
backend modules stay importable for cross-checking and benchmarking.
"""
from qtb._accel import USE_NUMBA

from . import _numpy as numpy_backend

if USE_NUMBA:
    from . import _numba as active
    numba_backend = active
else:
    active = numpy_backend
    try:
        from . import _numba as numba_backend
    except ImportError:  # pragma: no cover
        numba_backend = None

BACKEND = "numba" if USE_NUMBA else "numpy"

eigh_batch = active.eigh_batch
eigvalsh_batch = active.eigvalsh_batch
eta_batch = active.eta_batch
states_objective = active.states_objective
objective_batch = active.objective_batch
objective_grad = active.objective_grad

__all__ = [
    "BACKEND", "eigh_batch", "eigvalsh_batch", "eta_batch", "states_objective",
    "objective_batch", "objective_grad", "numpy_backend", "numba_backend",
]
