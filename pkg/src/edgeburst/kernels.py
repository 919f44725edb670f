"""Hot integration kernels.

The classical RK4 stepper below dominates the runtime of every decay-profile
and trajectory computation, so it is compiled with numba when available.
Set ``EDGEBURST_DISABLE_NUMBA=1`` to force the pure-numpy fallback (the two
paths produce bit-identical results; see benchmarks/bench_evolve.py).
"""

import os

import numpy as np


def _flag_disabled() -> bool:
    return os.environ.get("EDGEBURST_DISABLE_NUMBA", "").strip().lower() in (
        "1", "true", "yes", "on")


def _rk4_chunk_impl(a, psi, dt, states):
    """Advance dpsi/dt = a @ psi by states.shape[0] RK4 steps of size dt,
    recording the state after every step.  Returns the final state."""
    n = states.shape[0]
    for i in range(n):
        k1 = np.dot(a, psi)
        k2 = np.dot(a, psi + (0.5 * dt) * k1)
        k3 = np.dot(a, psi + (0.5 * dt) * k2)
        k4 = np.dot(a, psi + dt * k3)
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states[i] = psi
    return psi


rk4_chunk_numpy = _rk4_chunk_impl
rk4_chunk_numba = None

NUMBA_ENABLED = False
if not _flag_disabled():
    try:
        from numba import njit
    except ImportError:
        pass
    else:
        rk4_chunk_numba = njit(cache=True)(_rk4_chunk_impl)
        NUMBA_ENABLED = True

rk4_chunk = rk4_chunk_numba if NUMBA_ENABLED else rk4_chunk_numpy


def rk4_step(a, psi, dt):
    """Single RK4 step (used for the final partial step of a trajectory)."""
    k1 = a @ psi
    k2 = a @ (psi + (0.5 * dt) * k1)
    k3 = a @ (psi + (0.5 * dt) * k2)
    k4 = a @ (psi + dt * k3)
    return psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
