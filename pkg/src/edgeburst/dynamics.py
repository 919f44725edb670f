"""Direct time evolution and the site-resolved decay profile."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import EdgeBurstError, NonConvergenceError
from .lattice import LatticeParams

DEFAULT_DT = 0.002
_CHUNK = 4096


@dataclass
class Trajectory:
    """Sampled time history of a state vector.

    times   -- strictly increasing grid starting at 0
    states  -- complex array, shape (len(times), dim); states[i] = psi(times[i])
    params  -- lattice configuration the run came from, if any
    """

    times: np.ndarray
    states: np.ndarray
    params: Optional[LatticeParams] = None

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states length mismatch")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def norms_squared(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.states.conj(), self.states).real

    def site_amplitude(self, cell: int, sub: str) -> np.ndarray:
        idx = 2 * (cell - 1) + (0 if sub == "A" else 1)
        return self.states[:, idx]


@dataclass
class DecayProfile:
    """Per-cell loss probabilities and the truncation bookkeeping.

    probabilities    -- P_x for cells 1..L
    truncation_error -- surviving probability at the integration horizon
    horizon          -- time at which the evolution was stopped
    """

    probabilities: np.ndarray
    truncation_error: float
    horizon: float

    @property
    def total(self) -> float:
        return float(self.probabilities.sum())


def initial_state(params: LatticeParams) -> np.ndarray:
    """Unit amplitude on sublattice A of cell x0."""
    psi = np.zeros(params.dim, dtype=complex)
    psi[2 * (params.x0 - 1)] = 1.0
    return psi


def loss_rate(psi: np.ndarray, gamma: float) -> float:
    """Instantaneous norm loss 2*gamma*sum_x |psi_x^B|^2."""
    b = psi[1::2]
    return float(2.0 * gamma * np.vdot(b, b).real)


def evolve(m: np.ndarray, psi0: np.ndarray, tmax: float,
           dt: float = DEFAULT_DT,
           params: Optional[LatticeParams] = None) -> Trajectory:
    """Integrate dpsi/dt = -i m psi with fixed-step RK4, sampling every step.

    A final partial step covers tmax when it is not a multiple of dt.
    Raises EdgeBurstError if the state leaves the representable range
    (dt too large for the spectral radius of m).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if tmax < 0:
        raise ValueError("tmax must be >= 0")
    if not np.all(np.isfinite(m)):
        raise ValueError("operator contains non-finite entries")
    a = (-1j) * np.ascontiguousarray(m, dtype=complex)
    psi = np.ascontiguousarray(psi0, dtype=complex)

    n_full = int(np.floor(tmax / dt + 1e-12))
    remainder = tmax - n_full * dt
    if remainder < dt * 1e-9:
        remainder = 0.0

    times = np.arange(n_full + 1) * dt
    if remainder:
        times = np.append(times, tmax)
    states = np.empty((len(times), len(psi)), dtype=complex)
    states[0] = psi

    done = 0
    while done < n_full:
        block = min(_CHUNK, n_full - done)
        psi = kernels.rk4_chunk(a, psi, dt, states[done + 1:done + 1 + block])
        done += block
        if not np.all(np.isfinite(psi)):
            raise EdgeBurstError(
                f"evolution became non-finite near t={done * dt:g}; "
                "reduce dt")
    if remainder:
        psi = kernels.rk4_step(a, psi, remainder)
        if not np.all(np.isfinite(psi)):
            raise EdgeBurstError("evolution became non-finite on final step")
        states[-1] = psi
    return Trajectory(times=times, states=states, params=params)


def evolve_spectral(modes, psi0: np.ndarray, times: np.ndarray,
                    params: Optional[LatticeParams] = None,
                    resid_tol: float = 1e-8) -> Trajectory:
    """Propagate through the eigenbasis: psi(t) = sum_n a_n e^{-i E_n t} |n_R>.

    Exact in time; serves as the cross-check oracle for :func:`evolve`.
    Raises EdgeBurstError when psi0 is not representable in the mode basis
    to within ``resid_tol``.
    """
    from .spectral import expand  # local import to avoid a cycle

    times = np.asarray(times, dtype=float)
    expansion = expand(modes, psi0)
    if expansion.residual > resid_tol:
        raise EdgeBurstError(
            f"mode expansion residual {expansion.residual:.3e} exceeds "
            f"{resid_tol:.1e}: basis too ill-conditioned for propagation")
    phases = np.exp(-1j * np.outer(times, modes.values))
    states = (phases * expansion.coefficients[None, :]) @ modes.right.T
    return Trajectory(times=times, states=states, params=params)


def _simpson_columns(values: np.ndarray, dt: float) -> np.ndarray:
    """Composite Simpson over axis 0 on a uniform grid; falls back to a
    trapezoid for the last interval when the interval count is odd."""
    n = values.shape[0] - 1
    if n < 1:
        return np.zeros(values.shape[1])
    m = n if n % 2 == 0 else n - 1
    out = np.zeros(values.shape[1])
    if m >= 2:
        w = np.ones(m + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        out += (dt / 3.0) * (w[:, None] * values[:m + 1]).sum(axis=0)
    if m != n:
        out += 0.5 * dt * (values[n - 1] + values[n])
    return out


def decay_profile(m: np.ndarray, params: LatticeParams,
                  psi0: Optional[np.ndarray] = None,
                  eps_norm: float = 1e-8, dt: float = DEFAULT_DT,
                  max_time: float = 1000.0) -> DecayProfile:
    """Integrate P_x = int 2*gamma*|psi_x^B(t)|^2 dt per cell.

    The evolution runs until the survival probability <psi|psi> drops to
    ``eps_norm``; the quadrature is composite Simpson on the step grid.  The
    surviving probability at the horizon is reported as truncation_error.
    """
    if params.gamma <= 0:
        raise EdgeBurstError(
            "decay profile undefined for gamma = 0 (nothing decays)")
    if not 0.0 < eps_norm < 1.0:
        raise ValueError("eps_norm must lie in (0, 1)")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if psi0 is None:
        psi0 = initial_state(params)
    a = (-1j) * np.ascontiguousarray(m, dtype=complex)
    psi = np.ascontiguousarray(psi0, dtype=complex)

    max_steps = int(np.ceil(max_time / dt))
    chunk_states = np.empty((_CHUNK, len(psi)), dtype=complex)
    b2_parts = [np.abs(psi[1::2])[None, :] ** 2]
    steps = 0
    survival = float(np.vdot(psi, psi).real)
    while True:
        block = min(_CHUNK, max_steps - steps)
        if block <= 0:
            raise NonConvergenceError(
                f"survival still {survival:.3e} > eps_norm={eps_norm:.1e} "
                f"at t={steps * dt:g}; dark or gamma-starved dynamics",
                horizon=steps * dt, survival=survival)
        psi = kernels.rk4_chunk(a, psi, dt, chunk_states[:block])
        if not np.all(np.isfinite(psi)):
            raise EdgeBurstError("evolution became non-finite; reduce dt")
        norms = np.einsum("ij,ij->i", chunk_states[:block].conj(),
                          chunk_states[:block]).real
        hit = np.nonzero(norms <= eps_norm)[0]
        keep = (hit[0] + 1) if len(hit) else block
        b2_parts.append(np.abs(chunk_states[:keep, 1::2]) ** 2)
        steps += keep
        survival = float(norms[keep - 1])
        if len(hit):
            break

    b2 = np.concatenate(b2_parts, axis=0)
    probs = 2.0 * params.gamma * _simpson_columns(b2, dt)
    return DecayProfile(probabilities=probs, truncation_error=survival,
                        horizon=steps * dt)
