"""Density-matrix evolution and steady states for the open atom-cavity system.

Dual route to the trajectory unraveling: the same no-click generator plus
reset channels integrated as a master equation.  Row-major vectorization is
used throughout, vec(A rho B) = (A kron B^T) vec(rho).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from macrojumps.model import JumpChannel, Operator

__all__ = [
    "DegenerateSteadyStateError",
    "EvolutionError",
    "DensityResult",
    "lindblad_rhs",
    "evolve_density",
    "evolve_density_expm",
    "steady_state",
    "liouvillian_matrix",
    "reset_superoperator",
]

log = logging.getLogger(__name__)


class DegenerateSteadyStateError(RuntimeError):
    """The Liouvillian null space is not one-dimensional."""


class EvolutionError(RuntimeError):
    """The master-equation integrator failed to reach the requested time."""


def lindblad_rhs(rho: np.ndarray, h: Operator, channels: tuple[JumpChannel, ...]) -> np.ndarray:
    """d rho / dt = -i (H rho - rho H^dag) + sum_c rate_c C_c rho C_c^dag.

    H is the non-Hermitian no-click generator; its anti-Hermitian part
    already carries the loss that the reset terms refill, so the trace of
    the right-hand side vanishes identically.
    """
    hm = h.matrix
    out = -1j * (hm @ rho - rho @ hm.conj().T)
    for c in channels:
        out += c.rate * (c.op @ rho @ c.op.conj().T)
    return out


@dataclass(frozen=True, eq=False)
class DensityResult:
    times: np.ndarray
    states: np.ndarray       # (n_times, d, d), Hermitized
    hermiticity_drift: float # max asymmetry removed at output times


def evolve_density(
    rho0: np.ndarray,
    h: Operator,
    channels: tuple[JumpChannel, ...],
    times: np.ndarray,
    *,
    rtol: float = 1e-8,
    atol: float = 1e-12,
) -> DensityResult:
    """Integrate the master equation to the requested output times.

    Adaptive explicit Runge-Kutta on the vectorized density matrix; output
    states are symmetrized, with the removed asymmetry reported so drift
    stays observable.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.size == 0 or np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValueError("times must be strictly increasing and nonnegative")
    d = h.dim
    hm = h.matrix
    hdag = hm.conj().T
    ops = [(c.rate, c.op, c.op.conj().T) for c in channels]

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        rho = y.reshape(d, d)
        out = -1j * (hm @ rho - rho @ hdag)
        for rate, c, cdag in ops:
            out += rate * (c @ rho @ cdag)
        return out.reshape(-1)

    y0 = np.asarray(rho0, dtype=complex).reshape(-1)
    t_span = (0.0, float(times[-1]))
    t_eval = times if times[0] > 0 else times.copy()
    sol = solve_ivp(rhs, t_span, y0, t_eval=t_eval, method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise EvolutionError(f"master-equation integration failed: {sol.message}")
    states = sol.y.T.reshape(len(times), d, d)
    drift = float(np.max(np.abs(states - states.conj().transpose(0, 2, 1)))) / 2.0
    states = (states + states.conj().transpose(0, 2, 1)) / 2.0
    if drift > 1e-10:
        log.warning("hermiticity drift %.3e exceeds 1e-10", drift)
    return DensityResult(times=times, states=states, hermiticity_drift=drift)


def liouvillian_matrix(h: Operator, channels: tuple[JumpChannel, ...]) -> np.ndarray:
    """Generator as a d^2 x d^2 matrix acting on row-major vectorized rho."""
    d = h.dim
    eye = np.eye(d)
    hm = h.matrix
    l = -1j * (np.kron(hm, eye) - np.kron(eye, hm.conj()))
    return l + reset_superoperator(channels)


def reset_superoperator(channels: tuple[JumpChannel, ...]) -> np.ndarray:
    """sum_c rate_c (C_c kron C_c*) on row-major vectorized rho."""
    d = channels[0].op.shape[0]
    s = np.zeros((d * d, d * d), dtype=complex)
    for c in channels:
        s += c.rate * np.kron(c.op, c.op.conj())
    return s


def evolve_density_expm(
    rho0: np.ndarray,
    h: Operator,
    channels: tuple[JumpChannel, ...],
    t: float,
) -> np.ndarray:
    """Dense-exponential propagation of the vectorized generator (validation path)."""
    liou = liouvillian_matrix(h, channels)
    d = h.dim
    rho_t = (scipy.linalg.expm(liou * t) @ np.asarray(rho0, dtype=complex).reshape(-1)).reshape(d, d)
    return (rho_t + rho_t.conj().T) / 2.0


def steady_state(
    h: Operator,
    channels: tuple[JumpChannel, ...],
    *,
    null_tol: float = 1e-10,
) -> np.ndarray:
    """Unique trace-one stationary state from the Liouvillian null space.

    Raises DegenerateSteadyStateError when the null space (singular values
    below null_tol relative to the largest) is not one-dimensional.
    """
    liou = liouvillian_matrix(h, channels)
    d = h.dim
    _, svals, vh = np.linalg.svd(liou)
    cutoff = null_tol * max(svals[0], 1.0)
    null_dim = int(np.sum(svals < cutoff))
    if null_dim != 1:
        raise DegenerateSteadyStateError(
            f"degenerate steady manifold: null-space dimension {null_dim} (tol {cutoff:.2e})"
        )
    rho = vh[-1].conj().reshape(d, d)
    rho = (rho + rho.conj().T) / 2.0
    rho = rho / np.trace(rho).real
    residual = float(np.max(np.abs(liou @ rho.reshape(-1))))
    if residual > 1e-10 * max(float(svals[0]), 1.0):
        raise DegenerateSteadyStateError(f"steady-state residual {residual:.2e} too large")
    return rho
