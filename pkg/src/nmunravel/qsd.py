"""Linear non-Markovian quantum state diffusion under the ``f(t,s) L`` closure.

    d psi/dt = (-i H_S + conj(z_t) L - F(t) L^dag L) psi

driven by a complex Ornstein-Uhlenbeck process with
``E[z_t conj(z_s)] = alpha(t - s)`` and ``E[z_t z_s] = 0``. The noise is
smooth, so each trajectory is an ordinary ODE solved by RK4.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, TrajectoryOverflowError
from .kernels import qsd_step

OVERFLOW_NORM = 1e12


@dataclass(frozen=True)
class NoisePath:
    grid: np.ndarray
    values: np.ndarray  # conj(z_t) on the grid


def ou_coefficients(spec, dt):
    """Decay factor and innovation variance of the exact one-step recursion."""
    decay = np.exp(-(spec.Gamma + 1j * spec.omega_c) * dt)
    var = spec.alpha0 * (1.0 - np.exp(-2.0 * spec.Gamma * dt))
    return decay, var


def ou_update(z, decay, var, normals, scale=1.0):
    """``z' = decay z + xi`` with ``E|xi|^2 = var``; ``normals`` has two columns."""
    xi = np.sqrt(var / 2.0) * (normals[..., 0] + 1j * normals[..., 1])
    return decay * z + scale * xi


def ou_initial(spec, normals, scale=1.0):
    """Stationary draw with ``E|z|^2 = g Gamma / 2``."""
    return scale * np.sqrt(spec.alpha0 / 2.0) * (normals[..., 0] + 1j * normals[..., 1])


def sample_ou_path(spec, grid, rng_stream, scale=1.0):
    """Exact OU path on a uniform grid; returns ``conj(z)`` values.

    Position ``j`` of ``rng_stream`` feeds the value at ``t_j``.
    """
    grid = np.asarray(grid, dtype=float)
    dt = grid[1] - grid[0]
    if np.max(np.abs(np.diff(grid) - dt)) > 1e-9 * dt:
        raise ConfigurationError("OU sampling needs a uniform grid")
    decay, var = ou_coefficients(spec, dt)
    z = np.empty(grid.size, dtype=complex)
    z[0] = ou_initial(spec, rng_stream.normals(2), scale)
    for j in range(1, grid.size):
        z[j] = ou_update(z[j - 1], decay, var, rng_stream.normals(2), scale)
    return NoisePath(grid=grid, values=z.conj())


def qsd_rhs(psi, t, z_star, system, rates):
    """``(-i H_S(t) + z* L - F(t) L^dag L) psi``."""
    psi = np.asarray(psi, dtype=complex)
    A = -1j * system.H(t) + z_star * system.coupling - rates.F_at(t) * system.LdL
    return A @ psi


def base_matrices(system, rates, t, dt):
    """Noise-free generator at ``t``, ``t + dt/2`` and ``t + dt``."""
    return np.stack([
        -1j * system.H(s) - rates.F_at(s) * system.LdL for s in (t, t + 0.5 * dt, t + dt)
    ])


def advance_qsd(psi, B, L, z_now, z_next, dt, workers_map=None):
    """RK4 step of a batch with the noise linear in time over the step."""
    psi = np.ascontiguousarray(psi, dtype=complex)
    zs = np.ascontiguousarray(np.stack([z_now, 0.5 * (z_now + z_next), z_next], axis=1))
    out = np.empty_like(psi)
    L = np.ascontiguousarray(L, dtype=complex)

    def work(lo, hi):
        qsd_step(psi[lo:hi], B, L, zs[lo:hi], dt, out[lo:hi])

    if workers_map is None:
        work(0, psi.shape[0])
    else:
        workers_map(work, psi.shape[0])
    return out


def integrate_qsd_trajectory(psi0, noise, system, rates, grid):
    """RK4 along ``grid``; returns the state at every grid point, ``(n, D)``."""
    grid = np.asarray(grid, dtype=float)
    if noise.grid.shape != grid.shape or np.max(np.abs(noise.grid - grid)) > 1e-12:
        raise ConfigurationError("noise grid must equal the integration grid")
    psi = np.asarray(psi0, dtype=complex)
    path = np.empty((grid.size, psi.size), dtype=complex)
    path[0] = psi
    L = system.coupling
    for j in range(grid.size - 1):
        dt = grid[j + 1] - grid[j]
        B = base_matrices(system, rates, grid[j], dt)
        psi = advance_qsd(psi[None, :], B, L, noise.values[j:j + 1], noise.values[j + 1:j + 2], dt)[0]
        n = np.linalg.norm(psi)
        if not n <= OVERFLOW_NORM:
            raise TrajectoryOverflowError(j + 1, 0)
        path[j + 1] = psi
    return path
