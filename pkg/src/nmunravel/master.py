"""Deterministic reference: the time-local master equation and its RK4 solution."""

import numpy as np

from .errors import ConfigurationError, IntegratorToleranceError, UnsupportedConfigurationError
from .linalg import SIGMA_MINUS

TRACE_DRIFT_TOL = 1e-6


def master_rhs(rho, t, system, rates):
    """``-i[H + S L^dag L, rho] + 2 gamma L rho L^dag - gamma {L^dag L, rho}``."""
    F = rates.F_at(t)
    gamma, S = F.real, F.imag
    L = system.coupling
    LdL = system.LdL
    K = system.H(t) + S * LdL
    out = -1j * (K @ rho - rho @ K)
    out += 2.0 * gamma * (L @ rho @ L.conj().T)
    out -= gamma * (LdL @ rho + rho @ LdL)
    return out


def _check_rho(rho0, dim):
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (dim, dim):
        raise ConfigurationError(f"initial density matrix must be {dim}x{dim}")
    if np.max(np.abs(rho0 - rho0.conj().T)) > 1e-12:
        raise ConfigurationError("initial density matrix is not Hermitian")
    if abs(np.trace(rho0) - 1.0) > 1e-10:
        raise ConfigurationError("initial density matrix must have unit trace")
    return rho0


def liouvillian_parts(system):
    """Row-major superoperators ``(hamiltonian(t), dissipator, lamb_shift)``.

    ``master_rhs`` equals ``(hamiltonian(t) + gamma * dissipator + S * lamb_shift) @ rho.ravel()``.
    """
    D = system.dim
    eye = np.eye(D)
    L = system.coupling
    LdL = system.LdL

    def comm(K):
        return -1j * (np.kron(K, eye) - np.kron(eye, K.T))

    dissipator = 2.0 * np.kron(L, L.conj()) - np.kron(LdL, eye) - np.kron(eye, LdL.T)
    if callable(system.hamiltonian):
        def hamiltonian(t):
            return comm(system.H(t))
    else:
        fixed = comm(system.H(0.0))

        def hamiltonian(t):
            return fixed
    return hamiltonian, dissipator, comm(LdL)


def integrate_master(rho0, system, rates, grid):
    """Classical RK4 over ``grid``; returns ``rho(t_j)`` stacked as ``(n, D, D)``."""
    rho = _check_rho(rho0, system.dim)
    grid = np.asarray(grid, dtype=float)
    D = system.dim
    hamiltonian, dissipator, shift = liouvillian_parts(system)

    def generator(t):
        F = rates.F_at(t)
        return hamiltonian(t) + F.real * dissipator + F.imag * shift

    diag = np.arange(D) * (D + 1)
    out = np.empty((grid.size, D, D), dtype=complex)
    out[0] = rho
    v = rho.ravel().copy()
    A_next = generator(grid[0])
    for j in range(grid.size - 1):
        t, h = grid[j], grid[j + 1] - grid[j]
        A1, A2, A_next = A_next, generator(t + 0.5 * h), generator(t + h)
        k1 = A1 @ v
        k2 = A2 @ (v + 0.5 * h * k1)
        k3 = A2 @ (v + 0.5 * h * k2)
        k4 = A_next @ (v + h * k3)
        v = v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        tr = v[diag].sum()
        if abs(tr - 1.0) > TRACE_DRIFT_TOL:
            raise IntegratorToleranceError(f"trace drifted to {tr} at t={grid[j + 1]:g}")
        out[j + 1] = v.reshape(D, D)
    return out


def closed_form_undriven(rho0, system, rates, t):
    """Analytic solution for the undriven two-level atom with ``L = sigma_-``.

    Populations decay as ``exp(-2 int gamma)``; the ground-excited coherence
    picks up ``exp(int (-gamma + i(omega + S)))``. Integrals of the rate use
    the trapezoid rule on the schedule grid. ``t`` may be a scalar or an array.
    """
    rho0 = _check_rho(rho0, system.dim)
    H = system.H(0.0)
    if (system.dim != 2 or not np.allclose(system.coupling, SIGMA_MINUS)
            or abs(H[0, 1]) > 0 or abs(H[1, 0]) > 0 or callable(system.hamiltonian)):
        raise UnsupportedConfigurationError("closed form needs an undriven two-level atom with L = sigma_-")
    omega = float((H[1, 1] - H[0, 0]).real)

    F = rates.F_values
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (F[1:] + F[:-1]) * np.diff(rates.grid))))
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(times < -1e-12) or np.any(times > rates.t_end + 1e-9):
        raise ConfigurationError("requested times fall outside the rate schedule")
    int_F = np.interp(times, rates.grid, cum.real) + 1j * np.interp(times, rates.grid, cum.imag)

    out = np.empty((times.size, 2, 2), dtype=complex)
    pop = np.exp(-2.0 * int_F.real)
    ee = rho0[1, 1].real * pop
    out[:, 1, 1] = ee
    out[:, 0, 0] = 1.0 - ee
    coh = rho0[0, 1] * np.exp(-int_F.real + 1j * (omega * times + int_F.imag))
    out[:, 0, 1] = coh
    out[:, 1, 0] = coh.conj()
    return out[0] if np.ndim(t) == 0 else out


def expectation_series(rhos, op):
    """``Re tr(op rho)/tr(rho)`` for a stack of density matrices."""
    num = np.einsum("ij,nji->n", op, rhos)
    tr = np.einsum("nii->n", rhos)
    return (num / tr).real
