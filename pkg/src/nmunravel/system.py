"""Open-system description shared by the master equation and the unravelings."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .linalg import SIGMA_MINUS, SIGMA_X, SIGMA_Z, as_operator

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class SystemSpec:
    """System Hamiltonian (constant matrix or callable of ``t``) and coupling ``L``.

    ``omega`` and ``Omega`` are kept for the driven two-level atom so the bath
    solver knows the level splitting; they are informational otherwise.
    """

    hamiltonian: object
    coupling: np.ndarray
    omega: float = 0.0
    Omega: float = 0.0

    def __post_init__(self):
        L = as_operator(self.coupling)
        object.__setattr__(self, "coupling", L)
        if abs(np.trace(L)) > HERMITIAN_TOL:
            raise ConfigurationError("coupling operator must be traceless")
        if not callable(self.hamiltonian):
            object.__setattr__(self, "hamiltonian", as_operator(self.hamiltonian, L.shape[0]))
        H0 = self.H(0.0)
        if np.max(np.abs(H0 - H0.conj().T)) > HERMITIAN_TOL:
            raise ConfigurationError("Hamiltonian must be Hermitian")

    @property
    def dim(self):
        return self.coupling.shape[0]

    @property
    def LdL(self):
        L = self.coupling
        return L.conj().T @ L

    def H(self, t):
        if callable(self.hamiltonian):
            return as_operator(self.hamiltonian(t), self.dim)
        return self.hamiltonian


def two_level_atom(omega, Omega):
    """``H = omega/2 sigma_z + Omega/2 sigma_x`` with ``L = sigma_-``."""
    H = 0.5 * omega * SIGMA_Z + 0.5 * Omega * SIGMA_X
    return SystemSpec(hamiltonian=H, coupling=SIGMA_MINUS.copy(), omega=float(omega), Omega=float(Omega))


def drift_matrix(system, rates, t):
    """``-i G'(t) = -i H_S(t) - F(t) L^dag L``; the global phase term is dropped."""
    return -1j * system.H(t) - rates.F_at(t) * system.LdL


def rk4_propagator(system, rates, t, dt):
    """One classical RK4 step of ``dX/dt = -i G'(t) X`` from ``X = 1``.

    Applying the returned matrix to a state is exactly one RK4 step of the
    linear flow, so the same step can be shared by a whole ensemble.
    """
    return rk4_step_matrix(lambda s: drift_matrix(system, rates, s), t, dt)


def rk4_step_matrix(A, t, dt):
    """RK4 step matrix of ``dX/dt = A(t) X`` for a callable ``A``."""
    A1 = A(t)
    A2 = A(t + 0.5 * dt)
    A3 = A(t + dt)
    eye = np.eye(A1.shape[0], dtype=complex)
    k1 = A1
    k2 = A2 @ (eye + 0.5 * dt * k1)
    k3 = A2 @ (eye + 0.5 * dt * k2)
    k4 = A3 @ (eye + dt * k3)
    return eye + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
