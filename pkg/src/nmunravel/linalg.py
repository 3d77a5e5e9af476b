"""Dense complex linear algebra on small state vectors and operators.

States are 1-d ``complex128`` arrays of length ``D`` and operators are
``(D, D)`` arrays. Nothing here normalizes a state implicitly: the linear
unravelings let the norm drift and every estimator relies on that.

Two-level conventions: index 0 is the ground state, index 1 the excited
state, so ``SIGMA_MINUS = |0><1|`` and ``SIGMA_Z = diag(-1, +1)``.
"""

import numpy as np

from .errors import ConfigurationError, DegenerateStateError, SingularOperatorError

IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[-1, 0], [0, 1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T.copy()
EXCITED = SIGMA_PLUS @ SIGMA_MINUS

NAMED_OPERATORS = {
    "sigma_x": SIGMA_X,
    "sigma_y": SIGMA_Y,
    "sigma_z": SIGMA_Z,
    "excited": EXCITED,
}

NAMED_STATES = {
    "ground": np.array([1, 0], dtype=complex),
    "excited": np.array([0, 1], dtype=complex),
    "plus": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "minus": np.array([1, -1], dtype=complex) / np.sqrt(2),
}

SINGULAR_TOL = 1e-14


def as_state(psi):
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.shape[0] < 2:
        raise ConfigurationError(f"state must be a vector of length >= 2, got shape {psi.shape}")
    if not np.all(np.isfinite(psi)):
        raise ConfigurationError("state has non-finite entries")
    return psi


def as_operator(op, dim=None):
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ConfigurationError(f"operator must be square, got shape {op.shape}")
    if dim is not None and op.shape[0] != dim:
        raise ConfigurationError(f"operator dimension {op.shape[0]} does not match state dimension {dim}")
    return op


def _check_pair(psi, op):
    psi = np.asarray(psi, dtype=complex)
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape != (psi.shape[-1], psi.shape[-1]):
        raise ConfigurationError(
            f"dimension mismatch: state {psi.shape} vs operator {op.shape}"
        )
    return psi, op


def expectation(psi, op):
    """Unnormalized quadratic form ``<psi|op|psi>``."""
    psi, op = _check_pair(psi, op)
    return complex(np.vdot(psi, op @ psi))


def normalized_expectation(psi, op):
    psi, op = _check_pair(psi, op)
    norm2 = float(np.vdot(psi, psi).real)
    if not norm2 > 0.0:
        raise DegenerateStateError("state has zero norm")
    return complex(np.vdot(psi, op @ psi)) / norm2


def determinant(op):
    # LAPACK getrf: LU with partial pivoting.
    return complex(np.linalg.det(as_operator(op)))


def inverse(op):
    op = as_operator(op)
    if abs(determinant(op)) <= SINGULAR_TOL:
        raise SingularOperatorError("operator is numerically singular")
    return np.linalg.inv(op)


def spectral_radius(op):
    return float(np.max(np.abs(np.linalg.eigvals(as_operator(op)))))


def operator_norm(op):
    return float(np.linalg.norm(as_operator(op), 2))


def projector(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def commutator(a, b):
    return a @ b - b @ a


def anticommutator(a, b):
    return a @ b + b @ a
