"""Linear non-Markovian quantum jumps with inverse-operator reverse jumps.

The single channel ``L`` is split into ``2m`` channels ``L_k = 1 + eps xi_k L``
with ``xi_k = exp(i pi (k-1)/m)``. Forward jumps apply ``L_k`` at rate
``gamma_+ / (m eps^2 |xi_k|^2)``; when the decay rate is negative, reverse
jumps apply ``L_k^{-1}`` at rate ``gamma_- / (m eps^2 |xi_k|^2)`` times the
ensemble density ratio ``P[L_k^{-1} psi] / P[psi]`` over the Jacobian
``|det L_k|^2``.
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (ConfigurationError, InvertibilityError, SingularOperatorError,
                     UnsupportedConfigurationError)
from .linalg import as_operator, determinant, spectral_radius
from .system import rk4_step_matrix

log = logging.getLogger(__name__)

PROBABILITY_WARN = 0.1


@dataclass(frozen=True)
class JumpFamily:
    epsilon: float
    m: int
    xi: np.ndarray
    forward_ops: np.ndarray
    inverse_ops: np.ndarray
    det_factor: np.ndarray

    @property
    def K(self):
        return 2 * self.m

    def channel_scale(self):
        """``1/(m eps^2 |xi_k|^2)`` per channel."""
        return 1.0 / (self.m * self.epsilon ** 2 * np.abs(self.xi) ** 2)


def build_jump_family(L, epsilon, m):
    """Construct the ``2m`` jump operators, their inverses and Jacobian factors.

    Invertibility is guaranteed when the Neumann series of ``(1 + eps xi L)^-1``
    converges, i.e. when the spectral radius of ``eps L`` is below one; for a
    contraction ``||eps L|| < 1`` this always holds, and for nilpotent ``L``
    (``sigma_-``) it holds for every ``eps``.
    """
    L = as_operator(L)
    if int(m) != m or m < 2:
        raise ConfigurationError(f"m must be an integer >= 2, got {m}")
    if not epsilon > 0:
        raise ConfigurationError(f"epsilon must be positive, got {epsilon}")
    m = int(m)
    if spectral_radius(epsilon * L) >= 1.0 - 1e-12:
        raise InvertibilityError(f"epsilon*L has spectral radius >= 1 for epsilon={epsilon}")
    xi = np.exp(1j * np.pi * np.arange(2 * m) / m)
    eye = np.eye(L.shape[0], dtype=complex)
    fwd = np.stack([eye + epsilon * x * L for x in xi])
    inv = np.empty_like(fwd)
    det = np.empty(2 * m)
    for k in range(2 * m):
        d = determinant(fwd[k])
        if abs(d) <= 1e-14:
            raise SingularOperatorError(f"jump operator {k} is singular")
        inv[k] = np.linalg.inv(fwd[k])
        det[k] = abs(d) ** 2
    for a in (xi, fwd, inv, det):
        a.setflags(write=False)
    return JumpFamily(float(epsilon), m, xi, fwd, inv, det)


def drift_generator(system, rates):
    """Callable ``t -> G'(t) = H_S(t) - i F(t) L^dag L``."""
    def G(t):
        return system.H(t) - 1j * rates.F_at(t) * system.LdL
    return G


def channel_rates(family, rates, t, dt):
    """Forward probabilities and ratio-free reverse bases for one step."""
    gp, gm = rates.rates_at(t)
    scale = family.channel_scale() * dt
    return gp * scale, gm * scale / family.det_factor


def jump_probabilities(psi, t, dt, family, rates, kde_ctx):
    """Per-channel ``(p_plus, p_minus)`` for the step ``[t, t + dt)``."""
    psi = np.asarray(psi, dtype=complex)
    p_plus, base = channel_rates(family, rates, t, dt)
    p_minus = np.zeros(family.K)
    if np.any(base > 0):
        targets = np.einsum("kab,b->ka", family.inverse_ops, psi)
        ls = kde_ctx.log_sums(np.vstack([psi[None, :], targets]))
        if ls[0] >= kernels.LOG_TINY:
            with np.errstate(over="ignore"):
                p_minus = base * np.exp(ls[1:] - ls[0])
    total = p_plus.sum() + p_minus.sum()
    if total > PROBABILITY_WARN:
        log.warning("jump probability per step %.3g exceeds %.2g; reduce dt", total, PROBABILITY_WARN)
    return p_plus, p_minus


def advance_jump(psi, prop, p_plus, base, family, kde_ctx, u, workers_map=None, anchors=None):
    """Advance a batch ``(N, D)`` of states one step given uniforms ``u``.

    ``prop`` is the RK4 step matrix of the drift, ``p_plus`` and ``base`` come
    from :func:`channel_rates`. ``anchors`` optionally gives, per row, the
    index of a snapshot entry close to that row (its own entry when the
    snapshot is the batch itself); it only tightens the bound used to skip
    density evaluations and never changes the outcome. Returns ``(new_psi, events, flags)``; ``events``
    holds ``-1`` for no jump, ``k`` for forward channel ``k`` and ``K + k`` for
    reverse channel ``k``.
    """
    psi = np.ascontiguousarray(psi, dtype=complex)
    N = psi.shape[0]
    out = np.empty_like(psi)
    events = np.empty(N, dtype=np.int64)
    flags = np.empty(N, dtype=np.bool_)
    u = np.ascontiguousarray(u, dtype=float)
    if kde_ctx.projective:
        raise UnsupportedConfigurationError("jump kernels compare raw states; use a non-projective KDE")
    samples = kde_ctx.samples
    radius = float(np.max(np.linalg.norm(samples, axis=1)))
    if anchors is None:
        anchors = np.full(N, -1, dtype=np.int64)
    anchors = np.ascontiguousarray(anchors, dtype=np.int64)

    def work(lo, hi):
        kernels.jump_step(psi[lo:hi], samples, radius, anchors[lo:hi], prop, family.forward_ops,
                          family.inverse_ops, p_plus, base, kde_ctx.inv_s2, u[lo:hi],
                          out[lo:hi], events[lo:hi], flags[lo:hi])

    if workers_map is None:
        work(0, N)
    else:
        workers_map(work, N)
    return out, events, flags


def step_trajectory_jump(psi, t, dt, family, drift, rates, kde_ctx, rng_stream):
    """One step of a single trajectory.

    ``drift`` is the callable ``t -> G'(t)`` from :func:`drift_generator`;
    between jumps the state takes one RK4 step of ``-i G'``. ``rng_stream``
    supplies one uniform per step.
    """
    psi = np.asarray(psi, dtype=complex)
    prop = rk4_step_matrix(lambda s: -1j * drift(s), t, dt)
    p_plus, base = channel_rates(family, rates, t, dt)
    out, _, _ = advance_jump(psi[None, :], prop, p_plus, base, family, kde_ctx, rng_stream.uniforms(1))
    return out[0]
