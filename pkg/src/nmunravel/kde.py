"""Gaussian kernel density estimates over an ensemble of state vectors.

Densities live on the raw complex coordinates ``psi_n`` (real dimension
``2D``). The dynamics only consume ratios and log-gradients, both of which
are computed in log space so that distant queries never divide ``0/0``.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError


def bandwidth(M, D):
    """Rule-of-thumb bandwidth ``M**(-1/(d+5))`` with ``d = 2D`` real dimensions."""
    if M < 2:
        raise ConfigurationError("bandwidth needs an ensemble of at least two states")
    return float(M) ** (-1.0 / (2 * D + 5))


def projective_representative(states):
    """Normalize each row and rotate its phase so the largest component is real positive."""
    states = np.atleast_2d(np.asarray(states, dtype=complex))
    norms = np.linalg.norm(states, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    out = states / norms
    lead = out[np.arange(out.shape[0]), np.argmax(np.abs(out), axis=1)]
    phase = np.where(np.abs(lead) > 0, lead / np.abs(lead), 1.0)
    return out / phase[:, None]


class EnsembleSnapshot:
    """Read-only copy of the ensemble at one time step."""

    def __init__(self, states):
        states = np.array(states, dtype=complex, copy=True)
        if states.ndim != 2 or states.shape[0] < 1:
            raise ConfigurationError("snapshot needs a (M, D) array of states")
        states.setflags(write=False)
        self.states = states

    @property
    def M(self):
        return self.states.shape[0]

    @property
    def D(self):
        return self.states.shape[1]

    @property
    def radius(self):
        return float(np.max(np.linalg.norm(self.states, axis=1)))


@dataclass(frozen=True)
class KdeContext:
    snapshot: EnsembleSnapshot
    sigma: float
    projective: bool = False

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigurationError(f"KDE bandwidth must be positive, got {self.sigma}")
        if self.projective:
            object.__setattr__(self, "_samples", projective_representative(self.snapshot.states))
        else:
            object.__setattr__(self, "_samples", self.snapshot.states)

    @classmethod
    def from_states(cls, states, sigma=None, projective=False):
        snap = states if isinstance(states, EnsembleSnapshot) else EnsembleSnapshot(states)
        if sigma is None:
            sigma = bandwidth(snap.M, snap.D)
        return cls(snap, sigma, projective)

    @property
    def inv_s2(self):
        return 1.0 / self.sigma ** 2

    @property
    def samples(self):
        return self._samples

    def queries(self, psi):
        q = np.atleast_2d(np.asarray(psi, dtype=complex))
        if q.shape[1] != self.snapshot.D:
            raise ConfigurationError(
                f"query dimension {q.shape[1]} does not match snapshot dimension {self.snapshot.D}")
        return projective_representative(q) if self.projective else q

    def log_sums(self, psi):
        return kernels.kde_logsum(self.queries(psi), self._samples, self.inv_s2)


def density(ctx, psi):
    """Normalized estimate ``(1/(M (pi s^2)^D)) sum_nu exp(-|psi - psi_nu|^2/s^2)``."""
    ls = ctx.log_sums(psi)[0]
    D = ctx.snapshot.D
    return float(np.exp(ls - np.log(ctx.snapshot.M) - D * np.log(np.pi * ctx.sigma ** 2)))


def far_from_ensemble(ctx, psi):
    """True when every kernel term underflows for ``psi``."""
    return bool(ctx.log_sums(psi)[0] < kernels.LOG_TINY)


def density_ratio(ctx, psi_target, psi_source):
    """``P(target)/P(source)``; 0.0 when both kernel sums underflow."""
    ls = ctx.log_sums(np.stack([np.asarray(psi_target, complex), np.asarray(psi_source, complex)]))
    if ls[0] < kernels.LOG_TINY and ls[1] < kernels.LOG_TINY:
        return 0.0
    with np.errstate(over="ignore"):
        return float(np.exp(ls[0] - ls[1]))


def log_density_gradient(ctx, psi):
    """Wirtinger derivative ``d ln P / d conj(psi_n)`` by the mean-shift identity.

    Returns ``-(psi - <<psi>>)/sigma**2`` with softmax weights over the full
    squared distance; the zero vector when ``psi`` is far from the ensemble.
    """
    q = ctx.queries(psi)
    means, logsum = kernels.kde_mean_shift(q, ctx.samples, ctx.inv_s2)
    if logsum[0] < kernels.LOG_TINY:
        return np.zeros(q.shape[1], dtype=complex)
    return -(q[0] - means[0]) * ctx.inv_s2


def weighted_mean(ctx, psi):
    """Kernel-weighted ensemble mean ``<<psi>>`` seen from ``psi``."""
    means, _ = kernels.kde_mean_shift(ctx.queries(psi), ctx.samples, ctx.inv_s2)
    return means[0]
