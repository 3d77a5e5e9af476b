"""Non-Markovian quantum diffusion: the small-jump limit of the jump process.

    d psi = (-i G' + 2 gamma_- <L psi, grad> L) psi dt + L psi (dZ_+ - dZ_-)

with ``grad_n = d ln P / d conj(psi_n)`` from the ensemble KDE and circular
complex Gaussian increments ``E|dZ_pm|^2 = 2 gamma_pm dt``. The linear part
between noise kicks takes the same RK4 step as the jump process; noise and
the ensemble drift are Euler-Maruyama.
"""

import numpy as np

from . import kernels
from .errors import ConfigurationError
from .kde import log_density_gradient
from .system import drift_matrix, rk4_propagator


def sample_complex_increment(gamma, dt, rng_stream):
    """``sqrt(gamma dt) (u + i v)`` with ``u, v`` independent standard normals."""
    if gamma < 0:
        raise ConfigurationError("increment rate must be non-negative; pass split rates")
    if dt <= 0:
        raise ConfigurationError("dt must be positive")
    u, v = rng_stream.normals(2)
    if gamma == 0:
        return 0j
    return np.sqrt(gamma * dt) * complex(u, v)


def increment_difference(gamma_plus, gamma_minus, dt, z):
    """``dZ_+ - dZ_-`` from four standard normals per row of ``z``."""
    dzp = np.sqrt(gamma_plus * dt) * (z[..., 0] + 1j * z[..., 1])
    dzm = np.sqrt(gamma_minus * dt) * (z[..., 2] + 1j * z[..., 3])
    return dzp - dzm


def nmqd_drift(psi, t, system, rates, kde_ctx):
    """``-i G'(t) psi + 2 gamma_-(t) (sum_n conj((L psi)_n) grad_n) L psi``."""
    psi = np.asarray(psi, dtype=complex)
    out = drift_matrix(system, rates, t) @ psi
    _, gm = rates.rates_at(t)
    if gm > 0:
        Lpsi = system.coupling @ psi
        grad = log_density_gradient(kde_ctx, psi)
        out = out + 2.0 * gm * np.vdot(Lpsi, grad) * Lpsi
    return out


def advance_diffusion(psi, prop, L, gamma_minus, dt, dz, kde_ctx, workers_map=None):
    """Euler-Maruyama step for a batch; ``dz`` holds ``dZ_+ - dZ_-`` per row."""
    psi = np.ascontiguousarray(psi, dtype=complex)
    N = psi.shape[0]
    out = np.empty_like(psi)
    flags = np.empty(N, dtype=np.bool_)
    dz = np.ascontiguousarray(dz, dtype=complex)
    L = np.ascontiguousarray(L, dtype=complex)
    samples = kde_ctx.samples if kde_ctx is not None else psi[:1]
    inv_s2 = kde_ctx.inv_s2 if kde_ctx is not None else 1.0
    two_gm = 2.0 * gamma_minus if kde_ctx is not None else 0.0

    def work(lo, hi):
        kernels.diffusion_step(psi[lo:hi], samples, prop, L, two_gm, dt, inv_s2,
                               dz[lo:hi], out[lo:hi], flags[lo:hi])

    if workers_map is None:
        work(0, N)
    else:
        workers_map(work, N)
    return out, flags


def step_trajectory_diffusion(psi, t, dt, system, rates, kde_ctx, rng_stream):
    """One step of a single trajectory; consumes four normals from ``rng_stream``."""
    psi = np.asarray(psi, dtype=complex)
    gp, gm = rates.rates_at(t)
    dz = increment_difference(gp, gm, dt, rng_stream.normals(4))
    prop = rk4_propagator(system, rates, t, dt)
    out, _ = advance_diffusion(psi[None, :], prop, system.coupling, gm, dt, np.atleast_1d(dz), kde_ctx)
    return out[0]
