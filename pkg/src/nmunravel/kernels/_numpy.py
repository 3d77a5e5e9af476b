"""Vectorized numpy kernels; the fallback when numba is disabled."""

import numpy as np

LOG_TINY = -708.0
GATE_SLACK = 1e-9
_CHUNK = 256


def _exponents(queries, samples, inv_s2):
    diff = queries[:, None, :] - samples[None, :, :]
    return -(diff.real ** 2 + diff.imag ** 2).sum(axis=2) * inv_s2


def kde_logsum(queries, samples, inv_s2):
    out = np.empty(queries.shape[0])
    for lo in range(0, queries.shape[0], _CHUNK):
        e = _exponents(queries[lo:lo + _CHUNK], samples, inv_s2)
        mx = e.max(axis=1)
        out[lo:lo + _CHUNK] = mx + np.log(np.exp(e - mx[:, None]).sum(axis=1))
    return out


def kde_mean_shift(queries, samples, inv_s2):
    Q, D = queries.shape
    means = np.empty((Q, D), dtype=complex)
    logsum = np.empty(Q)
    for lo in range(0, Q, _CHUNK):
        e = _exponents(queries[lo:lo + _CHUNK], samples, inv_s2)
        mx = e.max(axis=1)
        w = np.exp(e - mx[:, None])
        s = w.sum(axis=1)
        means[lo:lo + _CHUNK] = (w @ samples) / s[:, None]
        logsum[lo:lo + _CHUNK] = mx + np.log(s)
    return means, logsum


def jump_step(psi, snapshot, radius, anchors, prop, fwd, inv, p_plus, base_minus, inv_s2,
              u, out, events, flags):
    N, D = psi.shape
    K = fwd.shape[0]
    log_m = np.log(snapshot.shape[0]) + GATE_SLACK
    cum_fwd = np.cumsum(p_plus)
    p_fwd = cum_fwd[-1]
    base_tot = base_minus.sum()
    ev = np.full(N, -1, dtype=np.int64)
    flags[:] = False

    is_fwd = u < p_fwd
    if np.any(is_fwd):
        k = np.searchsorted(cum_fwd, u[is_fwd], side="right")
        ev[is_fwd] = np.minimum(k, K - 1)

    tgt = np.einsum("kab,nb->nka", inv, psi)
    if base_tot > 0:
        reach = np.linalg.norm(psi, axis=1) + radius
        dn = np.linalg.norm(tgt - psi[:, None, :], axis=2)
        ex = (2.0 * dn * reach[:, None] - dn ** 2) * inv_s2 + GATE_SLACK
        has = anchors >= 0
        d_anchor = psi - snapshot[np.where(has, anchors, 0)]
        anchor_ex = np.where(has, (np.abs(d_anchor) ** 2).sum(axis=1) * inv_s2 + log_m, 700.0)
        ex = np.minimum(np.minimum(ex, anchor_ex[:, None]), 700.0)
        bound = p_fwd + (base_minus[None, :] * np.exp(ex)).sum(axis=1)
        need = np.flatnonzero(~is_fwd & (u < bound))
        if need.size:
            ls_src = kde_logsum(psi[need], snapshot, inv_s2)
            far = ls_src < LOG_TINY
            flags[need[far]] = True
            keep = ~far & (u[need] < p_fwd + base_tot * np.exp(np.minimum(log_m - ls_src, 700.0)))
            need, ls_src = need[keep], ls_src[keep]
        if need.size:
            ls = kde_logsum(tgt[need].reshape(-1, D), snapshot, inv_s2).reshape(need.size, K)
            with np.errstate(over="ignore"):
                p_minus = base_minus[None, :] * np.exp(ls - ls_src[:, None])
            cum = p_fwd + np.cumsum(p_minus, axis=1)
            hit = (u[need][:, None] < cum) & (base_minus[None, :] > 0)
            fired = hit.any(axis=1)
            ev[need[fired]] = K + np.argmax(hit[fired], axis=1)

    events[:] = ev
    none = ev < 0
    out[none] = psi[none] @ prop.T
    f = (ev >= 0) & (ev < K)
    if np.any(f):
        out[f] = np.einsum("nab,nb->na", fwd[ev[f]], psi[f])
    r = ev >= K
    if np.any(r):
        idx = np.flatnonzero(r)
        out[r] = tgt[idx, ev[r] - K]


def diffusion_step(psi, snapshot, prop, L, two_gm, dt, inv_s2, dz, out, flags):
    Lx = psi @ L.T
    coeff = dz.astype(complex)
    flags[:] = False
    if two_gm > 0.0:
        means, logsum = kde_mean_shift(psi, snapshot, inv_s2)
        grad = -(psi - means) * inv_s2
        c = (Lx.conj() * grad).sum(axis=1)
        far = logsum < LOG_TINY
        c[far] = 0.0
        flags[:] = far
        coeff = coeff + dt * two_gm * c
    out[:] = psi @ prop.T + coeff[:, None] * Lx


def qsd_step(psi, B, L, zs, dt, out):
    A = B[None, :, :, :] + zs[:, :, None, None] * L[None, None, :, :]

    def mv(a, x):
        return np.einsum("nab,nb->na", A[:, a], x)

    k1 = mv(0, psi)
    k2 = mv(1, psi + 0.5 * dt * k1)
    k3 = mv(1, psi + 0.5 * dt * k2)
    k4 = mv(2, psi + dt * k3)
    out[:] = psi + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
