"""Compiled loop kernels. Same signatures as :mod:`._numpy`.

Every kernel treats trajectories independently and writes into caller-owned
output slices, so callers may split the ensemble across threads freely.
"""

import math

import numpy as np
from numba import njit

LOG_TINY = -708.0
# log-space headroom on the reverse-jump gates against rounding
GATE_SLACK = 1e-9


@njit(cache=True, nogil=True)
def _sqdist(q, a, j):
    s = 0.0
    for n in range(q.shape[0]):
        d = q[n] - a[j, n]
        s += d.real * d.real + d.imag * d.imag
    return s


@njit(cache=True, nogil=True)
def kde_logsum(queries, samples, inv_s2):
    Q = queries.shape[0]
    M = samples.shape[0]
    out = np.empty(Q)
    for i in range(Q):
        mx = -np.inf
        s = 0.0
        for j in range(M):
            e = -_sqdist(queries[i], samples, j) * inv_s2
            if e > mx:
                s = s * math.exp(mx - e) + 1.0
                mx = e
            else:
                s += math.exp(e - mx)
        out[i] = mx + math.log(s)
    return out


@njit(cache=True, nogil=True)
def kde_mean_shift(queries, samples, inv_s2):
    Q, D = queries.shape
    M = samples.shape[0]
    means = np.zeros((Q, D), dtype=np.complex128)
    logsum = np.empty(Q)
    acc = np.empty(D, dtype=np.complex128)
    for i in range(Q):
        mx = -np.inf
        s = 0.0
        acc[:] = 0.0
        for j in range(M):
            e = -_sqdist(queries[i], samples, j) * inv_s2
            if e > mx:
                r = math.exp(mx - e)
                s = s * r + 1.0
                for n in range(D):
                    acc[n] = acc[n] * r + samples[j, n]
                mx = e
            else:
                w = math.exp(e - mx)
                s += w
                for n in range(D):
                    acc[n] += w * samples[j, n]
        for n in range(D):
            means[i, n] = acc[n] / s
        logsum[i] = mx + math.log(s)
    return means, logsum


@njit(cache=True, nogil=True)
def _matvec(A, x, out):
    D = x.shape[0]
    for r in range(D):
        s = 0j
        for c in range(D):
            s += A[r, c] * x[c]
        out[r] = s


@njit(cache=True, nogil=True)
def _norm(x):
    s = 0.0
    for n in range(x.shape[0]):
        s += x[n].real * x[n].real + x[n].imag * x[n].imag
    return math.sqrt(s)


@njit(cache=True, nogil=True)
def _logsum_one(x, samples, inv_s2):
    mx = -np.inf
    s = 0.0
    for j in range(samples.shape[0]):
        e = -_sqdist(x, samples, j) * inv_s2
        if e > mx:
            s = s * math.exp(mx - e) + 1.0
            mx = e
        else:
            s += math.exp(e - mx)
    return mx + math.log(s)


@njit(cache=True, nogil=True)
def jump_step(psi, snapshot, radius, anchors, prop, fwd, inv, p_plus, base_minus, inv_s2,
              u, out, events, flags):
    N, D = psi.shape
    K = fwd.shape[0]
    M = snapshot.shape[0]
    log_m = math.log(M) + GATE_SLACK
    p_fwd = 0.0
    for k in range(K):
        p_fwd += p_plus[k]
    base_tot = 0.0
    for k in range(K):
        base_tot += base_minus[k]
    tgt = np.empty((K, D), dtype=np.complex128)
    for i in range(N):
        x = psi[i]
        ui = u[i]
        flags[i] = False
        event = -1
        if ui < p_fwd:
            c = 0.0
            for k in range(K):
                c += p_plus[k]
                if ui < c:
                    event = k
                    break
            if event < 0:
                event = K - 1
        elif base_tot > 0.0:
            for k in range(K):
                _matvec(inv[k], x, tgt[k])
            # ratio_k <= max_j exp((|x-a_j|^2 - |tgt_k-a_j|^2)/s^2), and
            # ratio_k <= M / sum_j exp(-|x-a_j|^2/s^2) <= M exp(|x-a_anchor|^2/s^2)
            reach = _norm(x) + radius
            anchor_ex = 700.0
            if anchors[i] >= 0:
                anchor_ex = min(_sqdist(x, snapshot, anchors[i]) * inv_s2 + log_m, 700.0)
            bound = p_fwd
            for k in range(K):
                dn = 0.0
                for n in range(D):
                    d = tgt[k, n] - x[n]
                    dn += d.real * d.real + d.imag * d.imag
                dn = math.sqrt(dn)
                ex = min((2.0 * dn * reach - dn * dn) * inv_s2 + GATE_SLACK, anchor_ex)
                bound += base_minus[k] * math.exp(min(ex, 700.0))
            if ui < bound:
                ls_src = _logsum_one(x, snapshot, inv_s2)
                if ls_src < LOG_TINY:
                    flags[i] = True
                elif ui < p_fwd + base_tot * math.exp(min(log_m - ls_src, 700.0)):
                    c = p_fwd
                    for k in range(K):
                        if base_minus[k] > 0.0:
                            ls_k = _logsum_one(tgt[k], snapshot, inv_s2)
                            c += base_minus[k] * math.exp(ls_k - ls_src)
                            if ui < c:
                                event = K + k
                                break
        events[i] = event
        if event < 0:
            _matvec(prop, x, out[i])
        elif event < K:
            _matvec(fwd[event], x, out[i])
        else:
            for n in range(D):
                out[i, n] = tgt[event - K, n]


@njit(cache=True, nogil=True)
def diffusion_step(psi, snapshot, prop, L, two_gm, dt, inv_s2, dz, out, flags):
    N, D = psi.shape
    M = snapshot.shape[0]
    Lx = np.empty(D, dtype=np.complex128)
    acc = np.empty(D, dtype=np.complex128)
    for i in range(N):
        x = psi[i]
        _matvec(prop, x, out[i])
        _matvec(L, x, Lx)
        coeff = dz[i]
        flags[i] = False
        if two_gm > 0.0:
            mx = -np.inf
            s = 0.0
            acc[:] = 0.0
            for j in range(M):
                e = -_sqdist(x, snapshot, j) * inv_s2
                if e > mx:
                    r = math.exp(mx - e)
                    s = s * r + 1.0
                    for n in range(D):
                        acc[n] = acc[n] * r + snapshot[j, n]
                    mx = e
                else:
                    w = math.exp(e - mx)
                    s += w
                    for n in range(D):
                        acc[n] += w * snapshot[j, n]
            if mx + math.log(s) < LOG_TINY:
                flags[i] = True
            else:
                c = 0j
                for n in range(D):
                    grad = -(x[n] - acc[n] / s) * inv_s2
                    c += Lx[n].conjugate() * grad
                coeff += dt * two_gm * c
        for n in range(D):
            out[i, n] += coeff * Lx[n]


@njit(cache=True, nogil=True)
def qsd_step(psi, B, L, zs, dt, out):
    N, D = psi.shape
    A = np.empty((3, D, D), dtype=np.complex128)
    k1 = np.empty(D, dtype=np.complex128)
    k2 = np.empty(D, dtype=np.complex128)
    k3 = np.empty(D, dtype=np.complex128)
    k4 = np.empty(D, dtype=np.complex128)
    y = np.empty(D, dtype=np.complex128)
    for i in range(N):
        for a in range(3):
            for r in range(D):
                for c in range(D):
                    A[a, r, c] = B[a, r, c] + zs[i, a] * L[r, c]
        x = psi[i]
        _matvec(A[0], x, k1)
        for n in range(D):
            y[n] = x[n] + 0.5 * dt * k1[n]
        _matvec(A[1], y, k2)
        for n in range(D):
            y[n] = x[n] + 0.5 * dt * k2[n]
        _matvec(A[1], y, k3)
        for n in range(D):
            y[n] = x[n] + dt * k3[n]
        _matvec(A[2], y, k4)
        for n in range(D):
            out[i, n] = x[n] + dt / 6.0 * (k1[n] + 2.0 * k2[n] + 2.0 * k3[n] + k4[n])
