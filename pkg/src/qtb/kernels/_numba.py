"""Numba-compiled kernels.

Every function here has a twin in ``_numpy`` with the same signature and the
same results up to rounding. Matrices are complex128; parameter vectors
are float64 and hold ``A = x[:d*d] + 1j*x[d*d:]`` in row-major order, which
maps to the state ``A A^dagger / Tr[A A^dagger]``.
"""
import math

import numpy as np
from numba import njit

OFF_TOL = 1e-14
MAX_SWEEPS = 60


@njit(cache=True, nogil=True)
def _jacobi_inplace(a, v, want_vectors):
    # cyclic complex Jacobi; a is overwritten with (almost) diagonal form
    n = a.shape[0]
    if want_vectors:
        for i in range(n):
            for j in range(n):
                v[i, j] = 0.0
            v[i, i] = 1.0
    for _ in range(MAX_SWEEPS):
        off = 0.0
        diag = 0.0
        for p in range(n):
            diag += a[p, p].real * a[p, p].real
            for q in range(p + 1, n):
                off += a[p, q].real * a[p, q].real + a[p, q].imag * a[p, q].imag
        if off <= OFF_TOL * OFF_TOL * (diag + 2.0 * off) or off == 0.0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                g = abs(apq)
                if g == 0.0:
                    continue
                ph = apq / g
                cph = ph.conjugate()
                theta = (a[q, q].real - a[p, p].real) / (2.0 * g)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * cph * akq
                    a[k, q] = s * akp + c * cph * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * ph * aqk
                    a[q, k] = s * apk + c * ph * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                if want_vectors:
                    for k in range(n):
                        vkp = v[k, p]
                        vkq = v[k, q]
                        v[k, p] = c * vkp - s * cph * vkq
                        v[k, q] = s * vkp + c * cph * vkq


@njit(cache=True, nogil=True)
def eigh_batch(a):
    n, d, _ = a.shape
    w = np.empty((n, d))
    vecs = np.empty((n, d, d), dtype=np.complex128)
    work = np.empty((d, d), dtype=np.complex128)
    for b in range(n):
        for i in range(d):
            for j in range(d):
                work[i, j] = a[b, i, j]
        _jacobi_inplace(work, vecs[b], True)
        raw = np.empty(d)
        for i in range(d):
            raw[i] = work[i, i].real
        order = np.argsort(raw)
        tmp = vecs[b].copy()
        for i in range(d):
            w[b, i] = raw[order[i]]
            for k in range(d):
                vecs[b, k, i] = tmp[k, order[i]]
    return w, vecs


@njit(cache=True, nogil=True)
def _eigvals_into(m, work, dummy, out):
    d = m.shape[0]
    for i in range(d):
        for j in range(d):
            work[i, j] = m[i, j]
    _jacobi_inplace(work, dummy, False)
    for i in range(d):
        out[i] = work[i, i].real


@njit(cache=True, nogil=True)
def eigvalsh_batch(a):
    n, d, _ = a.shape
    w = np.empty((n, d))
    work = np.empty((d, d), dtype=np.complex128)
    dummy = np.empty((1, 1), dtype=np.complex128)
    for b in range(n):
        _eigvals_into(a[b], work, dummy, w[b])
        w[b] = np.sort(w[b])
    return w


@njit(cache=True, nogil=True)
def _eta(m, work, dummy, lam):
    _eigvals_into(m, work, dummy, lam)
    s = 0.0
    for i in range(lam.shape[0]):
        x = lam[i]
        if x > 0.0:
            s -= x * math.log(x)
    return s


@njit(cache=True, nogil=True)
def eta_batch(a):
    n, d, _ = a.shape
    out = np.empty(n)
    work = np.empty((d, d), dtype=np.complex128)
    dummy = np.empty((1, 1), dtype=np.complex128)
    lam = np.empty(d)
    for b in range(n):
        out[b] = _eta(a[b], work, dummy, lam)
    return out


@njit(cache=True, nogil=True)
def _state_objective(rho, kraus, outcome, n_out, h, temperature, energy_weight,
                     xo, tmp, work, dummy, lam):
    d = rho.shape[0]
    s_rho = _eta(rho, work, dummy, lam)
    for o in range(n_out):
        for i in range(d):
            for j in range(d):
                xo[o, i, j] = 0.0
    for k in range(kraus.shape[0]):
        kk = kraus[k]
        o = outcome[k]
        # tmp = K rho
        for i in range(d):
            for j in range(d):
                acc = 0j
                for l in range(d):
                    acc += kk[i, l] * rho[l, j]
                tmp[i, j] = acc
        # xo += tmp K^dagger
        for i in range(d):
            for j in range(d):
                acc = 0j
                for l in range(d):
                    acc += tmp[i, l] * kk[j, l].conjugate()
                xo[o, i, j] += acc
    cond = 0.0
    energy = 0.0
    for o in range(n_out):
        p = 0.0
        for i in range(d):
            p += xo[o, i, i].real
        if p > 0.0:
            cond += _eta(xo[o], work, dummy, lam) + p * math.log(p)
        if energy_weight != 0.0:
            for i in range(d):
                for j in range(d):
                    energy += (h[i, j] * xo[o, j, i]).real
    val = temperature * (s_rho - cond)
    if energy_weight != 0.0:
        e0 = 0.0
        for i in range(d):
            for j in range(d):
                e0 += (h[i, j] * rho[j, i]).real
        val += energy_weight * (energy - e0)
    return val


@njit(cache=True, nogil=True)
def _params_to_state(x, d, rho):
    dd = d * d
    tr = 0.0
    for i in range(d):
        for j in range(d):
            acc = 0j
            for k in range(d):
                aik = complex(x[i * d + k], x[dd + i * d + k])
                ajk = complex(x[j * d + k], -x[dd + j * d + k])
                acc += aik * ajk
            rho[i, j] = acc
        tr += rho[i, i].real
    for i in range(d):
        for j in range(d):
            rho[i, j] = rho[i, j] / tr


@njit(cache=True, nogil=True)
def states_objective(rhos, kraus, outcome, n_out, h, temperature, energy_weight):
    n, d, _ = rhos.shape
    out = np.empty(n)
    xo = np.empty((n_out, d, d), dtype=np.complex128)
    tmp = np.empty((d, d), dtype=np.complex128)
    work = np.empty((d, d), dtype=np.complex128)
    dummy = np.empty((1, 1), dtype=np.complex128)
    lam = np.empty(d)
    for b in range(n):
        out[b] = _state_objective(rhos[b], kraus, outcome, n_out, h, temperature,
                                  energy_weight, xo, tmp, work, dummy, lam)
    return out


@njit(cache=True, nogil=True)
def objective_batch(x, kraus, outcome, n_out, h, temperature, energy_weight):
    n = x.shape[0]
    d = kraus.shape[1]
    out = np.empty(n)
    rho = np.empty((d, d), dtype=np.complex128)
    xo = np.empty((n_out, d, d), dtype=np.complex128)
    tmp = np.empty((d, d), dtype=np.complex128)
    work = np.empty((d, d), dtype=np.complex128)
    dummy = np.empty((1, 1), dtype=np.complex128)
    lam = np.empty(d)
    for b in range(n):
        _params_to_state(x[b], d, rho)
        out[b] = _state_objective(rho, kraus, outcome, n_out, h, temperature,
                                  energy_weight, xo, tmp, work, dummy, lam)
    return out


@njit(cache=True, nogil=True)
def objective_grad(x, kraus, outcome, n_out, h, temperature, energy_weight, step):
    m = x.shape[0]
    d = kraus.shape[1]
    g = np.empty(m)
    xp = x.copy()
    rho = np.empty((d, d), dtype=np.complex128)
    xo = np.empty((n_out, d, d), dtype=np.complex128)
    tmp = np.empty((d, d), dtype=np.complex128)
    work = np.empty((d, d), dtype=np.complex128)
    dummy = np.empty((1, 1), dtype=np.complex128)
    lam = np.empty(d)
    for k in range(m):
        xp[k] = x[k] + step
        _params_to_state(xp, d, rho)
        fp = _state_objective(rho, kraus, outcome, n_out, h, temperature,
                              energy_weight, xo, tmp, work, dummy, lam)
        xp[k] = x[k] - step
        _params_to_state(xp, d, rho)
        fm = _state_objective(rho, kraus, outcome, n_out, h, temperature,
                              energy_weight, xo, tmp, work, dummy, lam)
        xp[k] = x[k]
        g[k] = (fp - fm) / (2.0 * step)
    return g
