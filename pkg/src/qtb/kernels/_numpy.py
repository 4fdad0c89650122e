"""Pure-numpy kernels, vectorised over the batch axis.

Same cyclic Jacobi sweep order as the compiled path, but every rotation is
applied to the whole stack of matrices at once.
"""
import numpy as np

OFF_TOL = 1e-14
MAX_SWEEPS = 60


def _jacobi_batch(a, want_vectors):
    a = np.array(a, dtype=np.complex128, copy=True)
    n, d, _ = a.shape
    v = np.broadcast_to(np.eye(d, dtype=np.complex128), (n, d, d)).copy() if want_vectors else None
    if d == 1:
        return a, v
    iu = np.triu_indices(d, 1)
    pairs = list(zip(*iu))
    for _ in range(MAX_SWEEPS):
        off = np.sum(np.abs(a[:, iu[0], iu[1]]) ** 2, axis=1)
        diag = np.sum(np.diagonal(a, axis1=1, axis2=2).real ** 2, axis=1)
        if np.all((off <= OFF_TOL**2 * (diag + 2.0 * off)) | (off == 0.0)):
            break
        for p, q in pairs:
            apq = a[:, p, q]
            g = np.abs(apq)
            live = g > 0.0
            gs = np.where(live, g, 1.0)
            ph = np.where(live, apq / gs, 1.0)
            cph = ph.conj()
            theta = (a[:, q, q].real - a[:, p, p].real) / (2.0 * gs)
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(theta == 0.0, 1.0, t)
            t = np.where(live, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            c_ = c[:, None]
            sc = (s * cph)[:, None]
            sp = (s * ph)[:, None]
            cc = (c * cph)[:, None]
            cp = (c * ph)[:, None]
            akp = a[:, :, p].copy()
            akq = a[:, :, q]
            a[:, :, p] = c_ * akp - sc * akq
            a[:, :, q] = s[:, None] * akp + cc * akq
            apk = a[:, p, :].copy()
            aqk = a[:, q, :]
            a[:, p, :] = c_ * apk - sp * aqk
            a[:, q, :] = s[:, None] * apk + cp * aqk
            a[:, p, q] = 0.0
            a[:, q, p] = 0.0
            a[:, p, p] = a[:, p, p].real
            a[:, q, q] = a[:, q, q].real
            if want_vectors:
                vkp = v[:, :, p].copy()
                vkq = v[:, :, q]
                v[:, :, p] = c_ * vkp - sc * vkq
                v[:, :, q] = s[:, None] * vkp + cc * vkq
    return a, v


def eigh_batch(a):
    diag, v = _jacobi_batch(a, True)
    raw = np.diagonal(diag, axis1=1, axis2=2).real
    order = np.argsort(raw, axis=1, kind="stable")
    w = np.take_along_axis(raw, order, axis=1)
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    return w, v


def eigvalsh_batch(a):
    diag, _ = _jacobi_batch(a, False)
    return np.sort(np.diagonal(diag, axis1=1, axis2=2).real, axis=1)


def _eta_from_eigs(lam):
    pos = np.where(lam > 0.0, lam, 1.0)
    return -np.sum(np.where(lam > 0.0, lam * np.log(pos), 0.0), axis=-1)


def eta_batch(a):
    return _eta_from_eigs(eigvalsh_batch(a))


def states_objective(rhos, kraus, outcome, n_out, h, temperature, energy_weight):
    rhos = np.asarray(rhos, dtype=np.complex128)
    n, d, _ = rhos.shape
    s_rho = eta_batch(rhos)
    # (n, K, d, d) per-Kraus outputs, then summed per outcome
    per_k = np.einsum("kij,njl,kml->nkim", kraus, rhos, kraus.conj())
    xo = np.zeros((n, n_out, d, d), dtype=np.complex128)
    for k in range(kraus.shape[0]):
        xo[:, outcome[k]] += per_k[:, k]
    p = np.einsum("noii->no", xo).real
    eta = eta_batch(xo.reshape(n * n_out, d, d)).reshape(n, n_out)
    plogp = np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    cond = np.where(p > 0.0, eta + plogp, 0.0).sum(axis=1)
    val = temperature * (s_rho - cond)
    if energy_weight != 0.0:
        e_out = np.einsum("ij,noji->n", h, xo).real
        e_in = np.einsum("ij,nji->n", h, rhos).real
        val = val + energy_weight * (e_out - e_in)
    return val


def _params_to_states(x, d):
    dd = d * d
    a = (x[:, :dd] + 1j * x[:, dd:]).reshape(-1, d, d)
    rho = a @ a.conj().transpose(0, 2, 1)
    tr = np.einsum("nii->n", rho).real
    return rho / tr[:, None, None]


def objective_batch(x, kraus, outcome, n_out, h, temperature, energy_weight):
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    d = kraus.shape[1]
    return states_objective(_params_to_states(x, d), kraus, outcome, n_out, h,
                            temperature, energy_weight)


def objective_grad(x, kraus, outcome, n_out, h, temperature, energy_weight, step):
    x = np.asarray(x, dtype=np.float64)
    m = x.shape[0]
    shifts = np.eye(m) * step
    stack = np.concatenate([x + shifts, x - shifts])
    vals = objective_batch(stack, kraus, outcome, n_out, h, temperature, energy_weight)
    return (vals[:m] - vals[m:]) / (2.0 * step)
