"""Brute-force search for the same objectives, for cross-checking the optimizer.

States are written spectrally, rho = Q diag(lam) Q^dagger. A grid over the
eigenvalue simplex is combined with Haar-random bases, and the best
candidates are then refined by random local search with adaptive radii.
Entropies here go through LAPACK, not through the package's Jacobi kernels,
so the two routes share no numerical code beyond numpy itself.
"""
import itertools
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GridConfig:
    simplex_steps: int = 24
    n_bases: int = 128
    refine_rounds: int = 150
    refine_keep: int = 8
    refine_samples: int = 48
    seed: int = 12345


def simplex_grid(d, steps):
    pts = []
    for combo in itertools.combinations(range(steps + d - 1), d - 1):
        bars = (-1,) + combo + (steps + d - 1,)
        pts.append([bars[i + 1] - bars[i] - 1 for i in range(d)])
    return np.asarray(pts, dtype=float) / steps


def haar_unitaries(rng, n, d):
    z = (rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r, axis1=1, axis2=2)
    ph = ph / np.abs(ph)
    return q * ph[:, None, :]


def _entropy_terms(mats):
    lam = np.clip(np.linalg.eigvalsh(mats), 0.0, None)
    safe = np.where(lam > 0.0, lam, 1.0)
    return -np.sum(lam * np.log(safe), axis=-1)


def evaluate(lams, qs, kraus_groups, temperature, h=None, energy_weight=0.0):
    """Objective values for a batch of spectral parameters."""
    rho = np.einsum("nij,nj,nkj->nik", qs, lams, qs.conj())
    s_rho = _entropy_terms(lams[:, :, None] * np.eye(lams.shape[1])[None])
    cond = np.zeros(lams.shape[0])
    e_out = np.zeros(lams.shape[0])
    for group in kraus_groups:
        ks = np.asarray(group, dtype=np.complex128)
        x = np.einsum("kij,njl,kml->nim", ks, rho, ks.conj(), optimize=True)
        p = np.einsum("nii->n", x).real
        plogp = np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
        cond += np.where(p > 0.0, _entropy_terms(x) + plogp, 0.0)
        if energy_weight:
            e_out += np.einsum("ij,nji->n", h, x).real
    val = temperature * (s_rho - cond)
    if energy_weight:
        val += energy_weight * (e_out - np.einsum("ij,nji->n", h, rho).real)
    return val


def _random_hermitian(rng, n, d):
    z = rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))
    return 0.5 * (z + np.conj(np.swapaxes(z, 1, 2))) / np.sqrt(d)


def _expm_i(g):
    w, v = np.linalg.eigh(g)
    return np.einsum("nij,nj,nkj->nik", v, np.exp(1j * w), v.conj())


def search(kraus_groups, d, temperature, cfg=None, h=None, energy_weight=0.0):
    """Return (best value, best state)."""
    cfg = cfg or GridConfig()
    rng = np.random.default_rng(cfg.seed)
    if h is None:
        h = np.zeros((d, d), dtype=np.complex128)
    f = lambda lam, q: evaluate(lam, q, kraus_groups, temperature, h, energy_weight)

    grid = simplex_grid(d, cfg.simplex_steps)
    bases = haar_unitaries(rng, cfg.n_bases, d)
    bases[0] = np.eye(d)
    lam_all = np.repeat(grid, cfg.n_bases, axis=0)
    q_all = np.tile(bases, (grid.shape[0], 1, 1))
    vals = np.empty(lam_all.shape[0])
    chunk = 20000
    for s in range(0, vals.size, chunk):
        vals[s:s + chunk] = f(lam_all[s:s + chunk], q_all[s:s + chunk])

    top = np.argsort(-vals, kind="stable")[:cfg.refine_keep]
    lam_k, q_k, v_k = lam_all[top], q_all[top], vals[top]

    # each candidate runs its own (1+m) evolution strategy, so the elite
    # cannot collapse onto a single basin
    k, m = lam_k.shape[0], cfg.refine_samples
    radius = np.full(k, 0.5 / cfg.simplex_steps)
    for _ in range(cfg.refine_rounds):
        r = np.repeat(radius, m)
        parent = np.repeat(lam_k, m, axis=0)
        lam_c = np.clip(parent + r[:, None] * rng.standard_normal(parent.shape), 0.0, None)
        tot = lam_c.sum(axis=1, keepdims=True)
        lam_c = np.where(tot > 0.0, lam_c / np.where(tot > 0.0, tot, 1.0), parent)
        q_c = np.repeat(q_k, m, axis=0) @ _expm_i(r[:, None, None] * _random_hermitian(rng, k * m, d))
        v_c = f(lam_c, q_c).reshape(k, m)
        best = np.argmax(v_c, axis=1)
        gain = v_c[np.arange(k), best] > v_k
        idx = np.arange(k) * m + best
        lam_k = np.where(gain[:, None], lam_c[idx], lam_k)
        q_k = np.where(gain[:, None, None], q_c[idx], q_k)
        v_k = np.where(gain, v_c[np.arange(k), best], v_k)
        radius = np.where(gain, radius * 1.5, radius * 0.7)
        radius = np.clip(radius, 1e-9, 0.5)

    top = int(np.argmax(v_k))
    lam_k, q_k, v_k = lam_k[top:top + 1], q_k[top:top + 1], v_k[top:top + 1]
    rho = (q_k[0] * lam_k[0]) @ q_k[0].conj().T
    return float(v_k[0]), rho
