"""Dense complex operator algebra.

Conventions used throughout the package:

* matrices are ``numpy.ndarray`` of dtype complex128;
* in tensor products the left factor is the most significant index, so
  ``tensor(|0><0|, |1><1|) == |01><01|``;
* entropies are in nats, with k_B = hbar = 1.
"""
import numpy as np
from scipy.sparse.csgraph import connected_components

from . import kernels
from .errors import DimensionError, NotHermitianError, NotPositiveError, NotUnitaryError, TraceError

TOL_HERM = 1e-10
TOL_TRACE = 1e-10
TOL_PSD = 1e-9
TOL_UNITARY = 1e-9
MAX_DIM = 4096

# below this size splitting into blocks costs more than it saves
_BLOCK_MIN_DIM = 12


def as_matrix(m):
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionError(f"expected a matrix, got array of shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def dag(m):
    return np.conj(np.swapaxes(m, -1, -2))


def ket(i, d):
    v = np.zeros(d, dtype=np.complex128)
    v[i] = 1.0
    return v


def proj(v):
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    return np.outer(v, v.conj())


def basis_projector(i, d):
    return proj(ket(i, d))


def maximally_mixed(d):
    return np.eye(d, dtype=np.complex128) / d


def _scale(m):
    return max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0


def is_hermitian(m, tol=TOL_HERM):
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and float(np.max(np.abs(m - dag(m)))) <= tol * _scale(m)


def check_hermitian(m, tol=TOL_HERM):
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"Hermitian operator must be square, got {m.shape}")
    if not is_hermitian(m, tol):
        raise NotHermitianError("operator is not Hermitian")
    return m


def check_density(rho, tol_trace=TOL_TRACE, tol_psd=TOL_PSD):
    """Validate a density operator and return it as a complex array."""
    rho = check_hermitian(rho)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol_trace:
        raise TraceError(f"density operator has trace {tr!r}")
    lam = eigvalsh(rho)
    if lam[-1] < -tol_psd:
        raise NotPositiveError(f"density operator has eigenvalue {lam[-1]:.3e}")
    return rho


def check_unitary(u, tol=TOL_UNITARY):
    u = as_matrix(u)
    if u.shape[0] != u.shape[1]:
        raise DimensionError(f"unitary must be square, got {u.shape}")
    if float(np.max(np.abs(dag(u) @ u - np.eye(u.shape[0])))) > tol:
        raise NotUnitaryError("operator is not unitary")
    return u


def tensor(*mats, max_dim=MAX_DIM):
    """Kronecker product, left factor most significant."""
    out = np.ones((1, 1), dtype=np.complex128)
    for m in mats:
        m = np.asarray(m, dtype=np.complex128)
        if m.ndim == 1:
            m = m.reshape(-1, 1)
        rows, cols = out.shape[0] * m.shape[0], out.shape[1] * m.shape[1]
        if max(rows, cols) > max_dim:
            raise DimensionError(f"tensor product dimension {rows}x{cols} exceeds max_dim={max_dim}")
        out = np.kron(out, m)
    return out


def partial_trace(m, dims, keep):
    """Trace out every subsystem not listed in ``keep``.

    ``dims`` lists subsystem dimensions (left factor first). The kept
    subsystems stay in their original order. Tracing out everything returns
    the 1x1 matrix holding the trace.
    """
    m = as_matrix(m)
    dims = [int(x) for x in dims]
    n = int(np.prod(dims))
    if m.shape != (n, n):
        raise DimensionError(f"matrix of shape {m.shape} does not match subsystem dims {dims}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    nsys = len(dims)
    t = m.reshape(dims + dims)
    row = list(range(nsys))
    col = [i + nsys if i in keep else i for i in range(nsys)]
    out_idx = keep + [k + nsys for k in keep]
    t = np.einsum(t, row + col, out_idx)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return np.asarray(t).reshape(dk, dk)


def _canonicalize(w, v, tol):
    """Descending eigenvalues; degenerate clusters ordered by the index of
    each eigenvector's first non-negligible component; that component made
    real and positive."""
    d = w.shape[0]
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    first = np.empty(d, dtype=np.int64)
    for k in range(d):
        col = v[:, k]
        nz = np.nonzero(np.abs(col) > 1e-8)[0]
        j = int(nz[0]) if nz.size else 0
        first[k] = j
        ph = col[j] / abs(col[j]) if abs(col[j]) > 0 else 1.0
        v[:, k] = col / ph
    scale = max(1.0, float(np.max(np.abs(w)))) if d else 1.0
    start = 0
    while start < d:
        stop = start + 1
        while stop < d and abs(w[stop - 1] - w[stop]) <= tol * scale:
            stop += 1
        if stop - start > 1:
            order = start + np.argsort(first[start:stop], kind="stable")
            v[:, start:stop] = v[:, order]
            w[start:stop] = w[order]
        start = stop
    return w, v


def eig_hermitian(m, tol=TOL_HERM):
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, Q)`` with eigenvalues in descending order and
    eigenvectors in the columns of the unitary ``Q`` such that
    ``m = Q diag(eigenvalues) Q^dagger``.
    """
    m = check_hermitian(m, tol)
    m = 0.5 * (m + dag(m))
    w, v = kernels.eigh_batch(m[None])
    return _canonicalize(w[0], v[0], 1e-9)


def _blocks(m):
    d = m.shape[0]
    if d < _BLOCK_MIN_DIM:
        return [np.arange(d)]
    adj = np.abs(m) > 0.0
    n, labels = connected_components(adj, directed=False)
    if n == 1:
        return [np.arange(d)]
    return [np.nonzero(labels == k)[0] for k in range(n)]


def eigvalsh(m):
    """Eigenvalues of a Hermitian matrix, descending.

    Block-diagonal structure (up to a permutation of the basis) is detected
    from the exact sparsity pattern and each block is diagonalised alone.
    """
    m = np.asarray(m, dtype=np.complex128)
    m = 0.5 * (m + dag(m))
    groups = {}
    for idx in _blocks(m):
        groups.setdefault(idx.size, []).append(idx)
    out = []
    for size, members in groups.items():
        stack = np.stack([m[np.ix_(idx, idx)] for idx in members])
        out.append(kernels.eigvalsh_batch(stack).reshape(-1))
    return np.sort(np.concatenate(out))[::-1]


def _clamped_spectrum(rho, tol_psd=TOL_PSD):
    lam = eigvalsh(rho)
    if lam[-1] < -tol_psd:
        raise NotPositiveError(f"eigenvalue {lam[-1]:.3e} below -{tol_psd:g}")
    return np.clip(lam, 0.0, None)


def shannon_entropy(p):
    p = np.asarray(p, dtype=float)
    p = p[p > 0.0]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(rho, check=True):
    """S(rho) = -Tr[rho ln rho] in nats, with 0 ln 0 = 0."""
    rho = check_density(rho) if check else np.asarray(rho, dtype=np.complex128)
    return shannon_entropy(_clamped_spectrum(rho))


def funm_hermitian(m, f):
    """Apply a scalar function to a Hermitian matrix through its eigenbasis."""
    w, q = eig_hermitian(m)
    return (q * f(w)) @ dag(q)


def relative_entropy(rho, sigma, tol=TOL_PSD):
    """D(rho||sigma) = Tr[rho ln rho - rho ln sigma]; +inf on support mismatch."""
    rho = check_density(rho)
    sigma = check_density(sigma)
    if rho.shape != sigma.shape:
        raise DimensionError(f"dimension mismatch {rho.shape} vs {sigma.shape}")
    ws, qs = eig_hermitian(sigma)
    ker = ws <= tol
    if np.any(ker):
        leak = np.einsum("ik,ij,jk->", qs[:, ker].conj(), rho, qs[:, ker]).real
        if leak > tol:
            return float("inf")
    log_s = np.where(ker, 0.0, np.log(np.where(ker, 1.0, ws)))
    cross = np.einsum("ik,ij,jk,k->", qs.conj(), rho, qs, log_s).real
    return float(-von_neumann_entropy(rho, check=False) - cross)


def trace_norm(m):
    m = np.asarray(m, dtype=np.complex128)
    if is_hermitian(m, 1e-12):
        return float(np.sum(np.abs(eigvalsh(m))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def trace_distance(rho, sigma):
    """Half the trace norm of the difference, from the eigenvalues of rho - sigma."""
    rho = np.asarray(rho, dtype=np.complex128)
    sigma = np.asarray(sigma, dtype=np.complex128)
    if rho.shape != sigma.shape:
        raise DimensionError(f"dimension mismatch {rho.shape} vs {sigma.shape}")
    return 0.5 * float(np.sum(np.abs(eigvalsh(rho - sigma))))


def expectation(h, rho):
    return float(np.einsum("ij,ji->", h, rho).real)
