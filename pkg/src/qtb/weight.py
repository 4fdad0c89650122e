"""Explicit battery: a weight with position x, Hamiltonian H_w = x.

A unitary V on target (x) device is made energy conserving by translating
the weight by the energy the target loses. The weight then enters every
quantity only through two kernels of its wavefunction psi:

    overlap(A, B)  = int psi(x - A) conj(psi(x - B)) dx
    x_moment(A, B) = int x psi(x - A) conj(psi(x - B)) dx

so no position grid ever appears inside the unitary. Energy units equal
length units (mg = 1) and hbar = 1.
"""
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special

from . import qmath, thermo
from .channels import ChoiMatrix, Dilation, KRAUS_CUTOFF, choi_from_kraus
from .errors import DimensionError, ProbabilityFloorError, ResolutionError
from .measure import P_FLOOR

ORACLE_POINTS_PER_L = 10_000


class WeightState:
    """Base class; subclasses define the wavefunction and its support."""

    L: float

    def wavefunction(self, x):
        raise NotImplementedError

    def support(self):
        raise NotImplementedError

    def mean_position(self):
        return 0.0


@dataclass(frozen=True)
class TopHat(WeightState):
    """psi = 1/sqrt(2L) on [-L, L]."""
    L: float

    def __post_init__(self):
        _check_width(self.L)

    def wavefunction(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= self.L, 1.0 / np.sqrt(2.0 * self.L), 0.0)

    def support(self):
        return -self.L, self.L


@dataclass(frozen=True)
class Triangular(WeightState):
    """psi = sqrt(3/L^3) (x + 3L/4) on [-3L/4, L/4]; normalized with zero mean."""
    L: float

    def __post_init__(self):
        _check_width(self.L)

    @property
    def x0(self):
        return -0.75 * self.L

    def wavefunction(self, x):
        x = np.asarray(x, dtype=float)
        k = np.sqrt(3.0 / self.L**3)
        inside = (x >= self.x0) & (x <= self.x0 + self.L)
        return np.where(inside, k * (x - self.x0), 0.0)

    def support(self):
        return self.x0, self.x0 + self.L


@dataclass(frozen=True)
class Sampled(WeightState):
    """Wavefunction given on a uniform grid, linearly interpolated, zero outside.

    ``L`` is the nominal width used for resolution checks and reporting.
    """
    x: np.ndarray
    psi: np.ndarray
    L: float
    _mean: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        psi = np.asarray(self.psi, dtype=np.complex128)
        if x.ndim != 1 or x.shape != psi.shape or x.size < 3:
            raise DimensionError("grid and amplitudes must be 1-D arrays of equal length >= 3")
        dx = np.diff(x)
        if np.any(dx <= 0) or np.ptp(dx) > 1e-9 * dx[0]:
            raise ValueError("sampled weight needs a uniform increasing grid")
        _check_width(self.L)
        norm = _simpson(np.abs(psi) ** 2, x)
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"sampled wavefunction has norm {norm:.8f}, expected 1")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "_mean", float(_simpson(x * np.abs(psi) ** 2, x)))

    @classmethod
    def from_function(cls, f, lo, hi, n, L):
        x = np.linspace(lo, hi, n)
        psi = np.asarray(f(x), dtype=np.complex128)
        psi = psi / np.sqrt(_simpson(np.abs(psi) ** 2, x))
        return cls(x, psi, L)

    @classmethod
    def gaussian(cls, L, n=20_001, span=10.0):
        """Gaussian |psi|^2 of standard deviation L."""
        return cls.from_function(lambda x: np.exp(-x**2 / (4.0 * L**2)), -span * L, span * L, n, L)

    @property
    def dx(self):
        return float(self.x[1] - self.x[0])

    def wavefunction(self, x):
        x = np.asarray(x, dtype=float)
        re = np.interp(x, self.x, self.psi.real, left=0.0, right=0.0)
        im = np.interp(x, self.x, self.psi.imag, left=0.0, right=0.0)
        return re + 1j * im

    def support(self):
        return float(self.x[0]), float(self.x[-1])

    def mean_position(self):
        return self._mean


def _check_width(L):
    if not np.isfinite(L) or L <= 0:
        raise ValueError(f"weight width L must be positive, got {L!r}")


def _simpson(y, x):
    return integrate.simpson(y, x=x)


@dataclass(frozen=True)
class WeightKernel:
    overlap: Callable
    x_moment: Callable


# closed forms

def tophat_overlap(a, b, L):
    return np.maximum(0.0, 1.0 - np.abs(a - b) / (2.0 * L))


def tophat_x_moment(a, b, L):
    """(1/4L)[(min + L)^2 - (max - L)^2] on the overlapping support, else 0."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    gap = np.abs(a - b)
    val = 0.5 * (a + b) - (a + b) * gap / (4.0 * L)
    return np.where(gap < 2.0 * L, val, 0.0)


def triangular_overlap(a, b, L):
    gap = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    ell = np.maximum(L - gap, 0.0)
    k2 = 3.0 / L**3
    return k2 * (ell**3 / 3.0 + gap * ell**2 / 2.0)


def triangular_x_moment(a, b, L):
    """Exact finite-L first moment of the shifted triangular pair."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    gap = np.abs(a - b)
    top = np.maximum(a, b)
    ell = np.maximum(L - gap, 0.0)
    k2 = 3.0 / L**3
    x0 = -0.75 * L
    ov = k2 * (ell**3 / 3.0 + gap * ell**2 / 2.0)
    return (x0 + top) * ov + k2 * (ell**4 / 4.0 + gap * ell**3 / 3.0)


def triangular_x_moment_truncated(a, b):
    """Large-L form with the O(1/L) terms dropped: (A+B)/2 - 3|A-B|/8."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return 0.5 * (a + b) - 0.375 * np.abs(a - b)


def _sampled_pair(w, a, b, moment):
    lo, hi = w.support()
    start, stop = max(lo + a, lo + b), min(hi + a, hi + b)
    if stop <= start:
        return 0.0
    n = max(3, int(np.ceil((stop - start) / w.dx)) + 1)
    n += (n + 1) % 2
    x = np.linspace(start, stop, n)
    f = w.wavefunction(x - a) * np.conj(w.wavefunction(x - b))
    if moment:
        f = x * f
    return complex(_simpson(f, x))


def kernel(w):
    if isinstance(w, TopHat):
        return WeightKernel(lambda a, b: tophat_overlap(a, b, w.L),
                            lambda a, b: tophat_x_moment(a, b, w.L))
    if isinstance(w, Triangular):
        return WeightKernel(lambda a, b: triangular_overlap(a, b, w.L),
                            lambda a, b: triangular_x_moment(a, b, w.L))
    if isinstance(w, Sampled):
        ov = np.vectorize(lambda a, b: _sampled_pair(w, a, b, False), otypes=[np.complex128])
        xm = np.vectorize(lambda a, b: _sampled_pair(w, a, b, True), otypes=[np.complex128])
        return WeightKernel(ov, xm)
    raise TypeError(f"unknown weight state {type(w).__name__}")


def quadrature_oracle(w, a, b, dx=None):
    """(overlap, x_moment) by composite Simpson on a raster of the wavefunction.

    The raster spacing must not exceed L/10^4; analytic families are
    integrated over the exact intersection of the shifted supports, where
    the integrand is smooth. Halving the spacing is repeated until two
    successive estimates agree to 1e-9 relative.
    """
    max_dx = w.L / ORACLE_POINTS_PER_L
    if isinstance(w, Sampled):
        if w.dx > max_dx * (1 + 1e-12):
            raise ResolutionError(f"sampled grid spacing {w.dx:g} exceeds L/10^4 = {max_dx:g}")
        return _sampled_pair(w, a, b, False), _sampled_pair(w, a, b, True)
    dx = max_dx if dx is None else float(dx)
    if dx > max_dx * (1 + 1e-12):
        raise ResolutionError(f"raster spacing {dx:g} exceeds L/10^4 = {max_dx:g}")
    lo, hi = w.support()
    start, stop = max(lo + a, lo + b), min(hi + a, hi + b)
    if stop <= start:
        return 0.0, 0.0

    def estimate(h):
        n = max(3, int(np.ceil((stop - start) / h)) + 1)
        n += (n + 1) % 2
        x = np.linspace(start, stop, n)
        f = w.wavefunction(x - a) * np.conj(w.wavefunction(x - b))
        return np.array([_simpson(f, x), _simpson(x * f, x)])

    h = dx
    prev = estimate(h)
    for _ in range(8):
        h *= 0.5
        cur = estimate(h)
        if np.all(np.abs(cur - prev) <= 1e-9 * np.maximum(np.abs(cur), 1e-300)):
            break
        prev = cur
    ov, xm = cur
    return float(np.real(ov)), float(np.real(xm))


# momentum distribution

def _tophat_mass(eps, L):
    u = eps * L
    return (2.0 / np.pi) * (special.sici(2.0 * u)[0] - np.sin(u) ** 2 / u)


def _triangular_density_u(u):
    """Momentum density of the triangular state in the variable u = pL (per unit u)."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < 1e-2
    us = np.where(small, 1.0, u)
    num = np.abs(np.exp(-1j * us) * (1.0 + 1j * us) - 1.0) ** 2
    big = 3.0 * num / (2.0 * np.pi * us**4)
    # series of |e^{-iu}(1+iu) - 1|^2 / u^4 = 1/4 - u^2/36 + ...
    ser = 3.0 * (0.25 - u**2 / 36.0 + u**4 / 960.0) / (2.0 * np.pi)
    return np.where(small, ser, big)


def _triangular_tail(a):
    """int_a^inf of the triangular density in u, with the oscillating parts done by Fourier quadrature.

    Uses |e^{-iu}(1+iu) - 1|^2 = 2 + u^2 - 2 cos u - 2 u sin u.
    """
    cos_part, _ = integrate.quad(lambda u: u**-4, a, np.inf, weight="cos", wvar=1.0)
    sin_part, _ = integrate.quad(lambda u: u**-3, a, np.inf, weight="sin", wvar=1.0)
    return 3.0 / (2.0 * np.pi) * (2.0 / (3.0 * a**3) + 1.0 / a - 2.0 * cos_part - 2.0 * sin_part)


def momentum_density(w, p):
    """mu(p) = |psi_hat(p)|^2 with psi_hat(p) = (2 pi)^{-1/2} int psi(x) e^{-ipx} dx."""
    p = np.asarray(p, dtype=float)
    if isinstance(w, TopHat):
        u = p * w.L
        us = np.where(u == 0.0, 1.0, u)
        return np.where(u == 0.0, w.L / np.pi, np.sin(us) ** 2 / (np.pi * w.L * (us / w.L) ** 2))
    if isinstance(w, Triangular):
        return w.L * _triangular_density_u(p * w.L)
    if isinstance(w, Sampled):
        amp = np.exp(-1j * np.outer(p.ravel(), w.x)) @ (w.psi * _simpson_weights(w.x))
        return (np.abs(amp) ** 2 / (2.0 * np.pi)).reshape(p.shape)
    raise TypeError(f"unknown weight state {type(w).__name__}")


def _simpson_weights(x):
    n = x.size
    h = x[1] - x[0]
    if n % 2 == 1:
        wts = np.ones(n)
        wts[1:-1:2] = 4.0
        wts[2:-1:2] = 2.0
        return wts * h / 3.0
    wts = np.full(n, h)
    wts[0] = wts[-1] = 0.5 * h
    return wts


def momentum_concentration(w, eps):
    """delta = 1 - int_{-eps}^{eps} mu(p) dp."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if isinstance(w, TopHat):
        return float(1.0 - _tophat_mass(eps, w.L))
    if isinstance(w, Triangular):
        edge = eps * w.L
        if edge <= 50.0:
            mass, _ = integrate.quad(_triangular_density_u, 0.0, edge, limit=200)
            return float(1.0 - 2.0 * mass)
        return float(2.0 * _triangular_tail(edge))
    n = 4001
    p = np.linspace(-eps, eps, n)
    return float(1.0 - _simpson(momentum_density(w, p), p))


def tophat_delta_bound(L, c=1.0):
    """Analytic tail bound 2/(pi c sqrt(L)) for eps = c/sqrt(L)."""
    return 2.0 / (np.pi * c * np.sqrt(L))


# explicit channels

def _energy_frame(h_t):
    h_t = qmath.check_hermitian(h_t)
    e, q = qmath.eig_hermitian(h_t)
    return e, q


def _dilation_kraus(dil, projector=None):
    """Kraus operators sqrt(r_m) <n|V|m> of the dilation, optionally restricted
    to the ancilla range of a projector."""
    d_t, d_z = dil.dims
    r, rq = qmath.eig_hermitian(dil.rho_z)
    v = dil.V.reshape(d_t, d_z, d_t, d_z)
    if projector is None:
        outs = np.eye(d_z, dtype=np.complex128)
    else:
        pw, pv = qmath.eig_hermitian(projector)
        outs = pv[:, pw > 0.5]
    ops = []
    for rm, vec in zip(r, rq.T):
        if rm <= KRAUS_CUTOFF:
            continue
        vm = np.einsum("aibj,j->aib", v, vec)
        for n in range(outs.shape[1]):
            ops.append(np.sqrt(rm) * np.einsum("aib,i->ab", vm, outs[:, n].conj()))
    return ops


def _shift_grid(e):
    # s[a, b] = E_b - E_a: the weight shift attached to |a><b|
    return e[None, :] - e[:, None]


def explicit_channel(dil, h_t, w):
    """Choi matrix of the channel implemented with the weight in state w.

    In the energy basis of h_t the Choi matrix is the implicit one with each
    entry [(i,a),(j,b)] multiplied by overlap(E_i - E_a, E_j - E_b). The
    result is returned in the original basis.
    """
    e, q = _energy_frame(h_t)
    d = e.size
    if dil.dims[0] != d:
        raise DimensionError("dilation and Hamiltonian dimensions differ")
    qd = qmath.dag(q)
    ops = [qd @ k @ q for k in _dilation_kraus(dil)]
    ks = np.stack(ops)
    implicit = np.einsum("kai,kbj->iajb", ks, ks.conj())
    s = _shift_grid(e).T  # s[i, a] = E_i - E_a
    kern = kernel(w)
    omega = kern.overlap(s[:, :, None, None], s[None, None, :, :])
    j_energy = (implicit * omega).reshape(d * d, d * d)
    frame = np.kron(q.conj(), q)
    return ChoiMatrix(frame @ j_energy @ qmath.dag(frame), d, d)


def implicit_choi(dil):
    from .channels import KrausChannel
    return choi_from_kraus(KrausChannel(tuple(_dilation_kraus(dil))))


def explicit_vs_implicit_distance(dil, h_t, w):
    """Trace distance between the normalized Choi states of the two channels."""
    d = dil.dims[0]
    je = explicit_channel(dil, h_t, w).matrix
    ji = implicit_choi(dil).matrix
    return qmath.trace_distance(je / d, ji / d)


def _explicit_outcome(ops, rho_e, e, kern):
    """(p, sum of x-moments) for one outcome's Kraus operators in the energy frame."""
    ks = np.stack(ops)
    s = _shift_grid(e)
    a_arg = s[:, :, None]          # E_b - E_a on axes (a, b, .)
    b_arg = s[:, None, :]          # E_c - E_a on axes (a, ., c)
    ov = kern.overlap(a_arg, b_arg)
    xm = kern.x_moment(a_arg, b_arg)
    # sum_k K_ab rho_bc conj(K_ac)
    t = np.einsum("kab,bc,kac->abc", ks, rho_e, ks.conj())
    return float(np.real(np.sum(t * ov))), float(np.real(np.sum(t * xm)))


def explicit_outcomes(dil, projectors, rho_t, h_t, w):
    """Per outcome: (p_i, conditional apply work, post-measurement target state)."""
    rho_t = qmath.check_density(rho_t)
    e, q = _energy_frame(h_t)
    if rho_t.shape[0] != e.size or dil.dims[0] != e.size:
        raise DimensionError("state, Hamiltonian and dilation dimensions differ")
    qd = qmath.dag(q)
    rho_e = qd @ rho_t @ q
    kern = kernel(w)
    x0 = w.mean_position()
    s = _shift_grid(e)
    ovl = kern.overlap(s[:, :, None, None], s[None, None, :, :])  # [a,b,d,c] -> (E_b-E_a, E_c-E_d)
    out = []
    for pi in projectors:
        ops = [qd @ k @ q for k in _dilation_kraus(dil, pi)]
        p, xsum = _explicit_outcome(ops, rho_e, e, kern)
        ks = np.stack(ops)
        # output_ad = sum K_ab rho_bc conj(K_dc) overlap(E_b - E_a, E_c - E_d)
        post = np.einsum("kab,bc,kdc,abdc->ad", ks, rho_e, ks.conj(), ovl)
        post = q @ post @ qd
        if p > P_FLOOR:
            out.append((p, xsum / p - x0, 0.5 * (post + qmath.dag(post)) / p))
        else:
            out.append((p, None, None))
    return out


def conditional_apply_work_explicit(dil, projectors, rho_t, h_t, w, i):
    """Mean weight displacement given outcome i, with the weight simulated via its kernels."""
    p, work, _ = explicit_outcomes(dil, projectors, rho_t, h_t, w)[i]
    if p <= P_FLOOR:
        raise ProbabilityFloorError(f"outcome {i} has probability {p:.3e} <= {P_FLOOR:g}")
    return work


def conditional_total_work_explicit(dil, projectors, rho_t, h_t, w, ctx, i):
    """Explicit conditional apply work plus the free-energy drop F(sigma_i) - F(rho_t)."""
    p, work, post = explicit_outcomes(dil, projectors, rho_t, h_t, w)[i]
    if p <= P_FLOOR:
        raise ProbabilityFloorError(f"outcome {i} has probability {p:.3e} <= {P_FLOOR:g}")
    return work + thermo.free_energy(post, h_t, ctx) - thermo.free_energy(rho_t, h_t, ctx)


def coherence_correction(m_i, rho_t, h_t, p_i):
    """-(3 / (8 p_i)) sum_{bc} (M_i)_{cb} |E_b - E_c| <b|rho|c>, in the energy basis."""
    e, q = _energy_frame(h_t)
    qd = qmath.dag(q)
    m_e = qd @ m_i @ q
    rho_e = qd @ rho_t @ q
    gap = np.abs(e[:, None] - e[None, :])
    return float(-(3.0 / (8.0 * p_i)) * np.real(np.sum(m_e.T * gap * rho_e)))


# explicit protocol unitary

@dataclass
class ExplicitProtocol:
    """rho' = sum_k w_k U(p_k) rho U(p_k)^dagger, U(p) = sum U_ij e^{-i(E_j - E_i)p}|i><j|."""
    U: np.ndarray
    energies: np.ndarray
    frame: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray

    def dephasing_factor(self, omega):
        """G(omega) = sum_k w_k exp(-i omega p_k)."""
        omega = np.asarray(omega, dtype=float)
        flat = omega.ravel()
        g = np.exp(-1j * np.outer(flat, self.nodes)) @ self.weights
        return g.reshape(omega.shape)

    def apply(self, rho):
        rho = np.asarray(rho, dtype=np.complex128)
        fd = qmath.dag(self.frame)
        r = fd @ rho @ self.frame
        u = fd @ self.U @ self.frame
        e = self.energies
        # phase exponent for U_ij rho_jl conj(U_kl): (E_j - E_i) - (E_l - E_k)
        om = (e[None, :, None, None] - e[:, None, None, None]) - (e[None, None, None, :] - e[None, None, :, None])
        g = self.dephasing_factor(om)
        out = np.einsum("ij,jl,kl,ijkl->ik", u, r, u.conj(), g)
        out = self.frame @ out @ fd
        return 0.5 * (out + qmath.dag(out))

    def implicit(self, rho):
        return self.U @ rho @ qmath.dag(self.U)


def momentum_quadrature(w, n_nodes=40_001, u_max=4_000.0):
    """Positive Simpson weights for mu(p) on p = u/L, |u| <= u_max, normalized to one."""
    n_nodes += (n_nodes + 1) % 2
    u = np.linspace(-u_max, u_max, n_nodes)
    p = u / w.L
    wts = _simpson_weights(p) * momentum_density(w, p)
    wts = np.clip(wts, 0.0, None)
    return p, wts / wts.sum()


def explicit_protocol_unitary(u, h_sb, w, n_nodes=40_001, u_max=4_000.0):
    u = qmath.check_unitary(u)
    e, q = _energy_frame(h_sb)
    if u.shape[0] != e.size:
        raise DimensionError("unitary and Hamiltonian dimensions differ")
    nodes, wts = momentum_quadrature(w, n_nodes, u_max)
    return ExplicitProtocol(u, e, q, nodes, wts)


def protocol_distance_bound(w, eps, h_sb):
    """delta + 2 eps ||H||: first-order tail-plus-window bound on the trace distance."""
    norm = float(np.max(np.abs(qmath.eigvalsh(h_sb))))
    return momentum_concentration(w, eps) + 2.0 * eps * norm
