"""Completely positive maps, their classification and their work benefit.

Maps are stored in Kraus form. ``CPMap`` is any CP map (a measurement
fragment, say); ``KrausChannel`` additionally checks trace preservation.
"""
import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import optimize, oracle, qmath, thermo
from .errors import (DimensionError, InconsistentDilationError, NotTracePreservingError)
from .io import JsonFormatError, matrix_from_json, matrix_to_json

TOL_TP = 1e-9
KRAUS_CUTOFF = 1e-12


class AccountingMode(enum.Enum):
    """Who pays for the energy change of the target.

    BATTERY_POWERED: the device draws on the same battery, so only entropy
    changes matter. INTERNAL_POWER: the device has its own supply and the
    benefit is the free-energy gain of the system.
    """
    BATTERY_POWERED = "battery"
    INTERNAL_POWER = "internal"


def _energy_weight(mode):
    return 1.0 if AccountingMode(mode) is AccountingMode.INTERNAL_POWER else 0.0


@dataclass(frozen=True, eq=False)
class CPMap:
    kraus: tuple

    def __post_init__(self):
        ops = tuple(qmath.as_matrix(k) for k in self.kraus)
        if not ops:
            raise ValueError("a CP map needs at least one Kraus operator")
        shape = ops[0].shape
        if any(k.shape != shape for k in ops):
            raise DimensionError("Kraus operators must share one shape")
        object.__setattr__(self, "kraus", ops)

    @property
    def dim_in(self):
        return self.kraus[0].shape[1]

    @property
    def dim_out(self):
        return self.kraus[0].shape[0]

    def stacked(self):
        return np.stack(self.kraus)

    def tp_defect(self):
        s = sum(qmath.dag(k) @ k for k in self.kraus)
        return float(np.max(np.abs(s - np.eye(self.dim_in))))

    def __call__(self, rho):
        return apply(self, rho)


@dataclass(frozen=True, eq=False)
class KrausChannel(CPMap):
    tol_tp: float = TOL_TP

    def __post_init__(self):
        super().__post_init__()
        if self.tp_defect() > self.tol_tp:
            raise NotTracePreservingError(f"sum K^dagger K deviates from I by {self.tp_defect():.3e}")

    def to_json(self):
        return {"dim_in": self.dim_in, "dim_out": self.dim_out,
                "kraus": [matrix_to_json(k) for k in self.kraus]}

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict) or "kraus" not in obj:
            raise JsonFormatError("channel JSON needs a 'kraus' list")
        ops = [matrix_from_json(k, f"kraus[{i}]") for i, k in enumerate(obj["kraus"])]
        if not ops:
            raise JsonFormatError("channel JSON has an empty 'kraus' list")
        for key, axis in (("dim_out", 0), ("dim_in", 1)):
            if key in obj and any(k.shape[axis] != obj[key] for k in ops):
                raise JsonFormatError(f"Kraus operator shape disagrees with {key}={obj[key]}")
        return cls(tuple(ops))


def apply(c, rho):
    """sum_k K rho K^dagger."""
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (c.dim_in, c.dim_in):
        raise DimensionError(f"state of shape {rho.shape} does not fit map with dim_in={c.dim_in}")
    ks = c.stacked()
    out = np.sum(ks @ rho @ qmath.dag(ks), axis=0)
    return 0.5 * (out + qmath.dag(out))


def compose(*maps):
    """Kraus form of maps[-1] o ... o maps[0] (applied left to right)."""
    ops = [np.eye(maps[0].dim_in, dtype=np.complex128)]
    for m in maps:
        ops = [k @ o for o in ops for k in m.kraus]
    return KrausChannel(tuple(ops))


# constructors

def identity_channel(d=2):
    return KrausChannel((np.eye(d, dtype=np.complex128),))


def unitary_channel(u):
    return KrausChannel((qmath.check_unitary(u),))


def mixed_unitary_channel(unitaries, probs):
    probs = _check_probs(probs)
    ops = tuple(np.sqrt(p) * qmath.check_unitary(u) for p, u in zip(probs, unitaries) if p > 0)
    return KrausChannel(ops)


def weyl_operators(d):
    """The d^2 clock-and-shift unitaries X^a Z^b."""
    w = np.exp(2j * np.pi / d)
    x = np.roll(np.eye(d, dtype=np.complex128), 1, axis=0)
    z = np.diag(w ** np.arange(d))
    return [np.linalg.matrix_power(x, a) @ np.linalg.matrix_power(z, b)
            for a in range(d) for b in range(d)]


def depolarizing(p, d=2):
    """rho -> (1-p) rho + p Tr[rho] I/d."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing parameter must lie in [0, 1], got {p}")
    ops = weyl_operators(d)
    probs = [1.0 - p + p / d**2] + [p / d**2] * (len(ops) - 1)
    return KrausChannel(tuple(np.sqrt(q) * u for q, u in zip(probs, ops) if q > 0))


def dephasing(p, d=2):
    """rho -> (1-p) rho + p diag(rho)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"dephasing parameter must lie in [0, 1], got {p}")
    ops = [np.sqrt(1.0 - p) * np.eye(d, dtype=np.complex128)] if p < 1.0 else []
    ops += [np.sqrt(p) * qmath.basis_projector(i, d) for i in range(d)] if p > 0.0 else []
    return KrausChannel(tuple(ops))


def reset_to_ground(d=2):
    """rho -> |0><0| Tr[rho]."""
    return KrausChannel(tuple(np.outer(qmath.ket(0, d), qmath.ket(i, d)) for i in range(d)))


def werner_holevo():
    """The d=3 channel rho -> (Tr[rho] I - rho^T)/2."""
    ops = []
    for i in range(3):
        for j in range(i + 1, 3):
            a = np.zeros((3, 3), dtype=np.complex128)
            a[i, j], a[j, i] = 1.0, -1.0
            ops.append(a / np.sqrt(2.0))
    return KrausChannel(tuple(ops))


# Choi representation

@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    matrix: np.ndarray
    dim_in: int
    dim_out: int

    def __post_init__(self):
        m = qmath.as_matrix(self.matrix)
        n = self.dim_in * self.dim_out
        if m.shape != (n, n):
            raise DimensionError(f"Choi matrix must be {n}x{n}, got {m.shape}")
        object.__setattr__(self, "matrix", m)

    def is_cp(self, tol=qmath.TOL_PSD):
        return bool(qmath.is_hermitian(self.matrix, 1e-9) and qmath.eigvalsh(self.matrix)[-1] >= -tol)

    def tp_defect(self):
        reduced = qmath.partial_trace(self.matrix, [self.dim_in, self.dim_out], [0])
        return float(np.max(np.abs(reduced.T - np.eye(self.dim_in))))

    def apply(self, rho):
        j = self.matrix.reshape(self.dim_in, self.dim_out, self.dim_in, self.dim_out)
        return np.einsum("iajb,ij->ab", j, np.asarray(rho, dtype=np.complex128))

    def to_kraus(self, cutoff=KRAUS_CUTOFF, tol_tp=TOL_TP):
        return kraus_from_choi(self, cutoff, tol_tp)


def choi_from_kraus(c):
    """J = sum_ij |i><j| (x) C[|i><j|], input factor first, unnormalized."""
    d_in, d_out = c.dim_in, c.dim_out
    ks = c.stacked()
    # J[(i,a),(j,b)] = sum_k K[a,i] conj(K[b,j])
    j = np.einsum("kai,kbj->iajb", ks, ks.conj()).reshape(d_in * d_out, d_in * d_out)
    return ChoiMatrix(j, d_in, d_out)


def kraus_from_choi(choi, cutoff=KRAUS_CUTOFF, tol_tp=TOL_TP):
    w, q = qmath.eig_hermitian(0.5 * (choi.matrix + qmath.dag(choi.matrix)))
    ops = []
    for lam, vec in zip(w, q.T):
        if lam < cutoff:
            continue
        ops.append(np.sqrt(lam) * vec.reshape(choi.dim_in, choi.dim_out).T)
    if not ops:
        raise ValueError("Choi matrix has no eigenvalue above the cutoff")
    return KrausChannel(tuple(ops), tol_tp=tol_tp)


def channel_distance(a, b):
    """Trace distance between the normalized Choi states of two channels."""
    ja = a.matrix if isinstance(a, ChoiMatrix) else choi_from_kraus(a).matrix
    jb = b.matrix if isinstance(b, ChoiMatrix) else choi_from_kraus(b).matrix
    d_in = a.dim_in
    return qmath.trace_distance(ja / d_in, jb / d_in)


# classification

def is_unital(c, tol=1e-9):
    if c.dim_in != c.dim_out:
        raise DimensionError("unitality needs dim_in == dim_out")
    mm = qmath.maximally_mixed(c.dim_in)
    return qmath.trace_norm(apply(c, mm) - mm) < tol


def is_gibbs_preserving(c, h, ctx, tol=1e-9):
    tau = thermo.thermal_state(h, ctx)
    if tau.shape != (c.dim_in, c.dim_in) or c.dim_in != c.dim_out:
        raise DimensionError("Hamiltonian and channel dimensions differ")
    return qmath.trace_norm(apply(c, tau) - tau) < tol


def apply_work(c, rho, h):
    """Average energy the target gives up: Tr[H rho] - Tr[H C[rho]]."""
    rho = qmath.check_density(rho)
    h = qmath.check_hermitian(h)
    if h.shape != rho.shape or c.dim_out != c.dim_in:
        raise DimensionError("state, Hamiltonian and channel dimensions differ")
    return qmath.expectation(h, rho) - qmath.expectation(h, apply(c, rho))


# benefits

def _square(c):
    if c.dim_in != c.dim_out:
        raise DimensionError("work benefit needs dim_in == dim_out (cyclic process)")
    return c.dim_in


def channel_objective(c, ctx, mode=AccountingMode.BATTERY_POWERED, h=None):
    d = _square(c)
    ew = _energy_weight(mode)
    if ew and h is None:
        raise ValueError("internal-power accounting needs a Hamiltonian")
    h = None if h is None else qmath.check_hermitian(h)
    return optimize.StateObjective([c.kraus], thermo.as_context(ctx).temperature, h, ew)


def entropy_gap(c, rho, ctx):
    """T (S(rho) - S(C[rho])): the benefit integrand at one state."""
    t = thermo.as_context(ctx).temperature
    return t * (qmath.von_neumann_entropy(rho) - qmath.von_neumann_entropy(apply(c, rho), check=False))


def work_benefit(c, ctx, opt_cfg=None, mode=AccountingMode.BATTERY_POWERED, h=None):
    """Maximal single-use benefit; returns an ``OptResult`` (value, state, converged, restart)."""
    return optimize.maximize(channel_objective(c, ctx, mode, h), opt_cfg)


def work_benefit_internal_power(c, h, ctx, opt_cfg=None):
    """max_rho F(C[rho]) - F(rho)."""
    return work_benefit(c, ctx, opt_cfg, AccountingMode.INTERNAL_POWER, h)


def work_benefit_oracle(c, ctx, grid_cfg=None, mode=AccountingMode.BATTERY_POWERED, h=None):
    d = _square(c)
    if d > 3:
        raise DimensionError("the grid oracle is limited to d <= 3")
    ew = _energy_weight(mode)
    t = thermo.as_context(ctx).temperature
    hh = None if h is None else qmath.check_hermitian(h)
    return oracle.search([c.stacked()], d, t, grid_cfg, hh, ew)[0]


# dilations

@dataclass(frozen=True, eq=False)
class Dilation:
    """C[rho] = Tr_z[V (rho (x) rho_z) V^dagger], target factor first; H_z = 0."""
    V: np.ndarray
    rho_z: np.ndarray
    dims: tuple

    def __post_init__(self):
        d_t, d_z = (int(x) for x in self.dims)
        v = qmath.check_unitary(self.V)
        if v.shape != (d_t * d_z, d_t * d_z):
            raise DimensionError(f"V has shape {v.shape}, expected {(d_t * d_z,) * 2}")
        rz = qmath.check_density(self.rho_z)
        if rz.shape != (d_z, d_z):
            raise DimensionError("rho_z does not match d_z")
        object.__setattr__(self, "V", v)
        object.__setattr__(self, "rho_z", rz)
        object.__setattr__(self, "dims", (d_t, d_z))

    def joint_output(self, rho_t):
        return self.V @ qmath.tensor(rho_t, self.rho_z) @ qmath.dag(self.V)

    def apply(self, rho_t):
        return qmath.partial_trace(self.joint_output(rho_t), self.dims, [0])

    def ancilla_output(self, rho_t):
        return qmath.partial_trace(self.joint_output(rho_t), self.dims, [1])

    def channel(self):
        d_t, d_z = self.dims
        w, q = qmath.eig_hermitian(self.rho_z)
        v = self.V.reshape(d_t, d_z, d_t, d_z)
        ops = []
        for r, vec in zip(w, q.T):
            if r <= KRAUS_CUTOFF:
                continue
            # K_{n,m} = sqrt(r_m) <n|V|m>
            vm = np.einsum("aibj,j->aib", v, vec)
            for n in range(d_z):
                ops.append(np.sqrt(r) * vm[:, n, :])
        return KrausChannel(tuple(ops))


def _mutually_orthogonal(ops, tol=1e-12):
    for a in range(len(ops)):
        for b in range(a + 1, len(ops)):
            if np.max(np.abs(qmath.dag(ops[a]) @ ops[b])) > tol:
                return False
    return True


def stinespring_unitary(ops, d_z=None):
    """Unitary V with V(|psi> (x) |0>) = sum_k K_k|psi> (x) |k>.

    If the operators have mutually orthogonal ranges, V is the controlled
    shift sum_k K_k (x) S^k, which needs no completion; otherwise the
    isometry is completed by a QR factorisation.
    """
    ops = [np.asarray(k, dtype=np.complex128) for k in ops]
    d = ops[0].shape[0]
    n = len(ops)
    d_z = n if d_z is None else int(d_z)
    if d_z < n:
        raise DimensionError(f"ancilla dimension {d_z} is below the Kraus count {n}")
    ops = ops + [np.zeros((d, d), dtype=np.complex128)] * (d_z - n)
    if _mutually_orthogonal(ops):
        shift = np.roll(np.eye(d_z, dtype=np.complex128), 1, axis=0)
        v = sum(qmath.tensor(k, np.linalg.matrix_power(shift, i)) for i, k in enumerate(ops))
        return v
    w = np.zeros((d * d_z, d), dtype=np.complex128)
    for k, op in enumerate(ops):
        w[k::d_z, :] = op
    q, _ = np.linalg.qr(w, mode="complete")
    complement = q[:, d:]
    v = np.zeros((d * d_z, d * d_z), dtype=np.complex128)
    col = 0
    for b in range(d):
        v[:, b * d_z] = w[:, b]
        for m in range(1, d_z):
            v[:, b * d_z + m] = complement[:, col]
            col += 1
    return v


def dilate(c, d_z=None):
    d_t = _square(c)
    v = stinespring_unitary(c.kraus, d_z)
    dz = v.shape[0] // d_t
    return Dilation(v, qmath.basis_projector(0, dz), (d_t, dz))


def reset_inequality_check(c, dil, rho_t, ctx, tol=1e-9):
    """Benefit at rho_t plus the cost of resetting the ancilla.

    Returns ``(lhs, holds)`` with lhs = T(S(rho_t) - S(C[rho_t])) - T (S(rho_z') - S(rho_z)).
    """
    t = thermo.as_context(ctx).temperature
    rho_t = qmath.check_density(rho_t)
    joint = dil.joint_output(rho_t)
    out_t = qmath.partial_trace(joint, dil.dims, [0])
    if qmath.trace_distance(out_t, apply(c, rho_t)) > 1e-9:
        raise InconsistentDilationError("dilation does not implement the channel on this state")
    out_z = qmath.partial_trace(joint, dil.dims, [1])
    s = qmath.von_neumann_entropy
    lhs = t * (s(rho_t, False) - s(out_t, False)) - t * (s(out_z, False) - s(dil.rho_z, False))
    return float(lhs), bool(lhs <= tol)


@dataclass(frozen=True)
class IterConfig:
    alpha: float = 0.5
    tol: float = 1e-9
    max_iter: int = 10_000


def catalytic_fixed_point(v, rho_t, d_z, iter_cfg=None, start=None) -> Optional[np.ndarray]:
    """Search for an ancilla state left unchanged by V for every given target state.

    ``rho_t`` may be one state or a sequence of them. Returns None when the
    damped iteration does not settle; that is inconclusive, not a proof.
    """
    cfg = iter_cfg or IterConfig()
    v = qmath.check_unitary(v)
    probes = [rho_t] if np.ndim(rho_t) == 2 else list(rho_t)
    probes = [qmath.check_density(p) for p in probes]
    d_t = probes[0].shape[0]
    dims = (d_t, int(d_z))
    if v.shape[0] != d_t * d_z:
        raise DimensionError("V does not act on d_t * d_z")
    vd = qmath.dag(v)

    def phi(sig, p):
        return qmath.partial_trace(v @ qmath.tensor(p, sig) @ vd, dims, [1])

    sigma = qmath.maximally_mixed(d_z) if start is None else qmath.check_density(start)
    for _ in range(cfg.max_iter):
        images = [phi(sigma, p) for p in probes]
        if max(qmath.trace_norm(im - sigma) for im in images) < cfg.tol:
            return sigma
        target = sum(images) / len(images)
        sigma = (1.0 - cfg.alpha) * sigma + cfg.alpha * target
        sigma = 0.5 * (sigma + qmath.dag(sigma))
    return None


def _check_probs(probs):
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("probabilities must be non-negative and sum to 1")
    return p


def mixed_unitary_catalytic(unitaries: Sequence, probs) -> Dilation:
    """V = sum_i U_i (x) |i><i| with rho_z = sum_i p_i |i><i|."""
    p = _check_probs(probs)
    us = [qmath.check_unitary(u) for u in unitaries]
    if len(us) != p.size:
        raise ValueError("one probability per unitary is required")
    d_t, d_z = us[0].shape[0], len(us)
    v = sum(qmath.tensor(u, qmath.basis_projector(i, d_z)) for i, u in enumerate(us))
    return Dilation(v, np.diag(p).astype(np.complex128), (d_t, d_z))
