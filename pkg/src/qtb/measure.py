"""Measurements as outcome-indexed CP maps, and their work benefits.

Outcome i is a ``CPMap`` C_i; the fragments sum to a channel. When a
measurement acts on a target that is part of a larger system, the
fragments act as C_i (x) id on the target factor (the left one).
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import optimize, oracle, qmath, thermo
from .channels import (CPMap, Dilation, KrausChannel, TOL_TP, AccountingMode, _energy_weight,
                       stinespring_unitary)
from .errors import DimensionError, NotTracePreservingError, ProbabilityFloorError
from .io import JsonFormatError, matrix_from_json, matrix_to_json

P_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class Measurement:
    outcomes: tuple
    tol_tp: float = TOL_TP

    def __post_init__(self):
        outs = tuple(o if isinstance(o, CPMap) else CPMap(tuple(o)) for o in self.outcomes)
        if not outs:
            raise ValueError("a measurement needs at least one outcome")
        d = outs[0].dim_in
        if any(o.dim_in != d or o.dim_out != d for o in outs):
            raise DimensionError("all outcome maps must act on one square space")
        total = sum(qmath.dag(k) @ k for o in outs for k in o.kraus)
        defect = float(np.max(np.abs(total - np.eye(d))))
        if defect > self.tol_tp:
            raise NotTracePreservingError(f"outcome maps sum to a non-TP map (defect {defect:.3e})")
        object.__setattr__(self, "outcomes", outs)

    @classmethod
    def from_kraus(cls, groups):
        return cls(tuple(CPMap(tuple(g)) for g in groups))

    @property
    def dim(self):
        return self.outcomes[0].dim_in

    def __len__(self):
        return len(self.outcomes)

    def kraus_groups(self):
        return [o.kraus for o in self.outcomes]

    def to_json(self):
        return {"dim": self.dim,
                "outcomes": [{"kraus": [matrix_to_json(k) for k in o.kraus]} for o in self.outcomes]}

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict) or not isinstance(obj.get("outcomes"), list):
            raise JsonFormatError("measurement JSON needs an 'outcomes' list")
        groups = []
        for i, out in enumerate(obj["outcomes"]):
            if not isinstance(out, dict) or not isinstance(out.get("kraus"), list) or not out["kraus"]:
                raise JsonFormatError(f"outcome {i} needs a non-empty 'kraus' list")
            groups.append([matrix_from_json(k, f"outcomes[{i}].kraus[{j}]") for j, k in enumerate(out["kraus"])])
        m = cls.from_kraus(groups)
        if "dim" in obj and obj["dim"] != m.dim:
            raise JsonFormatError(f"'dim'={obj['dim']} disagrees with Kraus shape {m.dim}")
        return m


def basis_measurement(d):
    """Projective measurement in the computational basis."""
    return Measurement.from_kraus([(qmath.basis_projector(i, d),) for i in range(d)])


def trivial_measurement(channel):
    return Measurement.from_kraus([channel.kraus])


def forgetting_channel(m):
    return KrausChannel(tuple(k for o in m.outcomes for k in o.kraus))


def povm_elements(m):
    return [sum(qmath.dag(k) @ k for k in o.kraus) for o in m.outcomes]


def _lift(kraus, d_a):
    if d_a == 1:
        return kraus
    eye = np.eye(d_a, dtype=np.complex128)
    return tuple(np.kron(k, eye) for k in kraus)


def _apply_fragment(kraus, rho):
    ks = np.stack(kraus)
    out = np.sum(ks @ rho @ qmath.dag(ks), axis=0)
    return 0.5 * (out + qmath.dag(out))


@dataclass
class OutcomeRecord:
    index: int
    probability: float
    post_state: Optional[np.ndarray]


def outcome_records(m, rho, d_a=1):
    """Probabilities and normalized post-measurement states, one per outcome.

    Outcomes with p <= P_FLOOR carry ``post_state=None``.
    """
    rho = qmath.check_density(rho)
    if rho.shape[0] != m.dim * d_a:
        raise DimensionError(f"state dimension {rho.shape[0]} != {m.dim} x {d_a}")
    recs = []
    for i, o in enumerate(m.outcomes):
        x = _apply_fragment(_lift(o.kraus, d_a), rho)
        p = float(np.trace(x).real)
        recs.append(OutcomeRecord(i, p, x / p if p > P_FLOOR else None))
    return recs


def apply_work_measurement(m, rho, h):
    """Average energy given up by the target, Tr[H rho] - Tr[H C[rho]] with C the summed map."""
    rho = qmath.check_density(rho)
    h = qmath.check_hermitian(h)
    if rho.shape != (m.dim, m.dim) or h.shape != rho.shape:
        raise DimensionError("state, Hamiltonian and measurement dimensions differ")
    out = sum(_apply_fragment(o.kraus, rho) for o in m.outcomes)
    return qmath.expectation(h, rho) - qmath.expectation(h, out)


def _outcome_probability(m, rho, i):
    p = float(np.trace(_apply_fragment(m.outcomes[i].kraus, rho)).real)
    if p <= P_FLOOR:
        raise ProbabilityFloorError(f"outcome {i} has probability {p:.3e} <= {P_FLOOR:g}")
    return p


def conditional_apply_work(m, rho, h, i):
    """(1/p_i) Tr[C_i[(H rho + rho H)/2] - H C_i[rho]], the broad top-hat limit."""
    rho = qmath.check_density(rho)
    h = qmath.check_hermitian(h)
    if rho.shape != (m.dim, m.dim) or h.shape != rho.shape:
        raise DimensionError("state, Hamiltonian and measurement dimensions differ")
    p = _outcome_probability(m, rho, i)
    kraus = m.outcomes[i].kraus
    sym = 0.5 * (h @ rho + rho @ h)
    ks = np.stack(kraus)
    anti = np.einsum("kij,jl,kil->", ks, sym, ks.conj())
    post = _apply_fragment(kraus, rho)
    return float((anti - np.einsum("ij,ji->", h, post)).real / p)


def conditional_total_work(m, rho_s, dims, h_t, h_a, ctx, i, mode=AccountingMode.BATTERY_POWERED):
    """Total work given outcome i when the measured target is part of rho_s.

    Battery-powered accounting adds the conditional apply work to the
    free-energy drop F(sigma_{s,i}) - F(rho_s) of the reset; with an
    internal power supply only the free-energy drop counts.
    """
    d_t, d_a = (int(x) for x in dims)
    t = thermo.as_context(ctx).temperature
    rho_s = qmath.check_density(rho_s)
    if rho_s.shape[0] != d_t * d_a or d_t != m.dim:
        raise DimensionError(f"rho_s of dimension {rho_s.shape[0]} does not split as {d_t} x {d_a}")
    h_t = qmath.check_hermitian(h_t)
    h_a = np.zeros((d_a, d_a), dtype=np.complex128) if h_a is None else qmath.check_hermitian(h_a)
    kraus = _lift(m.outcomes[i].kraus, d_a)
    x = _apply_fragment(kraus, rho_s)
    p = float(np.trace(x).real)
    if p <= P_FLOOR:
        raise ProbabilityFloorError(f"outcome {i} has probability {p:.3e} <= {P_FLOOR:g}")
    sigma = x / p
    rho_t = qmath.partial_trace(rho_s, [d_t, d_a], [0])
    rho_a = qmath.partial_trace(rho_s, [d_t, d_a], [1])
    sigma_t = qmath.partial_trace(sigma, [d_t, d_a], [0])
    sigma_a = qmath.partial_trace(sigma, [d_t, d_a], [1])
    ds = qmath.von_neumann_entropy(rho_s, check=False) - qmath.von_neumann_entropy(sigma, check=False)
    reset = (qmath.expectation(h_t, sigma_t) - qmath.expectation(h_t, rho_t)
             + qmath.expectation(h_a, sigma_a) - qmath.expectation(h_a, rho_a) + t * ds)
    if AccountingMode(mode) is AccountingMode.INTERNAL_POWER:
        return float(reset)
    # anticommutator term on the target marginal
    sym = 0.5 * (h_t @ rho_t + rho_t @ h_t)
    ks = np.stack(m.outcomes[i].kraus)
    anti = np.einsum("kij,jl,kil->", ks, sym, ks.conj()).real / p
    return float(anti - qmath.expectation(h_t, rho_t)
                 + qmath.expectation(h_a, sigma_a) - qmath.expectation(h_a, rho_a) + t * ds)


def entropy_gap(m, rho_s, ctx, d_a=1):
    """T (S(rho_s) - sum_i p_i S(sigma_{s,i})): the benefit integrand at one state."""
    t = thermo.as_context(ctx).temperature
    recs = outcome_records(m, rho_s, d_a)
    avg = sum(r.probability * qmath.von_neumann_entropy(r.post_state, check=False)
              for r in recs if r.post_state is not None)
    return t * (qmath.von_neumann_entropy(rho_s, check=False) - avg)


def measurement_objective(m, ctx, mode=AccountingMode.BATTERY_POWERED, h=None):
    ew = _energy_weight(mode)
    if ew and h is None:
        raise ValueError("internal-power accounting needs a Hamiltonian")
    h = None if h is None else qmath.check_hermitian(h)
    return optimize.StateObjective(m.kraus_groups(), thermo.as_context(ctx).temperature, h, ew)


def work_benefit_measurement(m, ctx, opt_cfg=None, mode=AccountingMode.BATTERY_POWERED, h=None):
    """max_rho T (S(rho) - sum_i p_i S(sigma_i)); returns an ``OptResult``."""
    return optimize.maximize(measurement_objective(m, ctx, mode, h), opt_cfg)


def work_benefit_measurement_oracle(m, ctx, grid_cfg=None):
    if m.dim > 3:
        raise DimensionError("the grid oracle is limited to d <= 3")
    return oracle.search(m.kraus_groups(), m.dim, thermo.as_context(ctx).temperature, grid_cfg)[0]


def larger_system_inequality_check(m, rho_s, dims, tol=1e-9):
    """Entropy drop on target+ancilla versus on the target alone.

    Returns ``(lhs, rhs, holds)`` with lhs = S(rho_s) - sum p_i S(sigma_{s,i}),
    rhs = S(rho_t) - sum p_i S(sigma_{t,i}) and holds = lhs <= rhs + tol.
    """
    d_t, d_a = (int(x) for x in dims)
    rho_s = qmath.check_density(rho_s)
    if rho_s.shape[0] != d_t * d_a or d_t != m.dim:
        raise DimensionError(f"rho_s of dimension {rho_s.shape[0]} does not split as {d_t} x {d_a}")
    s = lambda r: qmath.von_neumann_entropy(r, check=False)
    rho_t = qmath.partial_trace(rho_s, [d_t, d_a], [0])
    lhs, rhs = s(rho_s), s(rho_t)
    for rec in outcome_records(m, rho_s, d_a):
        if rec.post_state is None:
            continue
        lhs -= rec.probability * s(rec.post_state)
        rhs -= rec.probability * s(qmath.partial_trace(rec.post_state, [d_t, d_a], [0]))
    return float(lhs), float(rhs), bool(lhs <= rhs + tol)


def measurement_dilation(m):
    """Dilation whose ancilla records the outcome.

    The ancilla basis enumerates every Kraus operator of every outcome in
    order; Pi_i projects onto the labels belonging to outcome i.
    """
    ops, labels = [], []
    for i, o in enumerate(m.outcomes):
        ops.extend(o.kraus)
        labels.extend([i] * len(o.kraus))
    v = stinespring_unitary(ops)
    d_z = len(ops)
    dil = Dilation(v, qmath.basis_projector(0, d_z), (m.dim, d_z))
    labels = np.asarray(labels)
    projectors = [np.diag((labels == i).astype(float)).astype(np.complex128) for i in range(len(m))]
    return dil, projectors


def dilated_outcomes(dil, projectors, rho_t):
    """(p_i, sigma_{t,i}) read off the dilation with the ancilla projectors."""
    joint = dil.joint_output(qmath.check_density(rho_t))
    d_t, d_z = dil.dims
    out = []
    for pi in projectors:
        big = np.kron(np.eye(d_t), pi)
        x = qmath.partial_trace(big @ joint @ big, dil.dims, [0])
        p = float(np.trace(x).real)
        out.append((p, x / p if p > P_FLOOR else None))
    return out


def measurement_reset_check(m, rho_t, ctx, tol=1e-9):
    """Benefit integrand at rho_t plus the cost of resetting the recording device.

    The device is reset after the outcome has been read, so its entropy
    change is taken on the dephased (outcome-block-diagonal) state. Returns
    ``(lhs, holds)``.
    """
    t = thermo.as_context(ctx).temperature
    dil, projectors = measurement_dilation(m)
    z_out = dil.ancilla_output(qmath.check_density(rho_t))
    pinched = sum(p @ z_out @ p for p in projectors)
    d_sz = (qmath.von_neumann_entropy(pinched, check=False)
            - qmath.von_neumann_entropy(dil.rho_z, check=False))
    lhs = entropy_gap(m, rho_t, ctx) - t * d_sz
    return float(lhs), bool(lhs <= tol)
