"""Post-selected measurements and the unbounded-work construction.

Only runs where the outcome lands in ``success_set`` are kept. When the
success probability depends on the state, a target entangled with a large
enough ancilla yields a conditional work that grows like ``(1/2 - q) ln d_a``.
"""
from dataclasses import dataclass
from typing import List

import numpy as np

from . import measure, qmath, thermo
from .channels import AccountingMode, CPMap
from .errors import DimensionError, ProbabilityFloorError, TrivialPostSelectionError
from .measure import P_FLOOR, Measurement

NONTRIVIAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PostSelection:
    measurement: Measurement
    success_set: tuple

    def __post_init__(self):
        succ = tuple(sorted(set(int(i) for i in self.success_set)))
        if not succ:
            raise ValueError("success_set must not be empty")
        if succ[0] < 0 or succ[-1] >= len(self.measurement):
            raise ValueError(f"success indices {succ} out of range for {len(self.measurement)} outcomes")
        object.__setattr__(self, "success_set", succ)

    @property
    def fail_set(self):
        return tuple(i for i in range(len(self.measurement)) if i not in self.success_set)


def coarse_grain(ps):
    """Two-outcome measurement {C_succ, C_fail}, or one outcome when nothing can fail."""
    outs = ps.measurement.outcomes
    succ = CPMap(tuple(k for i in ps.success_set for k in outs[i].kraus))
    if not ps.fail_set:
        return Measurement((succ,))
    fail = CPMap(tuple(k for i in ps.fail_set for k in outs[i].kraus))
    return Measurement((succ, fail))


def success_operator(ps):
    """M_succ = sum over successful Kraus operators of K^dagger K."""
    elems = measure.povm_elements(ps.measurement)
    return sum(elems[i] for i in ps.success_set)


def success_prob(ps, rho_t):
    rho_t = qmath.check_density(rho_t)
    if rho_t.shape[0] != ps.measurement.dim:
        raise DimensionError("state and measurement dimensions differ")
    recs = measure.outcome_records(ps.measurement, rho_t)
    return float(sum(recs[i].probability for i in ps.success_set))


def postselected_total_work(ps, rho_s, dims, h_t, h_a, ctx, mode=AccountingMode.BATTERY_POWERED):
    """Success-averaged conditional total work, (1/p_succ) sum_{i in succ} p_i W_{i}.

    Successful outcomes below the probability floor contribute nothing.
    """
    d_t, d_a = (int(x) for x in dims)
    rho_s = qmath.check_density(rho_s)
    m = ps.measurement
    recs = measure.outcome_records(m, rho_s, d_a)
    p_succ = sum(recs[i].probability for i in ps.success_set)
    if p_succ <= P_FLOOR:
        raise ProbabilityFloorError(f"success probability {p_succ:.3e} <= {P_FLOOR:g}")
    total = 0.0
    for i in ps.success_set:
        if recs[i].probability <= P_FLOOR:
            continue
        w = measure.conditional_total_work(m, rho_s, (d_t, d_a), h_t, h_a, ctx, i, mode)
        total += recs[i].probability * w
    return float(total / p_succ)


def nontriviality(ps, tol=NONTRIVIAL_TOL):
    """True iff the success probability depends on the state (eigen-gap of M_succ > tol)."""
    lam = qmath.eigvalsh(success_operator(ps))
    return bool(lam[0] - lam[-1] > tol)


@dataclass
class UnboundedConstruction:
    u: np.ndarray
    v: np.ndarray
    lam_max: float
    lam_min: float
    q: float
    d_a: int
    rho_s: np.ndarray
    lower_bound: float


def construction_state(u, v, d_a):
    """rho_s = 1/2 |u><u| (x) |0><0| + 1/2 |v><v| (x) I/d_a."""
    phi = qmath.basis_projector(0, d_a)
    return 0.5 * qmath.tensor(qmath.proj(u), phi) + 0.5 * qmath.tensor(qmath.proj(v), qmath.maximally_mixed(d_a))


def unbounded_construction(ps, h_t, d_a, ctx, tol=NONTRIVIAL_TOL):
    if not nontriviality(ps, tol):
        raise TrivialPostSelectionError("M_succ is proportional to the identity; post-selection is trivial")
    t = thermo.as_context(ctx).temperature
    d_a = int(d_a)
    if d_a < 1:
        raise ValueError("d_a must be positive")
    h_t = qmath.check_hermitian(h_t)
    d_t = ps.measurement.dim
    if h_t.shape[0] != d_t:
        raise DimensionError("Hamiltonian and measurement dimensions differ")
    w, vecs = qmath.eig_hermitian(success_operator(ps))
    lam_max, lam_min = float(w[0]), float(w[-1])
    u, v = vecs[:, 0], vecs[:, -1]
    q = lam_min / (lam_max + lam_min)
    e = qmath.eigvalsh(h_t)
    bound = e[-1] - e[0] + t * ((0.5 - q) * np.log(d_a) - np.log(d_t))
    return UnboundedConstruction(u, v, lam_max, lam_min, q, d_a,
                                 construction_state(u, v, d_a), float(bound))


@dataclass
class ScalingRow:
    d_a: int
    ln_da: float
    w_actual: float
    w_bound: float
    slope_running: float


def scaling_experiment(ps, h_t, ctx, d_a_list, mode=AccountingMode.BATTERY_POWERED) -> List[ScalingRow]:
    """Construction work and its lower bound over ancilla sizes.

    ``slope_running`` is the least-squares slope of W against ln d_a over
    the rows so far (NaN for the first row).
    """
    rows = []
    xs, ys = [], []
    d_t = ps.measurement.dim
    for d_a in d_a_list:
        c = unbounded_construction(ps, h_t, d_a, ctx)
        h_a = np.zeros((d_a, d_a), dtype=np.complex128)
        w = postselected_total_work(ps, c.rho_s, (d_t, d_a), h_t, h_a, ctx, mode)
        xs.append(np.log(d_a))
        ys.append(w)
        slope = float(np.polyfit(xs, ys, 1)[0]) if len(xs) > 1 else float("nan")
        rows.append(ScalingRow(int(d_a), float(np.log(d_a)), w, c.lower_bound, slope))
    return rows
