"""Thermal states, free energies and the stepwise swap protocol.

The swap protocol walks a diagonal system state towards a diagonal target
by swapping it, step by step, with bath subsystems prepared in thermal
states of suitably chosen Hamiltonians. Work per step is defined by the
first law, ``dU_s + Q + W = 0``.
"""
from dataclasses import dataclass, field
from typing import List

import numpy as np

from . import qmath
from .errors import DimensionError, QtbError


@dataclass(frozen=True)
class ThermalContext:
    temperature: float

    def __post_init__(self):
        t = float(self.temperature)
        if not np.isfinite(t) or t <= 0.0:
            raise ValueError(f"temperature must be positive and finite, got {self.temperature!r}")
        object.__setattr__(self, "temperature", t)


def as_context(ctx):
    if isinstance(ctx, ThermalContext):
        return ctx
    return ThermalContext(float(ctx))


def log_partition(h, ctx):
    t = as_context(ctx).temperature
    w = qmath.eigvalsh(qmath.check_hermitian(h))
    wmin = w.min()
    return float(-wmin / t + np.log(np.sum(np.exp(-(w - wmin) / t))))


def thermal_state(h, ctx):
    """Gibbs state exp(-H/T)/Z, built in the eigenbasis of H."""
    t = as_context(ctx).temperature
    w, q = qmath.eig_hermitian(h)
    boltz = np.exp(-(w - w.min()) / t)
    boltz /= boltz.sum()
    tau = (q * boltz) @ qmath.dag(q)
    return 0.5 * (tau + qmath.dag(tau))


def energy(rho, h):
    return qmath.expectation(h, rho)


def free_energy(rho, h, ctx):
    """F = Tr[H rho] - T S(rho)."""
    t = as_context(ctx).temperature
    rho = qmath.check_density(rho)
    h = qmath.check_hermitian(h)
    if rho.shape != h.shape:
        raise DimensionError(f"state {rho.shape} and Hamiltonian {h.shape} differ in dimension")
    return energy(rho, h) - t * qmath.von_neumann_entropy(rho, check=False)


def optimal_work(rho_init, rho_final, h, ctx):
    """Supremum of the work extractable while taking rho_init to rho_final."""
    return free_energy(rho_init, h, ctx) - free_energy(rho_final, h, ctx)


class NotDiagonalError(QtbError):
    pass


class RankDeficientError(QtbError):
    pass


@dataclass
class ProtocolStep:
    system_state: np.ndarray
    bath_hamiltonian: np.ndarray
    work: float
    bath_dF: float
    dU: float
    heat: float
    dS_total: float


@dataclass
class ProtocolTrace:
    steps: List[ProtocolStep] = field(default_factory=list)

    @property
    def total_work(self):
        return float(sum(s.work for s in self.steps))

    def csv_rows(self):
        cumulative = 0.0
        for k, s in enumerate(self.steps, start=1):
            cumulative += s.work
            yield k, s.work, cumulative, s.bath_dF


def _diagonal(m, name):
    m = np.asarray(m, dtype=np.complex128)
    if np.max(np.abs(m - np.diag(np.diag(m)))) > qmath.TOL_HERM:
        raise NotDiagonalError(f"{name} must be diagonal in the energy basis")
    return np.diag(m).real.copy()


def _swap(d):
    s = np.zeros((d * d, d * d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            s[j * d + i, i * d + j] = 1.0
    return s


def swap_protocol(rho_init, rho_final, h, ctx, n_steps):
    """Run the n_steps swap protocol between two full-rank diagonal states.

    Bath subsystem k holds the thermal state of ``H_k = -T ln rho_k`` (shifted
    so its ground energy is zero), where ``rho_k`` linearly interpolates the
    spectra of the endpoints. The last bath state is ``rho_final`` itself, so
    the system ends there exactly.
    """
    ctx = as_context(ctx)
    t = ctx.temperature
    n_steps = int(n_steps)
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    rho_init = qmath.check_density(rho_init)
    rho_final = qmath.check_density(rho_final)
    h = qmath.check_hermitian(h)
    if not (rho_init.shape == rho_final.shape == h.shape):
        raise DimensionError("states and Hamiltonian must share one dimension")
    _diagonal(h, "Hamiltonian")
    r0 = _diagonal(rho_init, "rho_init")
    r1 = _diagonal(rho_final, "rho_final")
    if r0.min() <= 0.0 or r1.min() <= 0.0:
        raise RankDeficientError("swap protocol needs full-rank endpoints; mix with eta*I/d first")
    d = r0.size
    swap = _swap(d)
    trace = ProtocolTrace()
    current = np.diag(r0).astype(np.complex128)
    for k in range(1, n_steps + 1):
        lam = k / n_steps
        rk = (1.0 - lam) * r0 + lam * r1
        rk /= rk.sum()
        hk_diag = -t * np.log(rk)
        hk = np.diag(hk_diag - hk_diag.min()).astype(np.complex128)
        tau_k = thermal_state(hk, ctx)
        joint = swap @ qmath.tensor(current, tau_k) @ swap.conj().T
        sys_after = qmath.partial_trace(joint, [d, d], [0])
        bath_after = qmath.partial_trace(joint, [d, d], [1])
        d_u = energy(sys_after, h) - energy(current, h)
        heat = energy(bath_after, hk) - energy(tau_k, hk)
        work = -(d_u + heat)
        bath_df = free_energy(bath_after, hk, ctx) - free_energy(tau_k, hk, ctx)
        ds = (qmath.von_neumann_entropy(sys_after, check=False)
              + qmath.von_neumann_entropy(bath_after, check=False)
              - qmath.von_neumann_entropy(current, check=False)
              - qmath.von_neumann_entropy(tau_k, check=False))
        trace.steps.append(ProtocolStep(sys_after, hk, work, bath_df, d_u, heat, ds))
        current = sys_after
    return trace
