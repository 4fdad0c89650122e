"""Maximization of entropy-type objectives over density operators.

Every benefit in the package has the form

    obj(rho) = T * (S(rho) - sum_o [eta(X_o) + p_o ln p_o]) + w * Tr[H (C[rho] - rho)]

with ``X_o = sum_{k in o} K_k rho K_k^dagger``, ``p_o = Tr X_o`` and
``eta(X) = -Tr X ln X``. The sum over outcomes equals ``sum_o p_o S(X_o/p_o)``,
a channel being the one-outcome case. States are parametrized as
``rho = A A^dagger / Tr[A A^dagger]`` with A an unconstrained complex matrix,
and the objective is climbed by gradient ascent from several starts.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels, qmath
from ._accel import ordered_map


@dataclass(frozen=True)
class OptConfig:
    n_restarts: int = 16
    tol: float = 1e-7
    max_iter: int = 500
    fd_step: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        if self.n_restarts < 0 or self.max_iter < 1:
            raise ValueError("n_restarts must be >= 0 and max_iter >= 1")
        if self.tol <= 0 or self.fd_step <= 0:
            raise ValueError("tol and fd_step must be positive")


class OptResult(NamedTuple):
    value: float
    state: np.ndarray
    converged: bool
    restart: int


class StateObjective:
    """Objective over the ``A`` parametrization, backed by the compiled kernels."""

    def __init__(self, kraus_groups, temperature, h=None, energy_weight=0.0):
        ops, labels = [], []
        for o, group in enumerate(kraus_groups):
            for k in group:
                ops.append(np.asarray(k, dtype=np.complex128))
                labels.append(o)
        if not ops:
            raise ValueError("objective needs at least one Kraus operator")
        self.kraus = np.ascontiguousarray(np.stack(ops))
        d = self.kraus.shape[1]
        if self.kraus.shape[2] != d:
            raise ValueError("objective needs square Kraus operators (cyclic process)")
        self.d = d
        self.outcome = np.asarray(labels, dtype=np.int64)
        self.n_out = len(kraus_groups)
        self.h = np.zeros((d, d), dtype=np.complex128) if h is None else np.ascontiguousarray(h, dtype=np.complex128)
        self.temperature = float(temperature)
        self.energy_weight = float(energy_weight)

    def _args(self):
        return self.kraus, self.outcome, self.n_out, self.h, self.temperature, self.energy_weight

    def values(self, x):
        return kernels.objective_batch(np.atleast_2d(np.asarray(x, dtype=np.float64)), *self._args())

    def value(self, x):
        return float(self.values(x)[0])

    def grad(self, x, step):
        return kernels.objective_grad(np.asarray(x, dtype=np.float64), *self._args(), step)

    def of_states(self, rhos):
        rhos = np.ascontiguousarray(np.asarray(rhos, dtype=np.complex128).reshape(-1, self.d, self.d))
        return kernels.states_objective(rhos, *self._args())

    def of_state(self, rho):
        return float(self.of_states(rho)[0])


def params_from_state(rho):
    """A = sqrt(rho), flattened as [real parts, imaginary parts]."""
    a = qmath.funm_hermitian(rho, lambda w: np.sqrt(np.clip(w, 0.0, None)))
    return np.concatenate([a.real.ravel(), a.imag.ravel()])


def state_from_params(x, d):
    dd = d * d
    a = (x[:dd] + 1j * x[dd:]).reshape(d, d)
    rho = a @ a.conj().T
    rho = rho / np.trace(rho).real
    return 0.5 * (rho + rho.conj().T)


def _ascend(obj, x0, cfg):
    x = x0 / np.linalg.norm(x0)
    f = obj.value(x)
    step = 1.0
    converged = False
    for _ in range(cfg.max_iter):
        g = obj.grad(x, cfg.fd_step)
        gn2 = float(g @ g)
        if np.sqrt(gn2) < cfg.tol:
            converged = True
            break
        accepted = False
        while step > 1e-14:
            xn = x + step * g
            fn = obj.value(xn)
            if fn >= f + 1e-4 * step * gn2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # no ascent direction left at double precision
            converged = np.sqrt(gn2) < 1e3 * cfg.tol
            break
        x = xn / np.linalg.norm(xn)
        f = fn
        step = min(step * 1.5, 1e4)
    return f, x, converged


def maximize(obj, cfg=None, extra_starts=()):
    """Best of: the maximally mixed start, any extra starting states, and
    ``cfg.n_restarts`` Ginibre-random starts. Ties go to the lowest index."""
    cfg = cfg or OptConfig()
    d = obj.d
    starts = [params_from_state(qmath.maximally_mixed(d))]
    starts += [params_from_state(s) for s in extra_starts]
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_restarts)
    for ss in seeds:
        rng = np.random.default_rng(ss)
        starts.append(rng.standard_normal(2 * d * d))

    results = ordered_map(lambda x0: _ascend(obj, x0, cfg), starts)
    best = 0
    for i, r in enumerate(results):
        if r[0] > results[best][0]:
            best = i
    f, x, conv = results[best]
    return OptResult(float(f), state_from_params(x, d), bool(conv), best)
