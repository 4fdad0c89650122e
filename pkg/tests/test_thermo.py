import numpy as np
import pytest

from qtb import qmath, thermo
from qtb.sampling import random_hermitian, random_state


def test_thermal_state_qubit():
    h = np.diag([0.0, 1.0])
    tau = thermo.thermal_state(h, 1.0)
    p1 = np.exp(-1) / (1 + np.exp(-1))
    np.testing.assert_allclose(np.diag(tau).real, [1 - p1, p1], atol=1e-14)
    assert thermo.free_energy(tau, h, 1.0) == pytest.approx(-np.log(1 + np.exp(-1)), abs=1e-13)


def test_log_partition_large_energies_finite():
    h = np.diag([1e4, 1e4 + 1.0])
    lz = thermo.log_partition(h, 1.0)
    assert lz == pytest.approx(-1e4 + np.log(1 + np.exp(-1)), rel=1e-12)


def test_invalid_temperature():
    with pytest.raises(ValueError):
        thermo.ThermalContext(0.0)
    with pytest.raises(ValueError):
        thermo.ThermalContext(float("nan"))


def test_gibbs_minimality(rng):
    for _ in range(1000):
        d = int(rng.integers(2, 5))
        h = random_hermitian(rng, d)
        t = float(rng.uniform(0.2, 3.0))
        tau = thermo.thermal_state(h, t)
        rho = random_state(rng, d)
        df = thermo.free_energy(rho, h, t) - thermo.free_energy(tau, h, t)
        assert df >= -1e-12
        if qmath.trace_distance(rho, tau) < 1e-6:
            assert abs(df) < 1e-9


def test_free_energy_gap_is_relative_entropy(rng):
    h = random_hermitian(rng, 3)
    rho = random_state(rng, 3)
    tau = thermo.thermal_state(h, 0.8)
    gap = thermo.free_energy(rho, h, 0.8) - thermo.free_energy(tau, h, 0.8)
    assert gap == pytest.approx(0.8 * qmath.relative_entropy(rho, tau), abs=1e-10)


def test_swap_protocol_first_law_and_endpoint():
    start = np.diag([0.9, 0.1]).astype(complex)
    end = np.diag([0.3, 0.7]).astype(complex)
    h = np.diag([0.0, 0.5]).astype(complex)
    trace = thermo.swap_protocol(start, end, h, 1.3, 20)
    for s in trace.steps:
        assert abs(s.dU + s.heat + s.work) < 1e-9
        assert s.dS_total >= -1e-12
    np.testing.assert_allclose(trace.steps[-1].system_state, end, atol=1e-12)
    assert trace.total_work <= thermo.optimal_work(start, end, h, 1.3) + 1e-12


def test_swap_protocol_converges_monotonically():
    start = np.diag([0.999, 0.001]).astype(complex)
    end = qmath.maximally_mixed(2)
    h = np.zeros((2, 2), dtype=complex)
    opt = thermo.optimal_work(start, end, h, 1.0)
    gaps = [opt - thermo.swap_protocol(start, end, h, 1.0, n).total_work for n in (4, 16, 64, 256)]
    assert all(g >= 0 for g in gaps)
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_csv_rows_cumulative():
    trace = thermo.swap_protocol(np.diag([0.8, 0.2]), np.diag([0.5, 0.5]), np.zeros((2, 2)), 1.0, 5)
    rows = list(trace.csv_rows())
    assert [r[0] for r in rows] == [1, 2, 3, 4, 5]
    assert rows[-1][2] == pytest.approx(trace.total_work)


def test_swap_protocol_rejects_bad_input():
    with pytest.raises(thermo.RankDeficientError):
        thermo.swap_protocol(np.diag([1.0, 0.0]), np.diag([0.5, 0.5]), np.zeros((2, 2)), 1.0, 4)
    with pytest.raises(thermo.NotDiagonalError):
        thermo.swap_protocol(np.full((2, 2), 0.5), np.diag([0.5, 0.5]), np.zeros((2, 2)), 1.0, 4)
    with pytest.raises(ValueError):
        thermo.swap_protocol(np.diag([0.6, 0.4]), np.diag([0.5, 0.5]), np.zeros((2, 2)), 1.0, 0)
