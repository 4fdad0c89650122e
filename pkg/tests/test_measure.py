import numpy as np
import pytest

from qtb import channels, measure, qmath, thermo
from qtb.channels import AccountingMode
from qtb.errors import NotTracePreservingError, ProbabilityFloorError
from qtb.measure import Measurement
from qtb.optimize import OptConfig, maximize
from qtb.sampling import random_hermitian, random_measurement, random_state

CTX = thermo.ThermalContext(1.0)
H_QUBIT = np.diag([0.0, 1.0]).astype(complex)


def test_qubit_example_implicit():
    m = measure.basis_measurement(2)
    rho = qmath.maximally_mixed(2)
    h_a = np.zeros((1, 1))
    w = [measure.conditional_total_work(m, rho, (2, 1), H_QUBIT, h_a, CTX, i) for i in range(2)]
    assert w[0] == pytest.approx(np.log(2) - 0.5, abs=1e-12)
    assert w[1] == pytest.approx(np.log(2) + 0.5, abs=1e-12)
    assert 0.5 * (w[0] + w[1]) == pytest.approx(np.log(2), abs=1e-12)
    assert measure.conditional_apply_work(m, rho, H_QUBIT, 0) == pytest.approx(0.0, abs=1e-15)


def test_qubit_example_dilation_is_cnot():
    dil, projs = measure.measurement_dilation(measure.basis_measurement(2))
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    np.testing.assert_allclose(dil.V, cnot, atol=1e-15)
    outs = measure.dilated_outcomes(dil, projs, qmath.maximally_mixed(2))
    for i, (p, sigma) in enumerate(outs):
        assert p == pytest.approx(0.5)
        np.testing.assert_allclose(sigma, qmath.basis_projector(i, 2), atol=1e-15)


def test_json_roundtrip(rng):
    m = random_measurement(rng, 3, 3, 2)
    back = Measurement.from_json(m.to_json())
    for a, b in zip(measure.povm_elements(m), measure.povm_elements(back)):
        np.testing.assert_allclose(a, b, atol=1e-15)


def test_incomplete_measurement_rejected():
    with pytest.raises(NotTracePreservingError):
        Measurement.from_kraus([[qmath.basis_projector(0, 2)]])


def test_probability_floor():
    m = measure.basis_measurement(2)
    with pytest.raises(ProbabilityFloorError):
        measure.conditional_apply_work(m, qmath.basis_projector(0, 2), H_QUBIT, 1)


def test_records_sum(rng):
    m = random_measurement(rng, 3, 3, 2)
    rho = random_state(rng, 6)
    recs = measure.outcome_records(m, rho, 2)
    assert sum(r.probability for r in recs) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_basis_benefit_is_ln_d(d):
    assert measure.work_benefit_measurement(measure.basis_measurement(d), CTX).value == pytest.approx(np.log(d), abs=1e-4)


def test_trivial_measurement_equals_channel(rng):
    c = channels.reset_to_ground(2)
    m = measure.trivial_measurement(c)
    assert measure.work_benefit_measurement(m, CTX).value == pytest.approx(channels.work_benefit(c, CTX).value, abs=1e-6)


def test_conditional_average_identity(rng):
    for _ in range(100):
        d = int(rng.integers(2, 4))
        m = random_measurement(rng, d, 3, 2)
        rho = random_state(rng, d)
        h = random_hermitian(rng, d)
        recs = measure.outcome_records(m, rho)
        avg = sum(r.probability * measure.conditional_apply_work(m, rho, h, r.index) for r in recs)
        assert abs(avg - measure.apply_work_measurement(m, rho, h)) < 1e-12


def test_internal_power_total_is_free_energy_drop(rng):
    m = random_measurement(rng, 2, 2, 1)
    rho = random_state(rng, 2)
    recs = measure.outcome_records(m, rho)
    for r in recs:
        w = measure.conditional_total_work(m, rho, (2, 1), H_QUBIT, None, CTX, r.index, AccountingMode.INTERNAL_POWER)
        expect = thermo.free_energy(r.post_state, H_QUBIT, CTX) - thermo.free_energy(rho, H_QUBIT, CTX)
        assert w == pytest.approx(expect, abs=1e-12)


def test_measurement_beats_channel(rng):
    cfg = OptConfig(n_restarts=4)
    for _ in range(10):
        m = random_measurement(rng, 2, 2, 2)
        forget = measure.forgetting_channel(m)
        wc = channels.work_benefit(forget, CTX, cfg)
        wm = maximize(measure.measurement_objective(m, CTX), cfg, extra_starts=[wc.state])
        assert wm.value >= wc.value - 1e-6


def test_larger_system_inequality(rng):
    for _ in range(100):
        m = random_measurement(rng, 2, 2, 2)
        lhs, rhs, holds = measure.larger_system_inequality_check(m, random_state(rng, 6), (2, 3))
        assert holds, (lhs, rhs)


def test_measurement_reset(rng):
    for _ in range(100):
        m = random_measurement(rng, 2, 2, 2)
        lhs, holds = measure.measurement_reset_check(m, random_state(rng, 2), CTX)
        assert holds, lhs


def test_dilation_outcomes_match_records(rng):
    m = random_measurement(rng, 3, 3, 2)
    rho = random_state(rng, 3)
    dil, projs = measure.measurement_dilation(m)
    for (p, sigma), rec in zip(measure.dilated_outcomes(dil, projs, rho), measure.outcome_records(m, rho)):
        assert p == pytest.approx(rec.probability, abs=1e-12)
        np.testing.assert_allclose(sigma, rec.post_state, atol=1e-11)


def test_oracle_agrees_on_measurement(rng):
    m = random_measurement(rng, 2, 2, 1)
    w = measure.work_benefit_measurement(m, CTX).value
    assert abs(w - measure.work_benefit_measurement_oracle(m, CTX)) <= 2e-3
