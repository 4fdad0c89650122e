import numpy as np
import pytest

from qtb import channels, qmath, thermo
from qtb.channels import AccountingMode, KrausChannel
from qtb.errors import DimensionError, InconsistentDilationError, NotTracePreservingError
from qtb.optimize import OptConfig
from qtb.sampling import haar_unitary, random_channel, random_hermitian, random_mixed_unitary, random_state

CTX = thermo.ThermalContext(1.0)


def test_werner_holevo_action():
    out = channels.werner_holevo()(qmath.basis_projector(0, 3))
    np.testing.assert_allclose(out, np.diag([0, 0.5, 0.5]), atol=1e-15)
    assert channels.is_unital(channels.werner_holevo())


def test_reset_to_ground_not_unital():
    c = channels.reset_to_ground(2)
    assert not channels.is_unital(c)
    np.testing.assert_allclose(c(qmath.maximally_mixed(2)), qmath.basis_projector(0, 2), atol=1e-15)


def test_non_tp_rejected():
    with pytest.raises(NotTracePreservingError):
        KrausChannel((0.5 * np.eye(2),))


def test_json_roundtrip(rng):
    c = random_channel(rng, 3, 2)
    back = KrausChannel.from_json(c.to_json())
    assert channels.channel_distance(c, back) < 1e-15


def test_choi_roundtrip_and_properties(rng):
    c = random_channel(rng, 3, 3)
    j = channels.choi_from_kraus(c)
    assert j.is_cp() and j.tp_defect() < 1e-12
    rho = random_state(rng, 3)
    np.testing.assert_allclose(j.apply(rho), c(rho), atol=1e-13)
    assert channels.channel_distance(c, j.to_kraus()) < 1e-10


def test_compose_matches_sequential(rng):
    a, b = random_channel(rng, 2, 2), random_channel(rng, 2, 3)
    rho = random_state(rng, 2)
    np.testing.assert_allclose(channels.compose(a, b)(rho), b(a(rho)), atol=1e-13)


def test_named_benefits():
    assert channels.work_benefit(channels.reset_to_ground(2), CTX).value == pytest.approx(np.log(2), abs=1e-6)
    assert abs(channels.work_benefit(channels.werner_holevo(), CTX).value) < 1e-6
    assert abs(channels.work_benefit(channels.depolarizing(0.4, 2), CTX).value) < 1e-6


def test_internal_power_benefit_of_reset():
    # max over rho of F(|0><0|) - F(rho) with H = diag(0, E)
    h = np.diag([0.0, 1.0]).astype(complex)
    res = channels.work_benefit_internal_power(channels.reset_to_ground(2), h, CTX)
    tau = thermo.thermal_state(h, CTX)
    expected = thermo.free_energy(qmath.basis_projector(0, 2), h, CTX) - thermo.free_energy(tau, h, CTX)
    assert res.value == pytest.approx(expected, abs=1e-6)


def test_internal_power_needs_hamiltonian():
    with pytest.raises(ValueError):
        channels.channel_objective(channels.reset_to_ground(2), CTX, AccountingMode.INTERNAL_POWER)


def test_benefit_dominates_samples(rng):
    c = random_channel(rng, 2, 2)
    w = channels.work_benefit(c, CTX).value
    for _ in range(1000):
        assert channels.entropy_gap(c, random_state(rng, 2), CTX) <= w + 1e-9


def test_unital_entropy_nondecrease(rng):
    for _ in range(200):
        c = random_mixed_unitary(rng, 3)
        rho = random_state(rng, 3)
        assert qmath.von_neumann_entropy(c(rho)) >= qmath.von_neumann_entropy(rho) - 1e-10


def test_gibbs_preserving_free_energy_monotone(rng):
    h = np.diag([0.0, 0.7, 1.5]).astype(complex)
    c = channels.dephasing(0.6, 3)
    assert channels.is_gibbs_preserving(c, h, CTX)
    for _ in range(200):
        rho = random_state(rng, 3)
        assert thermo.free_energy(c(rho), h, CTX) <= thermo.free_energy(rho, h, CTX) + 1e-9


def test_dilation_reproduces_channel(rng):
    for n_ops in (1, 2, 4):
        c = random_channel(rng, 2, n_ops)
        dil = channels.dilate(c)
        rho = random_state(rng, 2)
        np.testing.assert_allclose(dil.apply(rho), c(rho), atol=1e-12)
        assert channels.channel_distance(c, dil.channel()) < 1e-10


def test_dilation_padding_and_limits(rng):
    c = random_channel(rng, 2, 2)
    dil = channels.dilate(c, d_z=4)
    assert dil.dims == (2, 4)
    rho = random_state(rng, 2)
    np.testing.assert_allclose(dil.apply(rho), c(rho), atol=1e-12)
    with pytest.raises(DimensionError):
        channels.dilate(random_channel(rng, 2, 3), d_z=2)


def test_orthogonal_kraus_give_controlled_shift():
    m0, m1 = qmath.basis_projector(0, 2), qmath.basis_projector(1, 2)
    v = channels.stinespring_unitary([m0, m1])
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    np.testing.assert_allclose(v, cnot, atol=1e-15)


def test_reset_inequality(rng):
    for _ in range(100):
        c = random_channel(rng, 2, 2)
        lhs, holds = channels.reset_inequality_check(c, channels.dilate(c), random_state(rng, 2), CTX)
        assert holds, lhs


def test_reset_inequality_values():
    # a pure-output reset leaves the target uncorrelated: lhs is exactly zero
    c = channels.reset_to_ground(2)
    lhs, holds = channels.reset_inequality_check(c, channels.dilate(c), qmath.maximally_mixed(2), CTX)
    assert holds and abs(lhs) < 1e-12
    c = channels.dephasing(1.0, 2)
    plus = qmath.proj(np.array([1, 1]) / np.sqrt(2))
    lhs, holds = channels.reset_inequality_check(c, channels.dilate(c), plus, CTX)
    assert holds and lhs < -0.5


def test_reset_inequality_wrong_dilation(rng):
    a, b = random_channel(rng, 2, 2), random_channel(rng, 2, 2)
    with pytest.raises(InconsistentDilationError):
        channels.reset_inequality_check(a, channels.dilate(b), qmath.maximally_mixed(2), CTX)


def test_mixed_unitary_catalytic(rng):
    us = [haar_unitary(rng, 2) for _ in range(3)]
    probs = [0.5, 0.3, 0.2]
    dil = channels.mixed_unitary_catalytic(us, probs)
    c = dil.channel()
    assert channels.is_unital(c)
    assert channels.channel_distance(c, channels.mixed_unitary_channel(us, probs)) < 1e-12
    for _ in range(20):
        rho = random_state(rng, 2)
        np.testing.assert_allclose(dil.ancilla_output(rho), dil.rho_z, atol=1e-12)
    probes = [random_state(rng, 2) for _ in range(3)]
    sigma = channels.catalytic_fixed_point(dil.V, probes, 3, start=dil.rho_z)
    assert sigma is not None


def test_werner_holevo_catalytic_search_report(rng):
    # numerical echo only: either no fixed point, or one that does not reproduce the channel
    c = channels.werner_holevo()
    dil = channels.dilate(c)
    probes = [random_state(rng, 3) for _ in range(3)]
    sigma = channels.catalytic_fixed_point(dil.V, probes, dil.dims[1], channels.IterConfig(max_iter=2000))
    if sigma is not None:
        alt = channels.Dilation(dil.V, sigma, dil.dims)
        assert max(qmath.trace_distance(alt.apply(p), c(p)) for p in probes) > 0.01


def test_oracle_agrees_on_small_cases(rng):
    cfg = OptConfig()
    for c in (channels.reset_to_ground(2), random_channel(rng, 2, 2)):
        w = channels.work_benefit(c, CTX, cfg).value
        w_or = channels.work_benefit_oracle(c, CTX)
        assert abs(w - w_or) <= 2e-3
        assert w_or <= w + 1e-6


def test_oracle_dimension_limit():
    with pytest.raises(DimensionError):
        channels.work_benefit_oracle(channels.depolarizing(0.5, 4), CTX)


def test_thermalizing_channel_has_no_internal_power_benefit(rng):
    # rho -> tau Tr[rho] is Gibbs preserving; with internal power its benefit is zero
    h = random_hermitian(rng, 2)
    lam, vecs = qmath.eig_hermitian(thermo.thermal_state(h, CTX))
    ops = tuple(np.sqrt(l) * np.outer(vecs[:, m], qmath.ket(j, 2)) for m, l in enumerate(lam) for j in range(2))
    c = KrausChannel(ops)
    assert channels.is_gibbs_preserving(c, h, CTX)
    res = channels.work_benefit_internal_power(c, h, CTX)
    assert abs(res.value) < 1e-6
