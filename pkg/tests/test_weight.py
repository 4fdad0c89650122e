import numpy as np
import pytest
from scipy import integrate
from hypothesis import given, settings, strategies as st

from qtb import channels, measure, qmath, thermo, weight as W
from qtb.errors import ResolutionError
from qtb.sampling import haar_unitary, random_channel, random_measurement, random_state

H_QUBIT = np.diag([0.0, 1.0]).astype(complex)
CTX = thermo.ThermalContext(1.0)
shifts = st.floats(min_value=-4.0, max_value=4.0, allow_nan=False)


@pytest.mark.parametrize("w", [W.TopHat(10.0), W.Triangular(10.0)], ids=["tophat", "triangular"])
def test_centered_states(w):
    k = W.kernel(w)
    assert float(k.x_moment(0.0, 0.0)) == pytest.approx(0.0, abs=1e-12)
    assert float(k.overlap(1.3, 1.3)) == pytest.approx(1.0, abs=1e-12)
    assert W.quadrature_oracle(w, 0.0, 0.0) == pytest.approx((1.0, 0.0), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(shifts, shifts)
def test_closed_forms_match_quadrature(a, b):
    for w in (W.TopHat(5.0), W.Triangular(5.0)):
        k = W.kernel(w)
        ov, xm = W.quadrature_oracle(w, a, b)
        assert abs(float(k.overlap(a, b)) - ov) < 1e-6 * w.L
        assert abs(float(k.x_moment(a, b)) - xm) < 1e-6 * w.L


def test_tophat_moment_sign():
    # for A + B < 0 the first moment follows (A+B)(2L - |A-B|)/(4L), not an absolute value
    L, a, b = 3.0, -2.0, -0.5
    _, xm = W.quadrature_oracle(W.TopHat(L), a, b)
    assert float(W.tophat_x_moment(a, b, L)) == pytest.approx(xm, abs=1e-12)
    unsigned = 0.5 * (a + b) - abs(a * a - b * b) / (4 * L)
    assert abs(unsigned - xm) > 0.1
    # for A + B >= 0 the two forms coincide
    a, b = 2.0, 0.5
    assert float(W.tophat_x_moment(a, b, L)) == pytest.approx(0.5 * (a + b) - abs(a * a - b * b) / (4 * L), abs=1e-14)


def test_tophat_example():
    L = 7.0
    ov, xm = W.quadrature_oracle(W.TopHat(L), 0.3 * L, 0.1 * L)
    assert float(W.tophat_overlap(0.3 * L, 0.1 * L, L)) == pytest.approx(ov, abs=1e-9)
    assert float(W.tophat_x_moment(0.3 * L, 0.1 * L, L)) == pytest.approx(xm, abs=1e-9)


def test_overlap_depends_on_difference_only():
    for w in (W.TopHat(4.0), W.Triangular(4.0)):
        k = W.kernel(w)
        assert float(k.overlap(0.3, -0.9)) == pytest.approx(float(k.overlap(2.3, 1.1)), abs=1e-14)
        assert float(k.overlap(0.3, -0.9)) == pytest.approx(float(k.overlap(-0.9, 0.3)), abs=1e-14)


def test_large_length_limits():
    a, b = 1.0, -1.0
    for L in (1e3, 1e5, 1e7):
        assert abs(float(W.tophat_x_moment(a, b, L)) - 0.5 * (a + b)) <= 2.0 / L
    assert float(W.triangular_x_moment(a, b, 1e8)) == pytest.approx(-0.75, abs=1e-6)
    assert float(W.triangular_x_moment_truncated(a, b)) == pytest.approx(-0.75, abs=1e-15)
    errs = [abs(float(W.triangular_x_moment(0.3, 1.2, L)) - float(W.triangular_x_moment_truncated(0.3, 1.2))) for L in (1e2, 1e3, 1e4)]
    assert errs[1] < errs[0] / 5 and errs[2] < errs[1] / 5


def test_symmetric_sampled_state():
    for L in (1.0, 10.0):
        g = W.Sampled.gaussian(L, n=4001)
        k = W.kernel(g)
        assert abs(complex(k.x_moment(0.5, -0.5))) < 1e-9
        err = abs(complex(k.x_moment(0.8, 0.2)) / complex(k.overlap(0.8, 0.2)) - 0.5)
        assert err < 1e-6


def test_sampled_validation():
    x = np.linspace(-1, 1, 11)
    with pytest.raises(ValueError):
        W.Sampled(x, np.ones(11), 1.0)
    with pytest.raises(ValueError):
        W.Sampled(np.r_[x[:-1], 2.0], np.ones(11), 1.0)
    coarse = W.Sampled.gaussian(1.0, n=101)
    with pytest.raises(ResolutionError):
        W.quadrature_oracle(coarse, 0.0, 0.1)
    with pytest.raises(ResolutionError):
        W.quadrature_oracle(W.TopHat(1.0), 0.0, 0.1, dx=1e-3)


def test_momentum_concentration():
    L = 100.0
    delta = W.momentum_concentration(W.TopHat(L), 1.0 / np.sqrt(L))
    assert 0 < delta <= W.tophat_delta_bound(L)
    assert W.tophat_delta_bound(L) == pytest.approx(2 / (np.pi * 10))
    assert W.momentum_concentration(W.TopHat(L), 1e4) < 1e-5
    # the jump at the right edge gives a 1/p^2 tail: delta ~ 3 / (pi eps L)
    assert W.momentum_concentration(W.Triangular(L), 1e3) == pytest.approx(3 / (np.pi * 1e5), rel=1e-4)
    # the two evaluation routes for the triangular state meet at the switch-over
    tri = W.Triangular(L)
    below, above = W.momentum_concentration(tri, 0.4999), W.momentum_concentration(tri, 0.5001)
    assert abs(below - above) < 1e-5 and below > above
    # closed form and quadrature of the momentum density agree
    p = np.linspace(-0.05, 0.05, 20001)
    mass = integrate.trapezoid(W.momentum_density(W.TopHat(L), p), p)
    assert 1 - mass == pytest.approx(W.momentum_concentration(W.TopHat(L), 0.05), abs=1e-6)


def test_sampled_momentum_density_matches_tophat():
    L = 2.0
    x = np.linspace(-L, L, 40001)
    s = W.Sampled(x, np.full(x.size, 1 / np.sqrt(2 * L)), L)
    p = np.array([0.0, 0.3, 1.1])
    np.testing.assert_allclose(W.momentum_density(s, p), W.momentum_density(W.TopHat(L), p), atol=1e-6)


@pytest.mark.parametrize("family", ["tophat", "triangular", "gaussian"])
def test_explicit_channel_cptp_and_consistency(rng, family):
    w = {"tophat": W.TopHat(2.0), "triangular": W.Triangular(2.0), "gaussian": W.Sampled.gaussian(1.0, n=801)}[family]
    for _ in range(3):
        m = random_measurement(rng, 2, 2, 2)
        dil, projs = measure.measurement_dilation(m)
        rho = random_state(rng, 2)
        choi = W.explicit_channel(dil, H_QUBIT, w)
        assert choi.is_cp(1e-9) and choi.tp_defect() < 1e-9
        outs = W.explicit_outcomes(dil, projs, rho, H_QUBIT, w)
        out = choi.apply(rho)
        apply_work = qmath.expectation(H_QUBIT, rho) - qmath.expectation(H_QUBIT, out)
        assert abs(sum(p * x for p, x, _ in outs) - apply_work) < 1e-9
        np.testing.assert_allclose(sum(p * s for p, _, s in outs), out, atol=1e-9)


def test_explicit_channel_non_diagonal_hamiltonian(rng):
    u = haar_unitary(rng, 2)
    h = u @ H_QUBIT @ qmath.dag(u)
    c = random_channel(rng, 2, 2)
    dil = channels.dilate(c)
    big = W.explicit_channel(dil, h, W.TopHat(1e9))
    assert channels.channel_distance(big, c) < 1e-7


def test_energy_conserving_dilation_is_exact():
    dil, projs = measure.measurement_dilation(measure.basis_measurement(2))
    rho = random_state(np.random.default_rng(1), 2)
    for w in (W.TopHat(0.5), W.Triangular(0.5)):
        assert W.conditional_apply_work_explicit(dil, projs, rho, H_QUBIT, w, 0) == pytest.approx(0.0, abs=1e-12)
        assert W.explicit_vs_implicit_distance(dil, H_QUBIT, w) < 1e-14


def test_explicit_distance_shrinks(rng):
    c = random_channel(rng, 2, 2)
    dil = channels.dilate(c)
    d = [W.explicit_vs_implicit_distance(dil, H_QUBIT, W.TopHat(L)) for L in (10, 100, 1000)]
    assert d[0] > d[1] > d[2]


def test_diagonal_states_have_no_anomaly(rng):
    for _ in range(10):
        m = random_measurement(rng, 3, 2, 1)
        dil, projs = measure.measurement_dilation(m)
        rho = np.diag(rng.dirichlet(np.ones(3))).astype(complex)
        h = np.diag([0.0, 0.4, 1.1]).astype(complex)
        a = W.explicit_outcomes(dil, projs, rho, h, W.TopHat(1e4))
        b = W.explicit_outcomes(dil, projs, rho, h, W.Triangular(1e4))
        for (pa, wa, _), (pb, wb, _) in zip(a, b):
            assert abs(wb - wa) < 1e-9
        for i, e in enumerate(measure.povm_elements(m)):
            assert abs(W.coherence_correction(e, rho, h, 1.0)) < 1e-15


def test_anomaly_residual_is_first_order_in_inverse_length(rng):
    m = random_measurement(rng, 2, 2, 1)
    dil, projs = measure.measurement_dilation(m)
    rho = random_state(rng, 2)
    elems = measure.povm_elements(m)
    res = []
    for L in (1e3, 1e4, 1e5):
        a = W.explicit_outcomes(dil, projs, rho, H_QUBIT, W.TopHat(L))
        b = W.explicit_outcomes(dil, projs, rho, H_QUBIT, W.Triangular(L))
        p = np.trace(elems[0] @ rho).real
        res.append(abs(b[0][1] - a[0][1] - W.coherence_correction(elems[0], rho, H_QUBIT, p)))
    assert res[1] == pytest.approx(res[0] / 10, rel=0.02)
    assert res[2] == pytest.approx(res[1] / 10, rel=0.02)


def test_protocol_unitary(rng):
    hsb = np.diag([0.0, 1.0, 1.0, 2.0]).astype(complex)
    perm = np.eye(4)[[1, 0, 3, 2]].astype(complex)
    rho = np.diag(rng.dirichlet(np.ones(4))).astype(complex)
    for w in (W.TopHat(3.0), W.Triangular(3.0)):
        ep = W.explicit_protocol_unitary(perm, hsb, w)
        np.testing.assert_allclose(ep.apply(rho), ep.implicit(rho), atol=1e-14)
    u = haar_unitary(rng, 4)
    for L in (100.0, 1e4):
        ep = W.explicit_protocol_unitary(u, hsb, W.TopHat(L))
        omega = np.array([0.0, 0.5, 2.0])
        np.testing.assert_allclose(ep.dephasing_factor(omega).real, W.tophat_overlap(omega, 0.0, L), atol=2e-4)
        for _ in range(10):
            r = random_state(rng, 4)
            out = ep.apply(r)
            assert qmath.von_neumann_entropy(out) >= qmath.von_neumann_entropy(r) - 1e-10
            eps = 1 / np.sqrt(L)
            assert qmath.trace_distance(out, ep.implicit(r)) <= W.protocol_distance_bound(W.TopHat(L), eps, hsb)


def test_qubit_example_explicit():
    dil, projs = measure.measurement_dilation(measure.basis_measurement(2))
    rho = qmath.maximally_mixed(2)
    w = W.TopHat(1e4)
    got = [W.conditional_total_work_explicit(dil, projs, rho, H_QUBIT, w, CTX, i) for i in range(2)]
    np.testing.assert_allclose(got, [np.log(2) - 0.5, np.log(2) + 0.5], atol=5e-3)
