import numpy as np
import pytest

from qtb import measure, postselect, qmath, thermo
from qtb.channels import AccountingMode
from qtb.errors import TrivialPostSelectionError
from qtb.measure import Measurement
from qtb.postselect import PostSelection

CTX = thermo.ThermalContext(1.0)


def povm(q):
    succ = np.diag([np.sqrt(1 - q), np.sqrt(q)])
    fail = np.diag([np.sqrt(q), np.sqrt(1 - q)])
    return Measurement.from_kraus([[succ], [fail]])


def test_nontriviality():
    assert postselect.nontriviality(PostSelection(measure.basis_measurement(2), [0]))
    assert not postselect.nontriviality(PostSelection(measure.basis_measurement(2), [0, 1]))
    assert not postselect.nontriviality(PostSelection(povm(0.5), [0]))
    with pytest.raises(TrivialPostSelectionError):
        postselect.unbounded_construction(PostSelection(povm(0.5), [0]), np.zeros((2, 2)), 4, CTX)


def test_bad_success_set():
    with pytest.raises(ValueError):
        PostSelection(measure.basis_measurement(2), [2])
    with pytest.raises(ValueError):
        PostSelection(measure.basis_measurement(2), [])


def test_coarse_grain_probabilities(rng):
    ps = PostSelection(measure.basis_measurement(3), [0, 2])
    cg = postselect.coarse_grain(ps)
    rho = qmath.maximally_mixed(3)
    assert len(cg) == 2
    assert postselect.success_prob(ps, rho) == pytest.approx(2 / 3)
    np.testing.assert_allclose(postselect.success_operator(ps), np.diag([1, 0, 1]), atol=1e-15)


@pytest.mark.parametrize("q", [0.0, 0.25])
@pytest.mark.parametrize("d_a", [2, 8, 32])
def test_construction_identities(q, d_a):
    ps = PostSelection(povm(q) if q else measure.basis_measurement(2), [0])
    c = postselect.unbounded_construction(ps, np.zeros((2, 2)), d_a, CTX)
    assert c.q == pytest.approx(q, abs=1e-12)
    assert qmath.von_neumann_entropy(c.rho_s) == pytest.approx(np.log(2) + 0.5 * np.log(d_a), abs=1e-9)
    cg = postselect.coarse_grain(ps)
    sigma = measure.outcome_records(cg, c.rho_s, d_a)[0].post_state
    sigma_a = qmath.partial_trace(sigma, [2, d_a], [1])
    phi = qmath.basis_projector(0, d_a)
    np.testing.assert_allclose(sigma_a, (1 - q) * phi + q * qmath.maximally_mixed(d_a), atol=1e-9)


@pytest.mark.parametrize("q,slope_min", [(0.0, 0.45), (0.25, 0.20)])
def test_scaling(q, slope_min):
    ps = PostSelection(povm(q) if q else measure.basis_measurement(2), [0])
    rows = postselect.scaling_experiment(ps, np.zeros((2, 2)), CTX, [2, 4, 8, 16, 32, 64])
    assert rows[-1].slope_running >= slope_min
    ws = [r.w_actual for r in rows]
    assert all(b > a for a, b in zip(ws, ws[1:]))
    for r in rows:
        assert r.w_actual >= r.w_bound - 1e-6
    bounds = np.array([r.w_bound for r in rows])
    lns = np.array([r.ln_da for r in rows])
    assert np.allclose(np.diff(bounds) / np.diff(lns), 0.5 - q, atol=1e-12)


def test_internal_power_bound_holds():
    h = np.diag([0.0, 1.0]).astype(complex)
    ps = PostSelection(povm(0.25), [0])
    rows = postselect.scaling_experiment(ps, h, CTX, [2, 8, 32], AccountingMode.INTERNAL_POWER)
    for r in rows:
        assert r.w_actual >= r.w_bound - 1e-6
