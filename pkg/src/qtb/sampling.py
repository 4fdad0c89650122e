"""Seeded random instances: states, unitaries, channels and measurements."""
import numpy as np


def rng_from(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def ginibre(rng, rows, cols=None):
    cols = rows if cols is None else cols
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)


def haar_unitary(rng, d):
    q, r = np.linalg.qr(ginibre(rng, d))
    ph = np.diagonal(r)
    return q * (ph / np.abs(ph))


def random_state(rng, d, rank=None):
    """Density operator from a d x rank Ginibre matrix (full rank by default)."""
    a = ginibre(rng, d, d if rank is None else rank)
    rho = a @ a.conj().T
    rho /= np.trace(rho).real
    return 0.5 * (rho + rho.conj().T)


def random_pure_state(rng, d):
    return random_state(rng, d, rank=1)


def random_hermitian(rng, d, scale=1.0):
    a = ginibre(rng, d)
    return scale * 0.5 * (a + a.conj().T)


def random_kraus(rng, d_in, n_ops, d_out=None):
    """Kraus operators sliced from a Haar isometry, so sum K^dagger K = I."""
    d_out = d_in if d_out is None else d_out
    big = haar_unitary(rng, d_out * n_ops)[:, :d_in]
    return [big[k * d_out:(k + 1) * d_out] for k in range(n_ops)]


def random_channel(rng, d, n_ops=None):
    from .channels import KrausChannel
    n_ops = d if n_ops is None else n_ops
    return KrausChannel(tuple(random_kraus(rng, d, n_ops)))


def random_mixed_unitary(rng, d, n_terms=3):
    from .channels import mixed_unitary_channel
    probs = rng.dirichlet(np.ones(n_terms))
    probs /= probs.sum()
    return mixed_unitary_channel([haar_unitary(rng, d) for _ in range(n_terms)], probs)


def random_measurement(rng, d, n_outcomes=2, ops_per_outcome=1):
    from .measure import Measurement
    ops = random_kraus(rng, d, n_outcomes * ops_per_outcome)
    groups = [tuple(ops[i * ops_per_outcome:(i + 1) * ops_per_outcome]) for i in range(n_outcomes)]
    return Measurement.from_kraus(groups)
