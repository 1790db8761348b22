import numpy as np
import pytest

from capdetect.channels import Channel, complement
from capdetect.numerics import haar_unitary
from capdetect.zoo import random_correlation_matrix


def random_channel(d_in, d_out, k, rng):
    """Channel from the first ``d_in`` columns of a Haar unitary on ``C^(d_out k)``.

    ``k`` is raised when needed so that the isometry exists.
    """
    k = max(k, -(-d_in // d_out))
    u = haar_unitary(d_out * k, rng)[:, :d_in]
    ops = u.reshape(d_out, k, d_in).transpose(1, 0, 2)
    return Channel(d_in, d_out, ops)


def random_pair(d_in, d_out, k, rng):
    return complement(random_channel(d_in, d_out, k, rng))


def random_stochastic(d, rng, density=0.6):
    a = rng.random((d, d)) * (rng.random((d, d)) < density)
    np.fill_diagonal(a, rng.random(d) + 0.1)
    return a / a.sum(axis=0)


def random_cduc_ab(d, rng, rank=None):
    a = random_stochastic(d, rng)
    c = random_correlation_matrix(d, rng, rank)
    dg = np.sqrt(np.diag(a))
    return a, dg[:, None] * c * dg[None, :]


def random_duc_ab(d, rng):
    a = random_stochastic(d, rng)
    t = rng.uniform(0, 1, size=(d, d)) * np.exp(2j * np.pi * rng.random((d, d)))
    t = np.triu(t, 1)
    t = t + t.conj().T
    b = t * np.sqrt(a * a.T)
    np.fill_diagonal(b, np.diag(a))
    return a, b


def random_subspace(m, n, rng):
    """Basis of a random subspace of ``m x n`` matrices.

    Half the time the subspace is a compression space (support on the first
    ``a`` rows plus the first ``b`` columns), which has small maximal rank.
    """
    def cplx(*shape):
        return rng.normal(size=shape) + 1j * rng.normal(size=shape)

    if rng.random() < 0.5:
        mask = np.zeros((m, n), dtype=bool)
        a, b = int(rng.integers(0, m)), int(rng.integers(0, n))
        mask[:a] = True
        mask[:, :b] = True
        if not mask.any():
            mask[0, 0] = True
        full = int(mask.sum())
        dim = int(rng.integers(1, full + 1))
        coeff = cplx(dim, full)
        basis = np.zeros((dim, m, n), dtype=complex)
        basis[:, mask] = coeff
        return list(basis)
    dim = int(rng.integers(1, m * n + 1))
    return list(cplx(dim, m, n))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
