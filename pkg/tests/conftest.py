import numpy as np
import pytest

from rr2d.array_model import ArrayGeometry, Scenario, Source, SourceKind
from rr2d.hybrid import SubArrayPartition


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_hermitian(rng, n, scale=1.0):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (A + A.conj().T)


def random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    A = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return A @ A.conj().T


def random_phases(rng, n):
    return np.exp(2j * np.pi * rng.random(n))


def switched_mask(n_d, n_s):
    part = SubArrayPartition(n_d, n_s)
    sub = np.arange(part.n_elements) // n_s
    mask = sub[:, None] != sub[None, :]
    np.fill_diagonal(mask, True)
    return mask


def scenario4():
    return Scenario(ArrayGeometry(4), Source(0.0, 1.0, SourceKind.SOI), (Source(30.0, 100.0),))
