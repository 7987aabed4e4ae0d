import numpy as np
import pytest

from hedge_da import LossBounds


def simplex_grid(n, step):
    """All points of the simplex whose coordinates are multiples of ``step``."""
    m = int(round(1 / step))
    if n == 2:
        i = np.arange(m + 1)
        return np.stack([i, m - i], axis=1) / m
    if n == 3:
        i, j = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
        keep = i + j <= m
        i, j = i[keep], j[keep]
        return np.stack([i, j, m - i - j], axis=1) / m
    if n == 4:
        i, j, k = np.meshgrid(*(np.arange(m + 1),) * 3, indexing="ij")
        keep = i + j + k <= m
        i, j, k = i[keep], j[keep], k[keep]
        return np.stack([i, j, k, m - i - j - k], axis=1) / m
    raise ValueError(n)


def prox_rows(X):
    """ln n + sum x ln x, row-wise, with 0 ln 0 = 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(X > 0, X * np.log(np.where(X > 0, X, 1.0)), 0.0)
    return np.log(X.shape[1]) + terms.sum(axis=1)


def random_losses(rng, T, n, bounds):
    return rng.uniform(-bounds.mu, bounds.rho, size=(T, n))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def reference_bounds():
    return LossBounds(0.5133, 0.5175)
