"""Shared fixtures and oracle helpers for the test suite."""

import numpy as np
import pytest


def random_pd_matrix(rng, n, scale=1.0, diag_boost=0.0):
    """Random symmetric positive definite matrix.

    B B^T is PSD for any square B; adding a positive diagonal makes it PD
    with probability one and keeps the condition number reasonable.
    """
    b = rng.standard_normal((n, n)) * scale
    return b @ b.T + np.diag(rng.uniform(0.1, 1.0, size=n)) * scale**2


def simplex_grid(n_steps=1000):
    """All 3-vectors with nonnegative entries summing to 1 on a 1/n_steps grid."""
    i, j = np.meshgrid(np.arange(n_steps + 1), np.arange(n_steps + 1), indexing="ij")
    mask = i + j <= n_steps
    i, j = i[mask], j[mask]
    w = np.column_stack([i, j, n_steps - i - j]) / float(n_steps)
    return w


def brute_force_min_variance(sigma, floor_vec=None, floor_rhs=None, n_steps=1000):
    """Grid search for the long-only minimum variance portfolio, 3 assets.

    Independent oracle for the active-set solver: no linear algebra beyond
    evaluating the quadratic form on every feasible grid point.
    """
    w = simplex_grid(n_steps)
    if floor_vec is not None:
        w = w[w @ np.asarray(floor_vec) >= floor_rhs - 1e-12]
    obj = np.einsum("ij,jk,ik->i", w, sigma, w)
    k = int(np.argmin(obj))
    return w[k], float(obj[k])


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
