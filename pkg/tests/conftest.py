"""Shared fixtures and independent numpy oracles.

The oracle helpers here deliberately avoid gcnkit's sparse kernels: they
work on dense arrays with plain numpy so tests compare two separately
written routes.
"""

import numpy as np
import pytest

from gcnkit.tensor import CSRMatrix

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdicts after the run, outside capture."""
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def dense_norm_adjacency(a):
    """Oracle for the symmetrically normalized self-loop adjacency."""
    a = np.asarray(a, dtype=np.float64)
    a_tilde = a + np.eye(a.shape[0])
    d = a_tilde.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(d)
    return a_tilde * inv_sqrt[:, None] * inv_sqrt[None, :]


def dense_laplacian(a):
    """Oracle for the combinatorial Laplacian (no self loops)."""
    a = np.asarray(a, dtype=np.float64)
    return np.diag(a.sum(axis=1)) - a


def dense_transition(a, k=1):
    """Oracle for the k-step self-loop random-walk transition matrix."""
    a = np.asarray(a, dtype=np.float64)
    a_tilde = a + np.eye(a.shape[0])
    p1 = a_tilde / a_tilde.sum(axis=1, keepdims=True)
    return np.linalg.matrix_power(p1, k)


def random_symmetric_adjacency(n, density, seed):
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) < density, 1)
    dense = (upper | upper.T).astype(np.float64)
    # Keep every node reachable so transition rows are well defined.
    return dense


def csr_from_dense(arr):
    return CSRMatrix.from_dense(np.asarray(arr, dtype=np.float64))


@pytest.fixture
def chain2():
    """Two nodes joined by one edge."""
    return np.array([[0.0, 1.0], [1.0, 0.0]])


@pytest.fixture
def path3():
    """Three nodes in a path 0-1-2."""
    a = np.zeros((3, 3))
    a[0, 1] = a[1, 0] = 1.0
    a[1, 2] = a[2, 1] = 1.0
    return a


@pytest.fixture
def sbm_small():
    from gcnkit.data import generate_sbm

    return generate_sbm(40, 3, 0.2, 0.01, 0.3, 5)
