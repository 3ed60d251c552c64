import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_joint
from ggsp.errors import DimensionMismatch, InvalidSize, NotSymmetric
from ggsp.graph import cycle_graph, graph_matrices, path_graph
from ggsp.spectral import (
    DegenerateSpectrumWarning,
    JointBasis,
    apply_convolution,
    apply_shift,
    eigendecompose,
    fix_signs,
    fourier_basis_cycle,
    identity_basis,
    ijft,
    jft,
)


def test_eigendecompose_path_graph():
    b = eigendecompose(graph_matrices(path_graph(4)).laplacian)
    expect = 2 - 2 * np.cos(np.pi * np.arange(4) / 4)
    np.testing.assert_allclose(b.eigenvalues, expect, atol=1e-12)
    V = b.eigenvectors
    np.testing.assert_allclose(V.T @ V, np.eye(4), atol=1e-12)
    assert not b.degenerate
    with pytest.raises(ValueError):
        V[0, 0] = 1.0


def test_sign_convention():
    V = fix_signs(np.array([[0.6, -0.8], [-0.8, -0.6]]))
    np.testing.assert_array_equal(V, [[-0.6, 0.8], [0.8, 0.6]])
    # tie: first index wins
    V = fix_signs(np.array([[-1.0], [1.0]]) / np.sqrt(2))
    assert V[0, 0] > 0


def test_eigendecompose_errors_and_warning():
    with pytest.raises(NotSymmetric):
        eigendecompose(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(NotSymmetric):
        eigendecompose(np.zeros((2, 3)))
    with pytest.warns(DegenerateSpectrumWarning):
        b = eigendecompose(graph_matrices(cycle_graph(5)).laplacian)
    assert b.degenerate


def test_fourier_basis_cycle_diagonalises_laplacian():
    for T in (3, 4, 7, 24):
        b = fourier_basis_cycle(T)
        L = graph_matrices(cycle_graph(T)).laplacian
        V = b.eigenvectors
        np.testing.assert_allclose(V.T @ V, np.eye(T), atol=1e-12)
        np.testing.assert_allclose(V.T @ L @ V, np.diag(b.eigenvalues), atol=1e-12)
        assert np.all(np.diff(b.eigenvalues) >= -1e-12)
    with pytest.raises(InvalidSize):
        fourier_basis_cycle(2)


def test_identity_basis():
    b = identity_basis(3)
    np.testing.assert_array_equal(b.eigenvectors, np.eye(3))


def test_joint_matrix_is_kron_of_columns(rng):
    b = random_joint(3, 2, rng)
    U = b.matrix()
    k, tau = 2, 1
    col = np.kron(b.graph_basis.eigenvectors[:, k], b.hilbert_basis.eigenvectors[:, tau])
    np.testing.assert_allclose(U[:, k * 2 + tau], col)
    X = rng.standard_normal((3, 2))
    np.testing.assert_allclose(jft(X, b)[k, tau], col @ X.ravel())


def test_jft_roundtrip_and_stacks(rng):
    b = random_joint(4, 3, rng)
    X = rng.standard_normal((5, 4, 3))
    np.testing.assert_allclose(ijft(jft(X, b), b), X, atol=1e-12)
    np.testing.assert_allclose(jft(X, b)[2], jft(X[2], b))
    with pytest.raises(DimensionMismatch):
        jft(np.zeros((3, 4)), b)


def test_shift_matches_kron_operator(rng):
    b = random_joint(3, 4, rng)
    X = rng.standard_normal((3, 4))
    np.testing.assert_allclose(apply_shift(X, b).ravel(), b.shift_operator() @ X.ravel(), atol=1e-12)


def test_convolution_with_unit_gains_is_identity(rng):
    b = random_joint(3, 2, rng)
    X = rng.standard_normal((3, 2))
    np.testing.assert_allclose(apply_convolution(np.ones((3, 2)), X, b), X, atol=1e-12)
    with pytest.raises(DimensionMismatch):
        apply_convolution(np.ones((2, 2)), X, b)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(1, 5), st.booleans(), st.integers(0, 2 ** 31))
def test_parseval(n, d, degenerate, seed):
    rng = np.random.default_rng(seed)
    b = random_joint(n, d, rng, degenerate)
    X = rng.standard_normal((n, d))
    assert abs(np.linalg.norm(jft(X, b)) - np.linalg.norm(X)) <= 1e-10


def test_degenerate_cycle_basis_is_unitary(rng):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateSpectrumWarning)
        gb = eigendecompose(graph_matrices(cycle_graph(6)).laplacian)
    b = JointBasis(gb, fourier_basis_cycle(4))
    X = rng.standard_normal((6, 4))
    assert abs(np.linalg.norm(jft(X, b)) - np.linalg.norm(X)) <= 1e-10
