"""Eigenbases with fixed conventions, the joint Fourier transform and joint filters.

Signals are ``(n, d)`` arrays: row ``v`` holds the Hilbert coordinates of the
signal at vertex ``v``.  Stacks of signals are ``(m, n, d)`` arrays and every
transform here broadcasts over the leading axis.  Vectorisation is row-major,
so ``vec(X) = X.ravel()`` and the joint eigenvector for mode ``(k, tau)`` is
``np.kron(phi_k, psi_tau)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidSize, NotSymmetric


class DegenerateSpectrumWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SpectralBasis:
    """Ascending eigenvalues and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        for arr in (self.eigenvalues, self.eigenvectors):
            arr.setflags(write=False)

    @property
    def size(self) -> int:
        return self.eigenvalues.shape[0]

    def operator(self) -> np.ndarray:
        """Reassemble ``V diag(lam) V^T``."""
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T


@dataclass(frozen=True)
class JointBasis:
    graph_basis: SpectralBasis
    hilbert_basis: SpectralBasis

    @property
    def shape(self) -> tuple[int, int]:
        return self.graph_basis.size, self.hilbert_basis.size

    def matrix(self) -> np.ndarray:
        """Dense ``(nd, nd)`` matrix whose column ``k*d + tau`` is ``phi_k (x) psi_tau``."""
        return np.kron(self.graph_basis.eigenvectors, self.hilbert_basis.eigenvectors)

    def shift_operator(self) -> np.ndarray:
        return np.kron(self.graph_basis.operator(), self.hilbert_basis.operator())


def _basis(values, vectors, degenerate=False) -> SpectralBasis:
    return SpectralBasis(np.array(values, dtype=float), np.array(vectors, dtype=float),
                         bool(degenerate))


def fix_signs(V: np.ndarray) -> np.ndarray:
    """Flip columns so the entry of largest magnitude is positive (first one on ties)."""
    V = np.array(V, dtype=float)
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def eigendecompose(A, gap_tol: float = 1e-8) -> SpectralBasis:
    """Symmetric eigendecomposition with the package sign convention.

    A :class:`DegenerateSpectrumWarning` is emitted (and ``degenerate`` set)
    when two adjacent eigenvalues are closer than
    ``gap_tol * max(1, max|lambda|)``.  The eigenvectors of a repeated
    eigenvalue are then only one valid choice among many.

    Raises:
        NotSymmetric: if ``A`` is not square or departs from symmetry by
            more than ``1e-10`` relative to its norm.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {A.shape}")
    scale = max(1.0, np.linalg.norm(A))
    if np.linalg.norm(A - A.T) > 1e-10 * scale:
        raise NotSymmetric("matrix is not symmetric")
    lam, V = np.linalg.eigh((A + A.T) / 2)
    V = fix_signs(V)
    gaps = np.diff(lam)
    degenerate = bool(gaps.size and np.any(gaps < gap_tol * max(1.0, np.abs(lam).max())))
    if degenerate:
        warnings.warn("repeated eigenvalues: eigenbasis is not unique",
                      DegenerateSpectrumWarning, stacklevel=2)
    return _basis(lam, V, degenerate)


def identity_basis(d: int) -> SpectralBasis:
    """Standard basis of R^d with all eigenvalues 1 (the identity operator)."""
    return _basis(np.ones(d), np.eye(d), d > 1)


def fourier_basis_cycle(T: int) -> SpectralBasis:
    """Real harmonic eigenbasis of the undirected ``T``-cycle Laplacian.

    Columns are the constant vector, then ``cos``/``sin`` pairs of increasing
    frequency scaled by ``sqrt(2/T)``, then the alternating vector if ``T`` is
    even.  Paired harmonics share an eigenvalue; the cos/sin representatives
    are kept as they are, without the sign convention of
    :func:`eigendecompose`.
    """
    T = int(T)
    if T < 3:
        raise InvalidSize(f"cycle basis needs T >= 3, got {T}")
    t = np.arange(T)
    cols = [np.full(T, 1 / np.sqrt(T))]
    lam = [0.0]
    for k in range(1, (T - 1) // 2 + 1):
        arg = 2 * np.pi * k * t / T
        cols += [np.sqrt(2 / T) * np.cos(arg), np.sqrt(2 / T) * np.sin(arg)]
        lam += [2 - 2 * np.cos(2 * np.pi * k / T)] * 2
    if T % 2 == 0:
        cols.append((-1.0) ** t / np.sqrt(T))
        lam.append(4.0)
    return _basis(lam, np.column_stack(cols), True)


def _check(X, b: JointBasis, what="signal"):
    X = np.asarray(X)
    if X.ndim < 2 or X.shape[-2:] != b.shape:
        raise DimensionMismatch(f"{what} shape {X.shape} does not end in {b.shape}")
    return X


def jft(X, b: JointBasis) -> np.ndarray:
    """Joint Fourier coefficients ``C[k, tau] = <X, phi_k (x) psi_tau>``."""
    X = _check(X, b)
    return b.graph_basis.eigenvectors.T @ X @ b.hilbert_basis.eigenvectors


def ijft(C, b: JointBasis) -> np.ndarray:
    C = _check(C, b, "coefficient grid")
    return b.graph_basis.eigenvectors @ C @ b.hilbert_basis.eigenvectors.T


def apply_convolution(g, X, b: JointBasis) -> np.ndarray:
    """Multiply the joint spectrum of ``X`` by the coefficient grid ``g``."""
    g = _check(g, b, "filter")
    return ijft(g * jft(X, b), b)


def apply_shift(X, b: JointBasis) -> np.ndarray:
    g = np.outer(b.graph_basis.eigenvalues, b.hilbert_basis.eigenvalues)
    return apply_convolution(g, X, b)
