"""Wiener filters for denoising and completion, their MSE, and the LCE oracle.

Filters act on centred signals.  Callers with a nonzero model mean subtract
it before filtering and add it back afterwards (``complete`` does this when
given ``mean``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    InvalidTruncation,
    PsdStructureViolation,
    SingularObservationGram,
)
from .model import check_jpsd
from .spectral import JointBasis, SpectralBasis, apply_convolution


@dataclass(frozen=True)
class DenoiseFilter:
    coefficients: np.ndarray
    basis: JointBasis

    def matrix(self) -> np.ndarray:
        U = self.basis.matrix()
        return (U * self.coefficients.ravel()) @ U.T


@dataclass(frozen=True)
class CompletionFilter:
    """Dense operator from vectorised observations to vectorised estimates."""

    operator: np.ndarray
    mask: np.ndarray

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        shape = y.shape
        flat = y.reshape(-1, self.operator.shape[0]) if y.ndim > 1 else y[None]
        flat = np.where(np.isnan(flat), 0.0, flat)
        return (flat @ self.operator.T).reshape(shape)


class LceResult(NamedTuple):
    estimate: np.ndarray
    residual_cov: np.ndarray


def wiener_gains(pX, pE) -> np.ndarray:
    """Per-mode gains ``pX / (pX + pE)``, zero where both vanish."""
    pX = check_jpsd(pX)
    pE = check_jpsd(pE, pX.shape)
    tot = pX + pE
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(tot > 0, pX / np.where(tot > 0, tot, 1.0), 0.0)


def denoise_filter(pX, pE, basis: JointBasis) -> DenoiseFilter:
    g = wiener_gains(pX, pE)
    if g.shape != basis.shape:
        raise DimensionMismatch(f"JPSD shape {g.shape} != basis shape {basis.shape}")
    return DenoiseFilter(g, basis)


def denoise(y, f: DenoiseFilter) -> np.ndarray:
    return apply_convolution(f.coefficients, y, f.basis)


def _pinvh(M, rtol):
    """Pseudoinverse of a symmetric PSD matrix, cutting eigenvalues below ``rtol * max``."""
    if M.size == 0:
        return M.copy()
    w, V = np.linalg.eigh((M + M.T) / 2)
    cut = rtol * max(np.abs(w).max(), 0.0)
    keep = w > cut
    return (V[:, keep] / w[keep]) @ V[:, keep].T


def _as_mask(mask, size):
    mask = np.asarray(mask)
    if mask.dtype == bool:
        if mask.size != size:
            raise DimensionMismatch(f"mask has {mask.size} cells, operators act on {size}")
        return mask
    if mask.shape != (size, size):
        raise DimensionMismatch(f"projector shape {mask.shape} != {(size, size)}")
    return mask.astype(float)


def completion_filter(C_X, C_E, mask, pinv_tol: float = 1e-10) -> CompletionFilter:
    """Wiener completion operator ``((P (C_X + C_E) P)^+ P C_X)^T``.

    Args:
        C_X, C_E: ``(nd, nd)`` signal and noise covariances.
        mask: boolean ``(n, d)`` grid (True = observed), or a dense ``(nd, nd)``
            orthogonal projector for a general observation subspace.
        pinv_tol: singular values below ``pinv_tol * max`` are discarded.
    """
    C_X = np.asarray(C_X, dtype=float)
    C_E = np.asarray(C_E, dtype=float)
    N = C_X.shape[0]
    if C_X.shape != (N, N) or C_E.shape != (N, N):
        raise DimensionMismatch(f"covariance shapes {C_X.shape}, {C_E.shape}")
    m = _as_mask(mask, N)
    if m.dtype == bool:
        obs = np.flatnonzero(m.ravel())
        G = np.zeros((N, N))
        if obs.size:
            Mo = (C_X + C_E)[np.ix_(obs, obs)]
            G[:, obs] = C_X[:, obs] @ _pinvh(Mo, pinv_tol)
        return CompletionFilter(G, m)
    P = m
    CY = P @ (C_X + C_E) @ P
    G = (np.linalg.pinv(CY, rtol=pinv_tol, hermitian=True) @ P @ C_X).T
    return CompletionFilter(G, m)


def completion_approx(C_X, C_E, mask, m: int, basis: JointBasis,
                      pinv_tol: float = 1e-10) -> CompletionFilter:
    """Completion operator restricted to the joint modes with Hilbert index ``< m``.

    Both the observation covariance and the cross term are projected onto
    ``span{phi_k (x) psi_tau : tau < m}`` before the pseudoinverse.  With
    ``m == d`` this is :func:`completion_filter`.
    """
    n, d = basis.shape
    if not 1 <= m <= d:
        raise InvalidTruncation(f"truncation must be in 1..{d}, got {m}")
    if m == d:
        return completion_filter(C_X, C_E, mask, pinv_tol)
    C_X = np.asarray(C_X, dtype=float)
    N = n * d
    Pa = _as_mask(mask, N)
    if Pa.dtype == bool:
        Pa = np.diag(Pa.ravel().astype(float))
    U = basis.matrix().reshape(N, n, d)[:, :, :m].reshape(N, n * m)
    Pv = U @ U.T
    Q = Pv @ Pa
    CY = Q @ (C_X + np.asarray(C_E, float)) @ Q.T
    G = (np.linalg.pinv(CY, rtol=pinv_tol, hermitian=True) @ Q @ C_X).T
    return CompletionFilter(G, np.asarray(mask))


def complete(y, f: CompletionFilter, mean=None) -> np.ndarray:
    """Estimate the full signal from observations ``y`` (values at hidden cells ignored)."""
    y = np.asarray(y, dtype=float)
    if mean is None:
        return f(y)
    mean = np.asarray(mean, dtype=float)
    return f(y - mean) + mean


def complete_observed(C_X, C_E, y, mask, mean=None, pinv_tol: float = 1e-10) -> np.ndarray:
    """Completion estimate for one masked signal without forming the operator.

    Solves against the observed block by Cholesky when it is positive
    definite and falls back to :func:`completion_filter` otherwise.
    """
    y = np.asarray(y, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if mean is not None:
        y = y - mean
    obs = np.flatnonzero(mask.ravel())
    out = np.zeros(y.size)
    if obs.size:
        Mo = (C_X + C_E)[np.ix_(obs, obs)]
        try:
            cf = scipy.linalg.cho_factor(Mo, lower=True)
            out = C_X[:, obs] @ scipy.linalg.cho_solve(cf, y.ravel()[obs])
        except np.linalg.LinAlgError:
            out = completion_filter(C_X, C_E, mask, pinv_tol)(y.ravel())
    out = out.reshape(y.shape)
    return out if mean is None else out + mean


def mse_completion(pX, pE, graph_basis: SpectralBasis, observed_vertices,
                   cond_limit: float = 1e12) -> float:
    """Closed-form MSE of vertex-sampling Wiener completion.

    The observation keeps every Hilbert coordinate of the vertices in
    ``observed_vertices`` and nothing elsewhere.  Each Hilbert mode ``tau``
    must have ``pX + pE`` either positive for every graph mode or zero for
    every graph mode.

    Raises:
        PsdStructureViolation: mixed zero/positive total power within one tau.
        SingularObservationGram: an observation Gram matrix is numerically
            singular (condition number above ``cond_limit``).
    """
    pX = check_jpsd(pX)
    pE = check_jpsd(pE, pX.shape)
    Phi = graph_basis.eigenvectors
    if Phi.shape[0] != pX.shape[0]:
        raise DimensionMismatch(f"graph basis size {Phi.shape[0]} != JPSD rows {pX.shape[0]}")
    U = sorted(set(int(u) for u in observed_vertices))
    if U and not (0 <= U[0] and U[-1] < Phi.shape[0]):
        raise DimensionMismatch(f"observed vertices {U} outside 0..{Phi.shape[0] - 1}")
    tot = pX + pE
    pos = tot > 0
    active = pos.all(axis=0)
    if np.any(pos.any(axis=0) & ~active):
        raise PsdStructureViolation("total power is zero for some but not all graph modes of a tau")
    mse = float(pX[:, active].sum())
    if not U:
        return mse
    PhiU = Phi[U]
    for tau in np.flatnonzero(active):
        O = (PhiU * tot[:, tau]) @ PhiU.T
        if np.linalg.cond(O) > cond_limit:
            raise SingularObservationGram(f"observation Gram for tau={tau} is singular")
        R = (PhiU * pX[:, tau] ** 2) @ PhiU.T
        mse -= float(np.trace(np.linalg.solve(O, R)))
    return mse


def lce_oracle(C_X, C_Y, C_XY, m_X, m_Y, y) -> LceResult:
    """Linear conditional expectation in finite dimensions (compatible case).

    ``estimate = m_X + (C_Y^+ C_YX)^T (y - m_Y)`` and
    ``residual_cov = C_X - C_XY C_Y^+ C_YX``.  ``y`` may be a vector or a
    stack of row vectors.
    """
    C_X, C_Y, C_XY = (np.asarray(a, dtype=float) for a in (C_X, C_Y, C_XY))
    if C_XY.shape != (C_X.shape[0], C_Y.shape[0]):
        raise DimensionMismatch(f"cross-covariance shape {C_XY.shape}")
    Cy_pinv = scipy.linalg.pinv(C_Y)
    gain = Cy_pinv @ C_XY.T
    y = np.asarray(y, dtype=float)
    est = np.asarray(m_X, float) + (y - np.asarray(m_Y, float)) @ gain
    resid = C_X - C_XY @ gain
    return LceResult(est, resid)
