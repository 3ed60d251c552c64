"""Jointly stationary graph random process models.

A JPSD is an ``(n, d)`` nonnegative grid; covariance operators are dense
``(nd, nd)`` matrices acting on row-major vectorised signals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, NegativePsd, TooFewSamples
from .spectral import JointBasis, ijft


@dataclass(frozen=True)
class GrpModel:
    basis: JointBasis
    jpsd: np.ndarray
    mean: np.ndarray = field(default=None)

    def __post_init__(self):
        p = check_jpsd(self.jpsd, self.basis.shape)
        object.__setattr__(self, "jpsd", p)
        mean = np.zeros(self.basis.shape) if self.mean is None else np.asarray(self.mean, float)
        if mean.shape != self.basis.shape:
            raise DimensionMismatch(f"mean shape {mean.shape} != {self.basis.shape}")
        object.__setattr__(self, "mean", mean)

    def covariance(self) -> np.ndarray:
        return covariance_from_jpsd(self.jpsd, self.basis)


class StationarityCheck(NamedTuple):
    stationary: bool
    norm: float


def check_jpsd(p, shape=None) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if shape is not None and p.shape != tuple(shape):
        raise DimensionMismatch(f"JPSD shape {p.shape} != {tuple(shape)}")
    if not np.all(np.isfinite(p)):
        raise NegativePsd("JPSD has non-finite entries")
    if np.any(p < 0):
        raise NegativePsd(f"JPSD has negative entries (min {p.min():g})")
    return p


def covariance_from_jpsd(p, b: JointBasis) -> np.ndarray:
    """``sum_{k,tau} p[k,tau] (phi_k (x) psi_tau)(phi_k (x) psi_tau)^T``."""
    p = check_jpsd(p, b.shape)
    U = b.matrix()
    C = (U * p.ravel()) @ U.T
    return (C + C.T) / 2


def sample_grp(model: GrpModel, m: int, seed=None) -> np.ndarray:
    """Draw ``m`` Gaussian realisations; returns an ``(m, n, d)`` array.

    Joint Fourier coefficients are independent ``N(0, p[k, tau])``.  ``seed``
    is anything :func:`numpy.random.default_rng` accepts, e.g. ``(seed, batch)``
    for split streams.
    """
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((int(m),) + model.basis.shape) * np.sqrt(model.jpsd)
    return model.mean + ijft(Z, model.basis)


def _rel_commutator(A, B) -> float:
    return float(np.linalg.norm(A @ B - B @ A)
                 / max(1.0, np.linalg.norm(A) * np.linalg.norm(B)))


def _blocks(C, n, d):
    C = np.asarray(C, dtype=float)
    if C.shape != (n * d, n * d):
        raise DimensionMismatch(f"covariance shape {C.shape} != {(n * d, n * d)}")
    return C.reshape(n, d, n, d)


def check_jwss(C, b: JointBasis, tol: float = 1e-8) -> StationarityCheck:
    """Relative commutator of ``C`` with the joint shift ``A_G (x) A_H``."""
    n, d = b.shape
    C4 = _blocks(C, n, d)
    norm = _rel_commutator(C4.reshape(n * d, n * d), b.shift_operator())
    return StationarityCheck(norm <= tol, norm)


def vertex_blocks(C, n: int, d: int) -> np.ndarray:
    """``(d, n, n)`` stack of the per-coordinate vertex covariances ``K(t, t)``."""
    return np.einsum("utvt->tuv", _blocks(C, n, d))


def hilbert_blocks(C, n: int, d: int) -> np.ndarray:
    """``(n, d, d)`` stack of the per-vertex auto-covariances across coordinates."""
    return np.einsum("msmt->mst", _blocks(C, n, d))


def check_vwss(C, A_g, tol: float = 1e-8) -> StationarityCheck:
    A_g = np.asarray(A_g, dtype=float)
    n = A_g.shape[0]
    if np.shape(C)[0] % n:
        raise DimensionMismatch(f"covariance size {np.shape(C)[0]} not a multiple of {n}")
    K = vertex_blocks(C, n, np.shape(C)[0] // n)
    worst = max(_rel_commutator(Kt, A_g) for Kt in K)
    return StationarityCheck(worst <= tol, worst)


def check_hwss(C, A_h, tol: float = 1e-8) -> StationarityCheck:
    A_h = np.asarray(A_h, dtype=float)
    d = A_h.shape[0]
    if np.shape(C)[0] % d:
        raise DimensionMismatch(f"covariance size {np.shape(C)[0]} not a multiple of {d}")
    K = hilbert_blocks(C, np.shape(C)[0] // d, d)
    worst = max(_rel_commutator(Km, A_h) for Km in K)
    return StationarityCheck(worst <= tol, worst)


def estimate_moments(samples) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean ``(n, d)`` and covariance ``(nd, nd)`` with ``1/m`` normalisation."""
    S = np.asarray(samples, dtype=float)
    if S.ndim != 3 or S.shape[0] < 2:
        raise TooFewSamples("need an (m, n, d) stack with m >= 2")
    mean = S.mean(axis=0)
    Z = (S - mean).reshape(S.shape[0], -1)
    return mean, Z.T @ Z / S.shape[0]
