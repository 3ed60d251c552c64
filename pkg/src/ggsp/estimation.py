"""Spectral estimation from samples and EM recovery of continuous-time signals."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    EmptyPlan,
    EmptySampleSet,
    InvalidSpec,
    MissingValues,
    NonFiniteInput,
    TooFewSamples,
)
from .model import covariance_from_jpsd
from .spectral import JointBasis, SpectralBasis, eigendecompose, identity_basis, jft

log = logging.getLogger(__name__)

M0_DEFAULT = 20


def _stack(samples) -> np.ndarray:
    S = np.asarray(samples, dtype=float)
    if S.ndim == 2:
        S = S[None]
    if S.ndim != 3 or S.shape[0] == 0:
        raise EmptySampleSet("need at least one (n, d) sample")
    return S


def jpsd_periodogram(samples, b: JointBasis) -> np.ndarray:
    """Mean squared joint Fourier coefficients over the sample stack."""
    S = _stack(samples)
    if np.isnan(S).any():
        raise MissingValues("periodogram needs complete samples; see jpsd_pairwise")
    C = jft(S, b)
    return np.mean(C ** 2, axis=0)


def pairwise_second_moment(samples) -> np.ndarray:
    """``E[x x^T]`` over vectorised samples, each entry averaged where both cells are observed.

    NaN marks a missing cell.  Pairs never observed together get 0.
    """
    S = _stack(samples)
    Z = S.reshape(S.shape[0], -1)
    obs = ~np.isnan(Z)
    Z0 = np.where(obs, Z, 0.0)
    counts = obs.T.astype(float) @ obs.astype(float)
    return np.divide(Z0.T @ Z0, counts, out=np.zeros_like(counts), where=counts > 0)


def jpsd_pairwise(samples, b: JointBasis) -> np.ndarray:
    """JPSD estimate that tolerates missing cells.

    Each mode's power is the quadratic form of the pairwise-complete second
    moment with the joint eigenvector, clipped at zero.  On complete data
    this is exactly :func:`jpsd_periodogram`.
    """
    M = pairwise_second_moment(samples)
    U = b.matrix()
    p = np.einsum("ij,ij->j", U, M @ U).reshape(b.shape)
    return np.clip(p, 0.0, None)


def gsp_periodogram_per_feature(samples, graph_basis: SpectralBasis) -> np.ndarray:
    """Per-feature graph periodogram: column ``tau`` uses only feature ``tau``."""
    S = _stack(samples)
    Phi = graph_basis.eigenvectors
    if S.shape[1] != Phi.shape[0]:
        raise DimensionMismatch(f"samples have {S.shape[1]} vertices, basis {Phi.shape[0]}")
    F = np.einsum("vk,mvt->mkt", Phi, S)
    return np.mean(F ** 2, axis=0)


def learn_hilbert_basis(samples, gap_tol: float = 1e-8) -> SpectralBasis:
    """Eigenbasis of the pooled vertex-row covariance.

    All ``n`` rows of all samples are treated as draws of one ``d``-vector;
    the covariance is mean-centred with ``1/count`` normalisation.
    """
    S = _stack(samples)
    if S.shape[0] < 2:
        raise TooFewSamples("need at least two samples")
    rows = S.reshape(-1, S.shape[2])
    if np.isnan(rows).any():
        raise MissingValues("drop incomplete rows before learning the basis")
    rows = rows - rows.mean(axis=0)
    C = rows.T @ rows / rows.shape[0]
    return eigendecompose(C, gap_tol)


def complete_rows(samples) -> np.ndarray:
    """Pooled ``(rows, d)`` array of the vertex rows without missing cells."""
    S = _stack(samples)
    rows = S.reshape(-1, S.shape[2])
    return rows[~np.isnan(rows).any(axis=1)]


def covariance_estimate(samples, b: JointBasis, missing: str = "error") -> np.ndarray:
    """Covariance ``sum p_hat (phi (x) psi)(phi (x) psi)^T`` built from estimated JPSD."""
    if missing == "pairwise":
        p = jpsd_pairwise(samples, b)
    else:
        p = jpsd_periodogram(samples, b)
    return covariance_from_jpsd(p, b)


# ---------------------------------------------------------------------------
# continuous-time recovery


@dataclass
class SamplePlan:
    """Sample times in ``[-pi, pi]`` per vertex."""

    times: list

    def __post_init__(self):
        self.times = [np.asarray(t, dtype=float).ravel() for t in self.times]
        if not self.times or sum(t.size for t in self.times) == 0:
            raise EmptyPlan("sample plan has no points")
        for t in self.times:
            if t.size and (t.min() < -np.pi - 1e-12 or t.max() > np.pi + 1e-12):
                raise InvalidSpec("sample times must lie in [-pi, pi]")

    @property
    def n(self) -> int:
        return len(self.times)

    @property
    def size(self) -> int:
        return sum(t.size for t in self.times)

    def vertex_index(self) -> np.ndarray:
        return np.concatenate([np.full(t.size, v) for v, t in enumerate(self.times)])

    def flat_times(self) -> np.ndarray:
        return np.concatenate(self.times)


def trig_columns(t, m0: int, include_constant: bool) -> np.ndarray:
    """``[sin(1 t) .. sin(m0 t), (1,) cos(1 t) .. cos(m0 t)]`` evaluated at ``t``."""
    t = np.asarray(t, dtype=float)[:, None]
    taus = np.arange(1, m0 + 1)
    parts = [np.sin(taus * t)]
    if include_constant:
        parts.append(np.ones_like(t))
    parts.append(np.cos(taus * t))
    return np.hstack(parts)


def n_coefficients(n: int, m0: int, variant: str = "grp") -> int:
    if variant == "grp":
        return 2 * n * m0
    if variant == "ts":
        return n * (2 * m0 + 1)
    raise InvalidSpec(f"unknown basis variant {variant!r}")


def design_matrix(plan: SamplePlan, graph_basis: SpectralBasis | None,
                  m0: int = M0_DEFAULT, variant: str = "grp") -> np.ndarray:
    """Values of every basis function at every sample point.

    Rows run vertex-major, then over that vertex's sample times.  For
    ``variant="grp"`` the columns are ``phi_k (x) sin(tau t)`` for
    ``tau = 1..m0`` followed by ``phi_k (x) cos(tau t)``, blocked by ``k``.
    For ``variant="ts"`` each vertex gets its own block of ``sin`` (1..m0)
    and ``cos`` (0..m0) columns and the graph is ignored.
    """
    if m0 < 1:
        raise InvalidSpec(f"m0 must be >= 1, got {m0}")
    t = plan.flat_times()
    v = plan.vertex_index()
    n = plan.n
    if variant == "grp":
        if graph_basis is None or graph_basis.size != n:
            raise DimensionMismatch("graph basis must match the plan's vertex count")
        T = trig_columns(t, m0, False)
        Phi = graph_basis.eigenvectors[v]
        return (Phi[:, :, None] * T[:, None, :]).reshape(t.size, n * 2 * m0)
    if variant == "ts":
        T = trig_columns(t, m0, True)
        w = T.shape[1]
        B = np.zeros((t.size, n * w))
        for vert in range(n):
            rows = v == vert
            B[rows, vert * w:(vert + 1) * w] = T[rows]
        return B
    raise InvalidSpec(f"unknown basis variant {variant!r}")


def recover_continuous(c, graph_basis: SpectralBasis | None, m0: int, query_times,
                       variant: str = "grp", n: int | None = None) -> np.ndarray:
    """Evaluate the expansion with coefficients ``c`` at ``query_times`` on every vertex.

    Returns an ``(n, len(query_times))`` array, or ``(r, n, len)`` for a
    ``(s, r)`` coefficient matrix.
    """
    c = np.asarray(c, dtype=float)
    t = np.asarray(query_times, dtype=float).ravel()
    if variant == "grp":
        n = graph_basis.size
    elif n is None:
        n = graph_basis.size if graph_basis is not None else None
    if n is None:
        raise InvalidSpec("vertex count unknown for the ts variant")
    s = n_coefficients(n, m0, variant)
    if c.shape[0] != s:
        raise DimensionMismatch(f"expected {s} coefficients, got {c.shape[0]}")
    T = trig_columns(t, m0, variant == "ts")
    C = c.reshape(n, T.shape[1], *c.shape[1:])
    if variant == "grp":
        out = np.einsum("vk,kj...,tj->...vt", graph_basis.eigenvectors, C, T)
    else:
        out = np.einsum("vj...,tj->...vt", C, T)
    return out


@dataclass
class EMResult:
    p: np.ndarray
    sigma2: float
    mean: np.ndarray
    cov: np.ndarray
    converged: bool
    iterations: int
    evidence: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"p": self.p.tolist(), "sigma2": float(self.sigma2),
                "converged": bool(self.converged), "iterations": int(self.iterations)}


class _Posterior:
    """Gaussian posterior of ``c`` given ``y = B c + e`` for fixed ``p`` and ``sigma2``.

    Works in the whitened variable ``S^{-1} c`` with ``S = diag(sqrt(p))`` so
    tiny variances stay well conditioned.
    """

    def __init__(self, G, Bty, yty, N, r, p, sigma2):
        self.p, self.sigma2 = p, sigma2
        s = np.sqrt(p)
        M = np.eye(p.size) + (s[:, None] * G * s[None, :]) / sigma2
        self.chol = scipy.linalg.cholesky(M, lower=True)
        z = scipy.linalg.cho_solve((self.chol, True), s[:, None] * Bty) / sigma2
        self.mean = s[:, None] * z
        Linv, info = scipy.linalg.lapack.dtrtri(self.chol, lower=1)
        if info != 0:
            Linv = scipy.linalg.solve_triangular(self.chol, np.eye(p.size), lower=True)
        self.Minv_diag = np.einsum("ij,ij->j", Linv, Linv)
        self.diag_cov = p * self.Minv_diag
        self._s, self._Linv = s, Linv
        # log N(y; 0, sigma2 I + B P B^T) summed over the r signals
        logdet = N * np.log(sigma2) + 2 * np.log(np.diag(self.chol)).sum()
        quad = (yty - np.einsum("ij,ij->", s[:, None] * Bty, z)) / sigma2
        self.evidence = float(-0.5 * (r * logdet + quad + r * N * np.log(2 * np.pi)))

    def cov(self) -> np.ndarray:
        W = self._Linv * self._s
        return W.T @ W


def _prepare(y, B):
    B = np.asarray(B, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if not (np.all(np.isfinite(B)) and np.all(np.isfinite(y))):
        raise NonFiniteInput("y and B must be finite")
    if B.ndim != 2 or B.shape[0] != y.shape[0] or B.shape[0] == 0:
        raise DimensionMismatch(f"B {B.shape} and y {y.shape} disagree")
    return y, B


def posterior(y, B, p, sigma2):
    """Posterior mean ``(s,)``/``(s, r)`` and covariance of the coefficients."""
    y1 = np.asarray(y)
    y, B = _prepare(y, B)
    post = _Posterior(B.T @ B, B.T @ y, float(np.sum(y * y)), B.shape[0], y.shape[1],
                      np.asarray(p, dtype=float), float(sigma2))
    mean = post.mean[:, 0] if y1.ndim == 1 else post.mean
    return mean, post.cov()


def variational_em(y, B, max_iter: int = 500, tol: float = 1e-6, p_floor: float = 1e-12,
                   prune: float | None = None) -> EMResult:
    """Evidence-maximising EM for ``y = B c + e`` with ``c_i ~ N(0, p_i)``, ``e ~ N(0, sigma2 I)``.

    Columns of ``y`` (shape ``(N,)`` or ``(N, r)``) are independent signals
    sharing ``B``, ``p`` and ``sigma2``.  Each iteration computes the exact
    Gaussian posterior of ``c`` and then sets ``p_i`` to the mean posterior
    second moment and ``sigma2`` to the expected residual energy per
    observation.  Iteration stops when the relative change of ``(p, sigma2)``
    falls below ``tol``.

    Args:
        prune: if set, coefficients whose variance drops below
            ``prune * max(p)`` are frozen at ``p_floor`` and dropped from
            later E-steps.  Speeds up large dictionaries; off by default.
    """
    y1 = np.asarray(y)
    y, B = _prepare(y, B)
    N, s = B.shape
    r = y.shape[1]
    G = B.T @ B
    Bty = B.T @ y
    yty = float(np.sum(y * y))
    ms = yty / (N * r)
    s2_floor = max(p_floor * ms, np.finfo(float).tiny)

    lam = 1e-3 * np.trace(G) / s if np.trace(G) > 0 else 1e-3
    ridge = scipy.linalg.solve(G + lam * np.eye(s), Bty, assume_a="pos")
    p = np.mean(ridge ** 2, axis=1) + p_floor
    var_y = float(np.var(y))
    sigma2 = max(0.1 * var_y, s2_floor) if var_y > 0 else max(0.1 * ms, s2_floor, p_floor)

    active = np.arange(s)
    evidence = []
    converged = False
    it = 0
    post = None
    for it in range(1, max_iter + 1):
        a = active
        post = _Posterior(G[np.ix_(a, a)], Bty[a], yty, N, r, p[a], sigma2)
        evidence.append(post.evidence)
        mu = post.mean
        second = np.mean(mu ** 2, axis=1) + post.diag_cov
        p_new = np.full(s, p_floor)
        p_new[a] = np.maximum(second, p_floor)
        resid = float(np.sum((y - B[:, a] @ mu) ** 2))
        # tr(B Sigma B^T) = sigma2 * (s_a - tr(M^{-1}))
        trace_term = sigma2 * (a.size - post.Minv_diag.sum())
        sigma2_new = max((resid + r * trace_term) / (N * r), s2_floor)
        change = max(np.linalg.norm(p_new - p) / max(np.linalg.norm(p), p_floor),
                     abs(sigma2_new - sigma2) / sigma2)
        p, sigma2 = p_new, sigma2_new
        if prune is not None:
            active = np.flatnonzero(p > max(prune * p.max(), p_floor))
            if active.size == 0:
                active = np.array([int(np.argmax(p))])
        if change < tol:
            converged = True
            break
    if not converged:
        log.info("EM stopped after %d iterations without converging", max_iter)
    mean, cov = posterior(y, B, p, sigma2)
    if y1.ndim == 1:
        mean = mean[:, 0]
    return EMResult(p, sigma2, mean, cov, converged, it, evidence)
