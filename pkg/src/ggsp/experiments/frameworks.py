"""Estimation + filtering pipelines for the GRP, TV, GSP and TS frameworks.

GRP learns the Hilbert basis from training data, TV fixes it to the cycle
harmonics, GSP to the identity (features processed independently).  TS
treats each vertex as an isolated time series.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from ..estimation import (
    complete_rows,
    design_matrix,
    jpsd_pairwise,
    jpsd_periodogram,
    learn_hilbert_basis,
    posterior,
    recover_continuous,
    trig_columns,
    variational_em,
    SamplePlan,
)
from ..model import covariance_from_jpsd
from ..spectral import (
    JointBasis,
    SpectralBasis,
    fourier_basis_cycle,
    identity_basis,
)
from ..wiener import complete_observed, denoise, denoise_filter


def hilbert_basis_for(framework: str, train, d: int) -> SpectralBasis:
    """Hilbert-coordinate basis each framework uses for ``d``-dimensional vertex signals."""
    if framework == "GRP":
        rows = complete_rows(train)
        if rows.shape[0] < 2:
            raise ConfigError("GRP needs at least two complete vertex rows in training")
        return learn_hilbert_basis(rows[:, None, :])
    if framework.startswith("TV"):
        if d < 3:
            raise ConfigError(f"TV needs at least 3 coordinates for a cycle basis, got {d}")
        return fourier_basis_cycle(d)
    if framework == "GSP":
        return identity_basis(d)
    raise ConfigError(f"unknown framework {framework!r}")


# ---------------------------------------------------------------------------
# denoising


def fit_denoiser(train_noisy, graph_basis: SpectralBasis, hilbert_basis: SpectralBasis,
                 noise_var: float):
    """Training mean and Wiener denoiser learned from noisy training samples.

    The signal JPSD is the noisy periodogram minus the (known, white) noise
    power, floored at zero.
    """
    mean = train_noisy.mean(axis=0)
    b = JointBasis(graph_basis, hilbert_basis)
    pY = jpsd_periodogram(train_noisy - mean, b)
    pX = np.clip(pY - noise_var, 0.0, None)
    pE = np.full(b.shape, float(noise_var))
    return mean, denoise_filter(pX, pE, b)


def denoise_frameworks(train_noisy, test_noisy, graph_basis, noise_var, frameworks):
    d = train_noisy.shape[2]
    out = {}
    for fw in frameworks:
        hb = hilbert_basis_for(fw, train_noisy, d)
        mean, filt = fit_denoiser(train_noisy, graph_basis, hb, noise_var)
        out[fw] = denoise(test_noisy - mean, filt) + mean
    return out


# ---------------------------------------------------------------------------
# completion


def interpolate_lanes(x) -> np.ndarray:
    """Linear interpolation of NaNs along the last axis; all-missing lanes become 0."""
    x = np.array(x, dtype=float)
    flat = x.reshape(-1, x.shape[-1])
    idx = np.arange(x.shape[-1])
    for row in flat:
        bad = np.isnan(row)
        if bad.all():
            row[:] = 0.0
        elif bad.any():
            row[bad] = np.interp(idx[bad], idx[~bad], row[~bad])
    return flat.reshape(x.shape)


def complete_snapshots(train, test_obs, test_mask, graph_basis, hilbert_basis, noise_var):
    """Wiener completion of ``(m, n, d)`` snapshots with NaN marking missing cells.

    The JPSD is estimated from pairwise-complete training moments, so
    partially observed snapshots still contribute.
    """
    mean = np.nanmean(train, axis=0)
    mean = np.where(np.isnan(mean), 0.0, mean)
    b = JointBasis(graph_basis, hilbert_basis)
    pY = jpsd_pairwise(train - mean, b)
    pX = np.clip(pY - noise_var, 0.0, None)
    C_X = covariance_from_jpsd(pX, b)
    C_E = noise_var * np.eye(C_X.shape[0])
    est = np.empty(test_obs.shape)
    for i, (y, m) in enumerate(zip(test_obs, test_mask)):
        est[i] = complete_observed(C_X, C_E, np.where(m, y, 0.0), m, mean)
    return est


def complete_tv(train_days, test_days, test_mask, graph_basis, noise_var, fill: str):
    """TV completion of one feature; days are ``(D, n, H)`` with the hours as coordinates.

    ``fill`` chooses how missing training cells enter the periodogram:
    ``"zero"`` pads with the mean, ``"interp"`` interpolates along time.
    """
    mean = np.nanmean(train_days, axis=(0, 2))[None, :, None]
    mean = np.where(np.isnan(mean), 0.0, mean)
    X = train_days - mean
    if fill == "zero":
        X = np.where(np.isnan(X), 0.0, X)
    elif fill == "interp":
        X = interpolate_lanes(X)
    else:
        raise ConfigError(f"unknown TV fill {fill!r}")
    H = train_days.shape[2]
    b = JointBasis(graph_basis, fourier_basis_cycle(H))
    pX = np.clip(jpsd_periodogram(X, b) - noise_var, 0.0, None)
    C_X = covariance_from_jpsd(pX, b)
    C_E = noise_var * np.eye(C_X.shape[0])
    est = np.empty(test_days.shape)
    for i, (y, m) in enumerate(zip(test_days, test_mask)):
        est[i] = complete_observed(C_X, C_E, np.where(m, y, 0.0), m, mean[0])
    return est


# ---------------------------------------------------------------------------
# continuous-time recovery


def equispaced_grid(m: int) -> np.ndarray:
    """``2m`` points from ``-pi`` to ``pi`` inclusive."""
    i = np.arange(2 * m)
    return -np.pi + 2 * i * np.pi / (2 * m - 1)


def sample_plan(n: int, m: int, scheme: str, rng):
    """Per-vertex sample times (and grid indices for the equispaced scheme)."""
    if scheme == "equispaced":
        grid = equispaced_grid(m)
        idx = [np.sort(rng.choice(2 * m, size=m, replace=False)) for _ in range(n)]
        return SamplePlan([grid[i] for i in idx]), idx
    if scheme == "uniform":
        return SamplePlan([np.sort(rng.uniform(-np.pi, np.pi, size=m)) for _ in range(n)]), None
    raise ConfigError(f"unknown sampling scheme {scheme!r}")


def recover_grp(y_tr, plan_tr, y_te, plan_te, graph_basis, m0, eval_times, em_opts):
    B_tr = design_matrix(plan_tr, graph_basis, m0, "grp")
    fit = variational_em(y_tr, B_tr, **em_opts)
    B_te = design_matrix(plan_te, graph_basis, m0, "grp")
    c, _ = posterior(y_te, B_te, fit.p, fit.sigma2)
    return recover_continuous(c, graph_basis, m0, eval_times, "grp"), fit


def recover_ts(y_tr, plan_tr, y_te, plan_te, m0, eval_times, em_opts):
    n = plan_tr.n
    r = y_te.shape[1]
    out = np.empty((r, n, len(eval_times)))
    T_eval = trig_columns(eval_times, m0, True)
    off_tr = np.cumsum([0] + [t.size for t in plan_tr.times])
    off_te = np.cumsum([0] + [t.size for t in plan_te.times])
    for v in range(n):
        B_tr = trig_columns(plan_tr.times[v], m0, True)
        fit = variational_em(y_tr[off_tr[v]:off_tr[v + 1]], B_tr, **em_opts)
        B_te = trig_columns(plan_te.times[v], m0, True)
        c, _ = posterior(y_te[off_te[v]:off_te[v + 1]], B_te, fit.p, fit.sigma2)
        out[:, v] = (T_eval @ c).T
    return out


def recover_tv(y_tr, idx_tr, y_te, idx_te, graph_basis, m, m0, eval_times, em_opts):
    """Joint graph x cycle-harmonic regression on the grid, then linear interpolation."""
    grid = equispaced_grid(m)
    Psi = np.asarray(fourier_basis_cycle(2 * m).eigenvectors)[:, :m0]
    Phi = graph_basis.eigenvectors

    def design(idx):
        rows = [(Phi[v][:, None] * Psi[i][:, None, :]).reshape(len(i), -1)
                for v, i in enumerate(idx)]
        return np.vstack(rows)

    fit = variational_em(y_tr, design(idx_tr), **em_opts)
    c, _ = posterior(y_te, design(idx_te), fit.p, fit.sigma2)
    r = y_te.shape[1]
    C = c.T.reshape(r, Phi.shape[1], m0)
    on_grid = Phi @ C @ Psi.T
    out = np.empty((r, Phi.shape[0], len(eval_times)))
    for i in range(r):
        for v in range(Phi.shape[0]):
            out[i, v] = np.interp(eval_times, grid, on_grid[i, v])
    return out
