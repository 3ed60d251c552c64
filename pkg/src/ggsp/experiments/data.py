"""Sample ingestion, missing-data masks, metrics and synthetic generators."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InconsistentDimensions, InvalidSpec, ParseError, ZeroSignal
from ..graph import Graph, erdos_renyi, generate_graph, graph_matrices, knn_graph
from ..model import GrpModel, sample_grp
from ..spectral import JointBasis, SpectralBasis, eigendecompose, fourier_basis_cycle

SNR_CAP_DB = 300.0


# ---------------------------------------------------------------------------
# CSV ingestion


def ingest_csv(path, schema: str = "long") -> np.ndarray:
    """Read samples into an ``(m, n, d)`` array; absent cells become NaN.

    ``long`` files have columns ``sample,vertex,coord,value``.  ``matrix``
    files have ``sample,vertex`` followed by one column per coordinate, an
    empty cell meaning missing.

    Raises:
        ParseError: malformed line (the line number is reported).
        InconsistentDimensions: samples disagree on their vertex/coordinate sets.
    """
    if schema not in ("long", "matrix"):
        raise InvalidSpec(f"unknown schema {schema!r}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", 1) from None
        if schema == "long":
            return _read_long(reader, header)
        return _read_matrix(reader, header)


def _int(s, line, what):
    try:
        v = int(s)
    except ValueError:
        raise ParseError(f"bad {what} {s!r}", line) from None
    if v < 0:
        raise ParseError(f"negative {what} {v}", line)
    return v


def _float(s, line):
    try:
        return float(s)
    except ValueError:
        raise ParseError(f"bad value {s!r}", line) from None


def _read_long(reader, header):
    if header != ["sample", "vertex", "coord", "value"]:
        raise ParseError(f"expected header sample,vertex,coord,value, got {','.join(header)}", 1)
    cells = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", lineno)
        s, v, c = (_int(row[i], lineno, k) for i, k in enumerate(("sample", "vertex", "coord")))
        if (s, v, c) in cells:
            raise ParseError(f"duplicate cell ({s}, {v}, {c})", lineno)
        cells[(s, v, c)] = _float(row[3], lineno)
    if not cells:
        raise ParseError("no data rows", 2)
    return _assemble(cells)


def _assemble(cells):
    per_sample = {}
    for (s, v, c) in cells:
        vs, cs = per_sample.setdefault(s, (set(), set()))
        vs.add(v)
        cs.add(c)
    samples = sorted(per_sample)
    if samples != list(range(len(samples))):
        raise InconsistentDimensions("sample ids must be 0..m-1")
    n = max(max(vs) for vs, _ in per_sample.values()) + 1
    d = max(max(cs) for _, cs in per_sample.values()) + 1
    for s, (vs, cs) in per_sample.items():
        if max(vs) + 1 != n or max(cs) + 1 != d:
            raise InconsistentDimensions(
                f"sample {s} spans {max(vs) + 1} vertices x {max(cs) + 1} coords, "
                f"others {n} x {d}")
    out = np.full((len(samples), n, d), np.nan)
    for (s, v, c), val in cells.items():
        out[s, v, c] = val
    return out


def _read_matrix(reader, header):
    if header[:2] != ["sample", "vertex"] or len(header) < 3:
        raise ParseError("expected header sample,vertex,<coord columns>", 1)
    d = len(header) - 2
    cells = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != d + 2:
            raise InconsistentDimensions(f"line {lineno}: expected {d + 2} fields, got {len(row)}")
        s = _int(row[0], lineno, "sample")
        v = _int(row[1], lineno, "vertex")
        for c, cell in enumerate(row[2:]):
            cells[(s, v, c)] = _float(cell, lineno) if cell.strip() else math.nan
    if not cells:
        raise ParseError("no data rows", 2)
    return _assemble(cells)


def write_samples_csv(path, samples) -> None:
    """Write an ``(m, n, d)`` stack in the long schema; NaN cells are omitted."""
    S = np.asarray(samples, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sample", "vertex", "coord", "value"])
        for (s, v, c), val in np.ndenumerate(S):
            if not np.isnan(val):
                w.writerow([s, v, c, repr(float(val))])


# ---------------------------------------------------------------------------
# missing data


@dataclass(frozen=True)
class MissingSpec:
    """``consecutive``: per day, ``lanes_per_day`` lanes lose a Geo(q)-long run.
    ``uniform``: every cell is hidden independently with probability ``rate``."""

    kind: str
    q: float | None = None
    rate: float | None = None
    lanes_per_day: int | None = None

    def __post_init__(self):
        if self.kind == "consecutive":
            if self.q is None or not (0 < self.q <= 1):
                raise InvalidSpec(f"geometric parameter must be in (0, 1], got {self.q}")
            if self.lanes_per_day is None or self.lanes_per_day < 0:
                raise InvalidSpec("consecutive model needs lanes_per_day >= 0")
        elif self.kind == "uniform":
            if self.rate is None or not (0 <= self.rate < 1):
                raise InvalidSpec(f"missing rate must be in [0, 1), got {self.rate}")
        else:
            raise InvalidSpec(f"unknown missing model {self.kind!r}")


def make_missing_mask(spec: MissingSpec, shape, seed=None) -> np.ndarray:
    """Boolean observation mask (True = observed).

    For the consecutive model ``shape`` is ``(days, *lane_dims, T)``: each day
    picks ``lanes_per_day`` distinct lanes and hides a run whose length is
    geometric, starting at a uniform time and clipped at the day's end.
    """
    rng = np.random.default_rng(seed)
    shape = tuple(int(s) for s in shape)
    if spec.kind == "uniform":
        return rng.random(shape) >= spec.rate
    if len(shape) < 2:
        raise InvalidSpec("consecutive model needs (days, ..., T) shape")
    days, T = shape[0], shape[-1]
    lane_shape = shape[1:-1]
    n_lanes = int(np.prod(lane_shape)) if lane_shape else 1
    k = min(spec.lanes_per_day, n_lanes)
    mask = np.ones((days, n_lanes, T), dtype=bool)
    for day in range(days):
        lanes = rng.choice(n_lanes, size=k, replace=False)
        starts = rng.integers(0, T, size=k)
        lengths = rng.geometric(spec.q, size=k)
        for lane, s0, ln in zip(lanes, starts, lengths):
            mask[day, lane, s0:min(T, s0 + ln)] = False
    return mask.reshape(shape)


def expected_run_length(q: float, T: int) -> float:
    """Mean hidden length of one clipped Geo(q) run with a uniform start in a length-T lane."""
    ell = np.arange(1, T + 1)
    pmf = q * (1 - q) ** (ell - 1)
    total = 0.0
    for start in range(T):
        room = T - start
        clipped = np.minimum(ell, room)
        total += float(np.sum(pmf * clipped) + room * (1 - q) ** T)
    return total / T


def lanes_for_fraction(fraction: float, q: float, T: int, n_lanes: int) -> int:
    """Lanes per day giving roughly ``fraction`` hidden cells (ignoring overlap)."""
    return int(min(n_lanes, round(fraction * n_lanes * T / expected_run_length(q, T))))


# ---------------------------------------------------------------------------
# metrics


@dataclass
class MetricsReport:
    per_rep: list = field(default_factory=list)
    runtime: float = 0.0

    def add(self, values: dict) -> None:
        self.per_rep.append(dict(values))

    @property
    def aggregate(self) -> dict:
        keys = self.per_rep[0].keys() if self.per_rep else ()
        return {k: float(np.mean([r[k] for r in self.per_rep])) for k in keys}


def snr_db(truth, estimate) -> float:
    truth = np.asarray(truth, dtype=float)
    err = float(np.sum((np.asarray(estimate, dtype=float) - truth) ** 2))
    sig = float(np.sum(truth ** 2))
    if sig == 0:
        raise ZeroSignal("truth has zero energy")
    if err == 0:
        return SNR_CAP_DB
    return min(SNR_CAP_DB, 10 * np.log10(sig / err))


def metrics(estimate, truth, noisy=None, where=None) -> dict:
    """SNR (dB), normalised error and relative error of ``estimate`` against ``truth``.

    ``where`` restricts all three to a boolean subset of cells.  With
    ``noisy`` the input SNR is reported too.
    """
    est = np.asarray(estimate, dtype=float)
    tru = np.asarray(truth, dtype=float)
    if est.shape != tru.shape:
        raise InconsistentDimensions(f"estimate {est.shape} vs truth {tru.shape}")
    if where is not None:
        est, tru = est[where], tru[where]
    norm = float(np.linalg.norm(tru))
    if norm == 0:
        raise ZeroSignal("truth has zero norm")
    rel = float(np.linalg.norm(est - tru)) / norm
    out = {"snr_db": snr_db(tru, est), "normalized_error": rel, "relative_error": rel}
    if noisy is not None:
        noisy = np.asarray(noisy, dtype=float)
        out["input_snr_db"] = snr_db(tru, noisy[where] if where is not None else noisy)
    return out


# ---------------------------------------------------------------------------
# synthetic data


def random_rotation(d: int, scale: float, rng) -> np.ndarray:
    """Orthogonal matrix ``expm(scale * K)`` for a random skew-symmetric ``K`` of unit spectral norm."""
    from scipy.linalg import expm

    A = rng.standard_normal((d, d))
    K = (A - A.T) / 2
    nrm = np.linalg.norm(K, 2)
    if nrm > 0:
        K /= nrm
    return expm(scale * K)


@dataclass
class EuclideanVertexData:
    graph: Graph
    coords: np.ndarray | None
    model: GrpModel
    samples: np.ndarray
    feature_basis: np.ndarray


def euclidean_vertex_model(spec: dict, rng, graph: Graph | None = None):
    """GRP model with a smooth graph spectrum and a non-diagonal feature covariance.

    Feature axes are the cycle harmonics of length ``d`` (``d >= 3``; a random
    orthogonal matrix otherwise) turned by a random rotation of size
    ``rotation``.  Their variances are ``feature_eigenvalues`` in harmonic
    order.  Graph-mode power is ``exp(-graph_decay * lambda_k / lambda_max)``.
    """
    n = int(spec.get("n", 30))
    d = int(spec.get("d", 3))
    coords = None
    if graph is None:
        coords = rng.random((n, 2))
        graph = knn_graph(coords, int(spec.get("k", 5)))
    L = graph_matrices(graph).laplacian
    gb = eigendecompose(L)
    if d >= 3:
        axes = np.asarray(fourier_basis_cycle(d).eigenvectors)
    else:
        axes = np.linalg.qr(rng.standard_normal((d, d)))[0]
    axes = random_rotation(d, float(spec.get("rotation", 0.25)), rng) @ axes
    nu = np.asarray(spec.get("feature_eigenvalues", [4.0 * 0.2 ** i for i in range(d)]), float)
    if nu.shape != (d,):
        raise InvalidSpec(f"feature_eigenvalues needs {d} entries")
    lam = gb.eigenvalues
    decay = float(spec.get("graph_decay", 4.0))
    g = np.exp(-decay * lam / max(lam.max(), 1e-12))
    order = np.argsort(nu, kind="stable")
    # the true eigenbasis of C_H, ascending like every SpectralBasis
    hb = SpectralBasis(nu[order], axes[:, order].copy(), False)
    model = GrpModel(JointBasis(gb, hb), np.outer(g, nu[order]))
    return graph, coords, model, axes


def generate_euclidean_vertex(spec: dict, seed=None, graph: Graph | None = None):
    """Samples of a Euclidean-vertex GRP.

    Without ``hours`` returns ``(m, n, d)`` iid samples.  With ``hours`` the
    samples are ``(days, hours, n, d)`` and each joint Fourier coefficient
    follows a stationary AR(1) over the hours with correlation ``time_corr``.
    """
    rng = np.random.default_rng(seed)
    graph, coords, model, axes = euclidean_vertex_model(spec, rng, graph)
    if spec.get("hours"):
        days, hours = int(spec.get("days", 40)), int(spec["hours"])
        rho = float(spec.get("time_corr", 0.8))
        Z = np.empty((days, hours) + model.basis.shape)
        Z[:, 0] = rng.standard_normal((days,) + model.basis.shape)
        innov = math.sqrt(1 - rho ** 2)
        for h in range(1, hours):
            Z[:, h] = rho * Z[:, h - 1] + innov * rng.standard_normal((days,) + model.basis.shape)
        from ..spectral import ijft

        samples = model.mean + ijft(Z * np.sqrt(model.jpsd), model.basis)
    else:
        samples = sample_grp(model, int(spec.get("m", 400)), rng)
    return EuclideanVertexData(graph, coords, model, samples, axes)


@dataclass
class ContinuousData:
    """Signals ``X_i(t) = sum_{k,l} coef[i,k,l] phi_k sin(beta_l t)``."""

    graph: Graph
    graph_basis: SpectralBasis
    betas: np.ndarray
    coef: np.ndarray

    def evaluate(self, times) -> np.ndarray:
        """Values at shared times: ``(m, n, len(times))``."""
        S = np.sin(np.outer(self.betas, np.asarray(times, float)))
        return np.einsum("vk,ikl,lt->ivt", self.graph_basis.eigenvectors, self.coef, S)

    def evaluate_plan(self, plan_times) -> np.ndarray:
        """Values at per-vertex times, flattened vertex-major: ``(m, N)``."""
        Phi = self.graph_basis.eigenvectors
        cols = []
        for v, t in enumerate(plan_times):
            S = np.sin(np.outer(self.betas, np.asarray(t, float)))
            cols.append(np.einsum("k,ikl,lt->it", Phi[v], self.coef, S))
        return np.concatenate(cols, axis=1)


def continuous_variances(lam, n_betas: int, scale: float = 1.0, decay: float = 1.0) -> np.ndarray:
    """Default coefficient variances ``scale * exp(-decay * lambda_k) / l**2``."""
    lam = np.asarray(lam, float)
    ell = np.arange(1, n_betas + 1)
    return scale * np.exp(-decay * lam)[:, None] / ell[None, :] ** 2


def generate_continuous(spec: dict, seed=None, graph: Graph | None = None,
                        betas=None) -> ContinuousData:
    """Random smooth graph signals built from sinusoids of frequencies ``betas``.

    Spec keys: ``n``, ``p`` (Erdos-Renyi), ``m`` (signal count), ``n_betas``,
    ``beta_range``, ``variance_scale``, ``graph_decay``.
    """
    rng = np.random.default_rng(seed)
    if graph is None:
        graph = erdos_renyi(int(spec.get("n", 30)), float(spec.get("p", 0.5)),
                            int(rng.integers(2 ** 32)), connected=True)
    gb = eigendecompose(graph_matrices(graph).laplacian)
    if betas is None:
        betas = spec.get("betas")
    if betas is None:
        lo, hi = spec.get("beta_range", (1.0, 15.0))
        betas = rng.uniform(lo, hi, size=int(spec.get("n_betas", 3)))
    betas = np.asarray(betas, float)
    var = continuous_variances(gb.eigenvalues, betas.size, float(spec.get("variance_scale", 1.0)),
                               float(spec.get("graph_decay", 1.0)))
    m = int(spec.get("m", 60))
    coef = rng.standard_normal((m,) + var.shape) * np.sqrt(var)
    return ContinuousData(graph, gb, betas, coef)


def generate_synthetic(spec: dict, seed=None):
    """Dispatch on ``spec["kind"]``: ``euclidean_vertex`` or ``continuous``."""
    kind = spec.get("kind")
    if kind == "euclidean_vertex":
        return generate_euclidean_vertex(spec, seed)
    if kind == "continuous":
        return generate_continuous(spec, seed)
    raise InvalidSpec(f"unknown synthetic data kind {kind!r}")


def synthetic_graph(spec: dict, seed=None) -> Graph:
    """Graph from a spec dict; adds ``knn`` on random unit-square coordinates."""
    if spec.get("kind") == "knn":
        rng = np.random.default_rng(seed)
        return knn_graph(rng.random((int(spec["n"]), 2)), int(spec.get("k", 5)))
    spec = dict(spec)
    if spec.get("kind") == "erdos_renyi" and spec.get("seed") is None:
        spec["seed"] = seed
    return generate_graph(spec)
