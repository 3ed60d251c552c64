"""Experiment configuration, execution and report writing."""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..graph import Graph, cartesian_product, correlation_graph, cycle_graph, graph_matrices, knn_graph
from ..io import read_coords_csv, read_edgelist
from ..spectral import eigendecompose, identity_basis
from . import frameworks as fw
from .data import (
    MissingSpec,
    generate_continuous,
    generate_euclidean_vertex,
    ingest_csv,
    lanes_for_fraction,
    make_missing_mask,
    metrics,
    synthetic_graph,
)

log = logging.getLogger(__name__)

KINDS = ("denoise", "complete", "continuous")
DEFAULT_FRAMEWORKS = {
    "denoise": ["GRP", "TV", "GSP"],
    "complete": ["GRP", "TV-zero", "TV-interp", "GSP"],
    "continuous": ["GRP", "TV", "TS"],
}
KNOWN_FRAMEWORKS = {
    "denoise": {"GRP", "TV", "GSP"},
    "complete": {"GRP", "TV-zero", "TV-interp", "GSP"},
    "continuous": {"GRP", "TV", "TS"},
}


@dataclass
class ExperimentConfig:
    experiment: str
    frameworks: list
    graph: dict
    data: dict
    repetitions: int = 1
    seed: int = 0
    out: str | None = None
    snr_db: list = field(default_factory=lambda: [0.0])
    missing: dict = field(default_factory=dict)
    noise_snr_db: float = 20.0
    error_on: str = "hidden"
    sampling: str = "equispaced"
    samples_per_vertex: list = field(default_factory=lambda: [60])
    m0: int = 20
    em: dict = field(default_factory=dict)
    train_fraction: float = 0.5
    workers: int = 1

    @classmethod
    def from_dict(cls, d: dict, seed=None, out=None) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        d = dict(d)
        kind = d.get("experiment")
        if kind not in KINDS:
            raise ConfigError(f"experiment must be one of {KINDS}, got {kind!r}")
        d.setdefault("frameworks", list(DEFAULT_FRAMEWORKS[kind]))
        if seed is not None:
            d["seed"] = seed
        if out is not None:
            d["out"] = str(out)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("graph", "data"):
            if not isinstance(d.get(key), dict):
                raise ConfigError(f"config needs a '{key}' object")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def validate(self):
        bad = set(self.frameworks) - KNOWN_FRAMEWORKS[self.experiment]
        if bad or not self.frameworks:
            raise ConfigError(f"frameworks {sorted(bad)} not valid for {self.experiment}")
        if int(self.repetitions) < 1:
            raise ConfigError("repetitions must be >= 1")
        if not (0 < self.train_fraction < 1):
            raise ConfigError("train_fraction must be in (0, 1)")
        if self.error_on not in ("hidden", "all"):
            raise ConfigError("error_on must be 'hidden' or 'all'")
        for key in ("path",):
            for section in (self.graph, self.data):
                if key in section and not Path(section[key]).exists():
                    raise ConfigError(f"path does not exist: {section[key]}")
        if self.experiment == "complete":
            MissingSpec(**_missing_template(self.missing))
        if self.experiment == "continuous" and self.sampling == "uniform" and "TV" in self.frameworks:
            raise ConfigError("TV needs grid samples; drop it for uniform sampling")


def _missing_template(missing: dict) -> dict:
    kind = missing.get("kind", "consecutive")
    if kind == "consecutive":
        return {"kind": kind, "q": missing.get("q", 1 / 12), "lanes_per_day": 0}
    if kind == "uniform":
        return {"kind": kind, "rate": 0.0}
    return {"kind": kind}


def load_config(path, seed=None, out=None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return ExperimentConfig.from_dict(d, seed=seed, out=out)


def rep_seed(seed: int, rep: int):
    return np.random.SeedSequence([int(seed), int(rep)])


# ---------------------------------------------------------------------------
# graph and data sources


def resolve_graph(spec: dict, seed, samples=None) -> Graph:
    kind = spec.get("kind")
    if kind == "edgelist":
        return read_edgelist(spec["path"])
    if kind == "coords":
        return knn_graph(read_coords_csv(spec["path"]), int(spec.get("k", 5)))
    if kind == "correlation":
        if samples is None:
            raise ConfigError("correlation graph needs sample data")
        # vertex series: concatenate one coordinate across samples
        coord = int(spec.get("coord", 0))
        series = samples[:, :, coord].T
        series = series[:, ~np.isnan(series).any(axis=0)]
        return correlation_graph(series, float(spec.get("threshold", 0.75)))
    try:
        return synthetic_graph(spec, seed)
    except KeyError as exc:
        raise ConfigError(f"graph spec missing {exc}") from None


def _noise_var(power: float, snr: float) -> float:
    return power / 10 ** (snr / 10)


def _split(m: int, frac: float, rng):
    perm = rng.permutation(m)
    k = int(round(m * frac))
    return np.sort(perm[:k]), np.sort(perm[k:])


# ---------------------------------------------------------------------------
# experiment bodies; each returns a list of (sweep, framework, metric, value)


def _denoise_rep(cfg: ExperimentConfig, rep: int, graph: Graph, source):
    rng = np.random.default_rng(rep_seed(cfg.seed, rep))
    if source is None:
        data = generate_euclidean_vertex(cfg.data, rng, graph=graph)
        samples = data.samples
    else:
        samples = source
    gb = eigendecompose(graph_matrices(graph).laplacian)
    tr, te = _split(samples.shape[0], cfg.train_fraction, rng)
    power = float(np.mean(samples ** 2))
    rows = []
    for snr in cfg.snr_db:
        s2 = _noise_var(power, float(snr))
        noisy = samples + np.sqrt(s2) * rng.standard_normal(samples.shape)
        est = fw.denoise_frameworks(noisy[tr], noisy[te], gb, s2, cfg.frameworks)
        for name in cfg.frameworks:
            m = metrics(est[name], samples[te], noisy[te])
            rows += [(snr, name, k, v) for k, v in m.items()]
    return rows, {}


def _completion_rep(cfg: ExperimentConfig, rep: int, graph: Graph, source):
    rng = np.random.default_rng(rep_seed(cfg.seed, rep))
    if source is None:
        spec = dict(cfg.data)
        spec.setdefault("hours", 24)
        days = generate_euclidean_vertex(spec, rng, graph=graph).samples
    else:
        days = source
    D, H, n, d = days.shape
    gb = eigendecompose(graph_matrices(graph).laplacian)
    power = float(np.mean(days ** 2))
    s2 = _noise_var(power, cfg.noise_snr_db)
    noisy = days + np.sqrt(s2) * rng.standard_normal(days.shape)
    tr, te = _split(D, cfg.train_fraction, rng)
    kind = cfg.missing.get("kind", "consecutive")
    rows, extra = [], {}
    if kind == "consecutive":
        q = float(cfg.missing.get("q", 1 / 12))
        sweep = cfg.missing.get("hidden_fractions")
        if sweep is None:
            sweep = [None]
        for frac in sweep:
            lanes = (int(cfg.missing.get("lanes_per_day", 0)) if frac is None
                     else lanes_for_fraction(frac, q, H, n * d))
            spec = MissingSpec("consecutive", q=q, lanes_per_day=lanes)
            mask = make_missing_mask(spec, (D, n, d, H), rng).transpose(0, 3, 1, 2)
            key = lanes if frac is None else frac
            extra[str(key)] = float(1 - mask[te].mean())
            rows += _complete_frameworks(cfg, key, noisy, days, mask, tr, te, gb, s2)
    else:
        for rate in cfg.missing.get("rates", [cfg.missing.get("rate", 0.1)]):
            mask = np.ones(days.shape, dtype=bool)
            mask[te] = make_missing_mask(MissingSpec("uniform", rate=rate), days[te].shape, rng)
            extra[str(rate)] = float(1 - mask[te].mean())
            rows += _complete_uniform(cfg, rate, noisy, days, mask, tr, te, graph, s2)
    return rows, {"hidden_fraction": extra}


def _score(cfg, key, name, est, truth, hidden):
    where = hidden if cfg.error_on == "hidden" else None
    if where is not None and not where.any():
        where = None
    m = metrics(est, truth, where=where)
    out = [(key, name, k, v) for k, v in m.items()]
    if cfg.error_on == "hidden":
        m_all = metrics(est, truth)
        out.append((key, name, "normalized_error_all", m_all["normalized_error"]))
    return out


def _complete_frameworks(cfg, key, noisy, truth, mask, tr, te, gb, s2):
    D, H, n, d = truth.shape
    obs = np.where(mask, noisy, np.nan)
    train = obs[tr]
    hidden = ~mask[te]
    rows = []
    for name in cfg.frameworks:
        if name in ("GRP", "GSP"):
            snaps = train.reshape(-1, n, d)
            hb = fw.hilbert_basis_for(name, snaps, d)
            est = fw.complete_snapshots(snaps, obs[te].reshape(-1, n, d),
                                        mask[te].reshape(-1, n, d), gb, hb, s2)
            est = est.reshape(len(te), H, n, d)
        else:
            fill = name.split("-", 1)[1] if "-" in name else "interp"
            est = np.empty((len(te), H, n, d))
            for f in range(d):
                tr_f = train[..., f].transpose(0, 2, 1)
                te_f = obs[te][..., f].transpose(0, 2, 1)
                m_f = mask[te][..., f].transpose(0, 2, 1)
                e = fw.complete_tv(tr_f, te_f, m_f, gb, s2, fill)
                est[..., f] = e.transpose(0, 2, 1)
        rows += _score(cfg, key, name, est, truth[te], hidden)
    return rows


def _complete_uniform(cfg, key, noisy, truth, mask, tr, te, graph, s2):
    """Uniform model: clean training days, product of the sensor graph and the hour cycle."""
    D, H, n, d = truth.shape
    prod = cartesian_product(cycle_graph(H), graph)
    pb = eigendecompose(graph_matrices(prod).laplacian)
    train = noisy[tr].reshape(len(tr), H * n, d)
    test = np.where(mask[te], noisy[te], np.nan).reshape(len(te), H * n, d)
    m_te = mask[te].reshape(len(te), H * n, d)
    hidden = ~mask[te]
    rows = []
    for name in cfg.frameworks:
        hb = fw.hilbert_basis_for("GRP", train, d) if name == "GRP" else identity_basis(d)
        est = fw.complete_snapshots(train, test, m_te, pb, hb, s2).reshape(len(te), H, n, d)
        rows += _score(cfg, key, name, est, truth[te], hidden)
    return rows


def _continuous_rep(cfg: ExperimentConfig, rep: int, graph: Graph, source):
    rng = np.random.default_rng(rep_seed(cfg.seed, rep))
    spec = dict(cfg.data)
    n_tr = int(spec.get("train", 60))
    n_te = int(spec.get("test", 60))
    spec["m"] = n_tr + n_te
    data = generate_continuous(spec, rng, graph=graph)
    gb = data.graph_basis
    eval_times = np.linspace(-np.pi, np.pi, int(spec.get("eval_points", 512)))
    truth = data.evaluate(eval_times)[n_tr:]
    em_opts = {"max_iter": 50, "tol": 1e-5, "prune": 1e-8}
    em_opts.update(cfg.em)
    rows = []
    unconverged = 0
    sweeps = [(int(m), float(s)) for m in cfg.samples_per_vertex for s in cfg.snr_db]
    multi_m = len(cfg.samples_per_vertex) > 1
    multi_s = len(cfg.snr_db) > 1
    for m, snr in sweeps:
        key = "m=%d;snr_db=%g" % (m, snr) if (multi_m and multi_s) else (m if multi_m else snr)
        plan_tr, idx_tr = fw.sample_plan(graph.n, m, cfg.sampling, rng)
        plan_te, idx_te = fw.sample_plan(graph.n, m, cfg.sampling, rng)
        clean_tr = data.evaluate_plan(plan_tr.times)[:n_tr].T
        clean_te = data.evaluate_plan(plan_te.times)[n_tr:].T
        s2 = _noise_var(float(np.mean(clean_tr ** 2)), snr)
        y_tr = clean_tr + np.sqrt(s2) * rng.standard_normal(clean_tr.shape)
        y_te = clean_te + np.sqrt(s2) * rng.standard_normal(clean_te.shape)
        for name in cfg.frameworks:
            if name == "GRP":
                est, fit = fw.recover_grp(y_tr, plan_tr, y_te, plan_te, gb, cfg.m0, eval_times, em_opts)
                unconverged += not fit.converged
            elif name == "TS":
                est = fw.recover_ts(y_tr, plan_tr, y_te, plan_te, cfg.m0, eval_times, em_opts)
            else:
                est = fw.recover_tv(y_tr, idx_tr, y_te, idx_te, gb, m, cfg.m0, eval_times, em_opts)
            rel = [metrics(e, x)["relative_error"] for e, x in zip(est, truth)]
            rows.append((key, name, "relative_error", float(np.mean(rel))))
    return rows, {"betas": data.betas.tolist(), "grp_em_unconverged": unconverged}


RUNNERS = {"denoise": _denoise_rep, "complete": _completion_rep, "continuous": _continuous_rep}


def _load_source(cfg: ExperimentConfig):
    if cfg.data.get("kind") != "csv":
        return None
    samples = ingest_csv(cfg.data["path"], cfg.data.get("schema", "long"))
    if cfg.experiment == "complete":
        H = int(cfg.data.get("hours_per_day", 24))
        m, n, d = samples.shape
        if m % H:
            raise ConfigError(f"{m} snapshots do not split into days of {H} hours")
        samples = samples.reshape(m // H, H, n, d)
        if np.isnan(samples).any():
            raise ConfigError("completion input must be complete; missingness is simulated")
    elif np.isnan(samples).any():
        keep = ~np.isnan(samples).any(axis=(1, 2))
        samples = samples[keep]
    return samples


def _run_one(args):
    cfg, rep, graph, source = args
    return RUNNERS[cfg.experiment](cfg, rep, graph, source)


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run every repetition, write ``curves.csv`` and ``report.json``, return the report."""
    start = time.perf_counter()
    source = _load_source(cfg)
    gseed = np.random.SeedSequence([int(cfg.seed), 2 ** 31 - 1])
    gspec = dict(cfg.graph)
    if cfg.experiment == "continuous" and gspec.get("kind") == "erdos_renyi":
        gspec.setdefault("connected", True)
    if gspec.get("kind") == "knn" and "n" not in gspec:
        if source is not None:
            raise ConfigError("a knn graph over CSV data needs a coords file")
        gspec["n"] = int(cfg.data.get("n", 30))
    flat = source.reshape(-1, *source.shape[-2:]) if source is not None else None
    graph = resolve_graph(gspec, int(np.random.default_rng(gseed).integers(2 ** 32)), flat)
    jobs = [(cfg, rep, graph, source) for rep in range(int(cfg.repetitions))]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    rows = []
    extras = []
    for rep, (r, extra) in enumerate(results):
        rows += [(sweep, name, rep, metric, value) for sweep, name, metric, value in r]
        extras.append(extra)
    report = build_report(cfg, rows, extras, time.perf_counter() - start, graph)
    if cfg.out:
        write_outputs(cfg.out, rows, report)
    return report


def build_report(cfg, rows, extras, runtime, graph) -> dict:
    agg = {}
    for sweep, name, rep, metric, value in rows:
        agg.setdefault((str(sweep), name, metric), []).append(value)
    summary = [
        {"sweep": s, "framework": f, "metric": m, "mean": float(np.mean(v)),
         "std": float(np.std(v)), "n": len(v)}
        for (s, f, m), v in agg.items()
    ]
    report = {
        "experiment": cfg.experiment,
        "seed": int(cfg.seed),
        "repetitions": int(cfg.repetitions),
        "frameworks": list(cfg.frameworks),
        "graph": {"n": graph.n, "edges": graph.num_edges},
        "summary": summary,
        "per_repetition": extras,
        "runtime_seconds": runtime,
    }
    if cfg.experiment == "complete":
        fr = {}
        for e in extras:
            for k, v in e.get("hidden_fraction", {}).items():
                fr.setdefault(k, []).append(v)
        report["hidden_fraction"] = {
            k: {"mean": float(np.mean(v)), "min": float(np.min(v)), "max": float(np.max(v))}
            for k, v in fr.items()
        }
    return report


def write_outputs(out_dir, rows, report) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "curves.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sweep", "framework", "rep", "metric", "value"])
        for sweep, name, rep, metric, value in rows:
            w.writerow([sweep, name, rep, metric, repr(float(value))])
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
