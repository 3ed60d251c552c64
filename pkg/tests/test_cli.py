import csv
import json

import numpy as np
import pytest

from ggsp.cli import main
from ggsp.errors import ConfigError
from ggsp.experiments import frameworks as fw
from ggsp.experiments.runner import ExperimentConfig, run_experiment
from ggsp.graph import graph_matrices, knn_graph
from ggsp.io import write_edgelist
from ggsp.spectral import eigendecompose, fourier_basis_cycle, identity_basis

DENOISE = {"experiment": "denoise", "graph": {"kind": "knn", "n": 12},
           "data": {"kind": "euclidean_vertex", "n": 12, "d": 3, "m": 40},
           "snr_db": [0, 10], "repetitions": 2}
COMPLETE = {"experiment": "complete", "graph": {"kind": "knn", "n": 8},
            "data": {"kind": "euclidean_vertex", "n": 8, "d": 3, "days": 8, "hours": 6},
            "missing": {"kind": "consecutive", "q": 1 / 12, "hidden_fractions": [0.1]},
            "repetitions": 2}
CONTINUOUS = {"experiment": "continuous", "graph": {"kind": "erdos_renyi", "n": 6, "p": 0.6},
              "data": {"kind": "continuous", "train": 4, "test": 4, "eval_points": 64},
              "samples_per_vertex": [10], "snr_db": [8.6], "m0": 3, "repetitions": 2,
              "em": {"max_iter": 20}}


def _run(tmp_path, cfg, name, seed=5):
    cpath = tmp_path / f"{name}.json"
    cpath.write_text(json.dumps(cfg))
    out = tmp_path / f"out_{name}"
    rc = main([cfg["experiment"], "--config", str(cpath), "--seed", str(seed), "--out", str(out)])
    return rc, out


def _rows(out):
    with open(out / "curves.csv") as fh:
        return list(csv.DictReader(fh))


def test_denoise_output_contract(tmp_path):
    rc, out = _run(tmp_path, DENOISE, "d")
    assert rc == 0
    rows = _rows(out)
    assert list(rows[0]) == ["sweep", "framework", "rep", "metric", "value"]
    snr = [r for r in rows if r["metric"] == "snr_db"]
    assert len(snr) == 2 * 3 * 2
    assert {(r["sweep"], r["framework"], r["rep"]) for r in snr} == {
        (s, f, r) for s in ("0", "10") for f in ("GRP", "TV", "GSP") for r in ("0", "1")}
    report = json.loads((out / "report.json").read_text())
    assert report["repetitions"] == 2 and report["runtime_seconds"] > 0


def test_complete_reports_hidden_fraction(tmp_path):
    rc, out = _run(tmp_path, COMPLETE, "c")
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert 0 < report["hidden_fraction"]["0.1"]["mean"] < 0.3
    metrics = {r["metric"] for r in _rows(out)}
    assert {"normalized_error", "normalized_error_all"} <= metrics


def test_continuous_rows(tmp_path):
    rc, out = _run(tmp_path, CONTINUOUS, "t")
    assert rc == 0
    rows = _rows(out)
    assert {r["framework"] for r in rows} == {"GRP", "TV", "TS"}
    assert all(r["metric"] == "relative_error" for r in rows)


@pytest.mark.parametrize("cfg", [DENOISE, COMPLETE, CONTINUOUS])
def test_determinism(tmp_path, cfg):
    rc1, out1 = _run(tmp_path, cfg, "a", seed=11)
    rc2, out2 = _run(tmp_path, cfg, "b", seed=11)
    assert rc1 == rc2 == 0
    assert (out1 / "curves.csv").read_bytes() == (out2 / "curves.csv").read_bytes()


def test_exit_codes(tmp_path):
    bad = dict(DENOISE, repetitions=0)
    assert _run(tmp_path, bad, "bad")[0] == 2
    assert main(["denoise", "--config", str(tmp_path / "missing.json"), "--seed", "1",
                 "--out", str(tmp_path / "o")]) == 2
    assert _run(tmp_path, dict(DENOISE, frameworks=["TS"]), "fw")[0] == 2
    # config/command mismatch
    cpath = tmp_path / "x.json"
    cpath.write_text(json.dumps(DENOISE))
    assert main(["complete", "--config", str(cpath), "--seed", "1", "--out", str(tmp_path / "o")]) == 2
    # malformed data file
    data = tmp_path / "data.csv"
    data.write_text("sample,vertex,coord,value\n0,0,0,oops\n")
    edges = tmp_path / "g.txt"
    write_edgelist(edges, knn_graph(np.random.default_rng(0).random((6, 2)), 2))
    cfg = dict(DENOISE, graph={"kind": "edgelist", "path": str(edges)},
               data={"kind": "csv", "path": str(data)})
    assert _run(tmp_path, cfg, "data")[0] == 3


def test_csv_source_runs(tmp_path):
    from ggsp.experiments.data import generate_euclidean_vertex, write_samples_csv
    d = generate_euclidean_vertex({"n": 8, "d": 3, "m": 30}, seed=0)
    data = tmp_path / "s.csv"
    write_samples_csv(data, d.samples)
    edges = tmp_path / "g.txt"
    write_edgelist(edges, d.graph)
    cfg = dict(DENOISE, graph={"kind": "edgelist", "path": str(edges)},
               data={"kind": "csv", "path": str(data)})
    rc, out = _run(tmp_path, cfg, "csv")
    assert rc == 0 and len(_rows(out)) > 0


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "denoise", "graph": {}, "data": {}, "bogus": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "fly", "graph": {}, "data": {}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(dict(CONTINUOUS, sampling="uniform"))


def test_parallel_matches_serial():
    cfg = ExperimentConfig.from_dict(DENOISE, seed=3)
    serial = run_experiment(cfg)["summary"]
    cfg.workers = 2
    assert run_experiment(cfg)["summary"] == serial


def test_framework_reductions(rng):
    # TV and GSP are GRP with the Hilbert basis swapped out
    g = knn_graph(rng.random((10, 2)), 3)
    gb = eigendecompose(graph_matrices(g).laplacian)
    train = rng.standard_normal((30, 10, 3))
    test = rng.standard_normal((5, 10, 3))
    out = fw.denoise_frameworks(train, test, gb, 0.2, ["TV", "GSP"])
    for name, hb in (("TV", fourier_basis_cycle(3)), ("GSP", identity_basis(3))):
        mean, filt = fw.fit_denoiser(train, gb, hb, 0.2)
        from ggsp.wiener import denoise
        np.testing.assert_allclose(out[name], denoise(test - mean, filt) + mean, atol=1e-12)
