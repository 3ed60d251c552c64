import json

import numpy as np
import pytest

from ggsp.errors import ParseError
from ggsp.estimation import SamplePlan, variational_em
from ggsp.graph import build_graph
from ggsp.io import (
    read_basis_csv,
    read_coords_csv,
    read_edgelist,
    read_em_json,
    read_plan_csv,
    write_basis_csv,
    write_edgelist,
    write_em_json,
    write_matrix_csv,
    write_plan_csv,
)
from ggsp.spectral import eigendecompose
from ggsp.graph import graph_matrices, path_graph


def test_edgelist_roundtrip(tmp_path):
    g = build_graph(4, [(0, 1, 0.5), (2, 3, 1 / 3)])
    p = tmp_path / "g.txt"
    write_edgelist(p, g)
    assert p.read_text().splitlines()[0] == "n=4"
    assert read_edgelist(p) == g


def test_edgelist_errors(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("0 1 1.0\n")
    with pytest.raises(ParseError, match="line 1"):
        read_edgelist(p)
    p.write_text("n=3\n0 1\n")
    with pytest.raises(ParseError, match="line 2"):
        read_edgelist(p)


def test_coords(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("id,x,y\n1,0.5,0.5\n0,0,1\n")
    np.testing.assert_array_equal(read_coords_csv(p), [[0, 1], [0.5, 0.5]])
    p.write_text("id,x\n0,1\n")
    with pytest.raises(ParseError):
        read_coords_csv(p)


def test_basis_and_matrix_csv(tmp_path):
    b = eigendecompose(graph_matrices(path_graph(4)).laplacian)
    p = tmp_path / "b.csv"
    write_basis_csv(p, b)
    back = read_basis_csv(p)
    np.testing.assert_array_equal(back.eigenvalues, b.eigenvalues)
    np.testing.assert_array_equal(back.eigenvectors, b.eigenvectors)
    write_matrix_csv(tmp_path / "m.csv", np.eye(2))
    assert (tmp_path / "m.csv").read_text().splitlines()[0] == "1,0"


def test_plan_csv_roundtrip(tmp_path):
    plan = SamplePlan([[0.1, 0.2], [-1.0]])
    p = tmp_path / "plan.csv"
    write_plan_csv(p, plan, [1.0, np.nan, 3.0])
    back, vals = read_plan_csv(p)
    np.testing.assert_array_equal(back.flat_times(), plan.flat_times())
    assert vals[0] == 1.0 and np.isnan(vals[1])


def test_em_json(tmp_path, rng):
    fit = variational_em(rng.standard_normal(10), rng.standard_normal((10, 3)), max_iter=5)
    p = tmp_path / "em.json"
    write_em_json(p, fit)
    assert set(json.loads(p.read_text())) == {"p", "sigma2", "converged", "iterations"}
    np.testing.assert_allclose(read_em_json(p)["p"], fit.p)
