import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ggsp.errors import (
    ConnectivityTimeout,
    DuplicateEdge,
    DuplicatePoints,
    IndexOutOfRange,
    InvalidSpec,
    NonpositiveWeight,
    SelfLoop,
    TooFewPoints,
    ZeroVarianceRow,
)
from ggsp.graph import (
    build_graph,
    cartesian_product,
    correlation_graph,
    cycle_graph,
    erdos_renyi,
    from_adjacency,
    generate_graph,
    graph_matrices,
    is_connected,
    knn_graph,
    path_graph,
    tensor_product,
)


def test_build_graph_normalises_orientation():
    g = build_graph(3, [(2, 0, 1.5), (0, 1, 2.0)])
    assert g.edges == ((0, 1, 2.0), (0, 2, 1.5))
    assert g.num_edges == 2


@pytest.mark.parametrize("edges, exc", [
    ([(0, 3, 1.0)], IndexOutOfRange),
    ([(1, 1, 1.0)], SelfLoop),
    ([(0, 1, 0.0)], NonpositiveWeight),
    ([(0, 1, -2.0)], NonpositiveWeight),
    ([(0, 1, 1.0), (1, 0, 2.0)], DuplicateEdge),
])
def test_build_graph_rejects(edges, exc):
    with pytest.raises(exc):
        build_graph(3, edges)


def test_laplacian_of_path():
    L = graph_matrices(path_graph(3)).laplacian
    np.testing.assert_array_equal(L, [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])


def test_cycle_laplacian_spectrum():
    T = 7
    lam = np.linalg.eigvalsh(graph_matrices(cycle_graph(T)).laplacian)
    expect = np.sort(2 - 2 * np.cos(2 * np.pi * np.arange(T) / T))
    np.testing.assert_allclose(lam, expect, atol=1e-12)


def test_from_adjacency_roundtrip(rng):
    W = np.triu(rng.random((6, 6)) * (rng.random((6, 6)) < 0.5), 1)
    W = W + W.T
    np.testing.assert_array_equal(graph_matrices(from_adjacency(W)).adjacency, W)


def test_erdos_renyi_deterministic_and_connected():
    a = erdos_renyi(30, 0.5, seed=4, connected=True)
    b = erdos_renyi(30, 0.5, seed=4, connected=True)
    assert a == b
    assert is_connected(a)


def test_erdos_renyi_timeout():
    with pytest.raises(ConnectivityTimeout):
        erdos_renyi(40, 0.01, seed=0, connected=True, max_retries=3)


def test_generate_graph_specs():
    assert generate_graph({"kind": "cycle", "T": 5}).num_edges == 5
    assert generate_graph({"kind": "path", "n": 4}).num_edges == 3
    g1 = generate_graph({"kind": "erdos_renyi", "n": 10, "p": 0.3, "seed": 9})
    g2 = generate_graph({"kind": "erdos_renyi", "n": 10, "p": 0.3, "seed": 9})
    assert g1.edges == g2.edges
    with pytest.raises(InvalidSpec):
        generate_graph({"kind": "star"})
    with pytest.raises(InvalidSpec):
        generate_graph({"kind": "path"})


def test_cartesian_product_matches_kron_sum():
    g, h = path_graph(3), cycle_graph(4)
    Wg = graph_matrices(g).adjacency
    Wh = graph_matrices(h).adjacency
    W = graph_matrices(cartesian_product(g, h)).adjacency
    np.testing.assert_array_equal(W, np.kron(Wg, np.eye(4)) + np.kron(np.eye(3), Wh))


def test_tensor_product_matches_kron():
    g = build_graph(3, [(0, 1, 2.0), (1, 2, 0.5)])
    h = cycle_graph(3)
    W = graph_matrices(tensor_product(g, h)).adjacency
    np.testing.assert_allclose(W, np.kron(graph_matrices(g).adjacency, graph_matrices(h).adjacency))


def test_knn_graph_weights_and_symmetry(rng):
    X = rng.random((12, 2))
    g = knn_graph(X, k=3)
    W = graph_matrices(g).adjacency
    np.testing.assert_array_equal(W, W.T)
    # every vertex keeps at least its k neighbours
    assert ((W > 0).sum(axis=1) >= 3).all()
    from scipy.spatial.distance import pdist, squareform
    D = squareform(pdist(X))
    s2 = pdist(X).var()
    i, j, w = g.edges[0]
    assert w == pytest.approx(np.exp(-D[i, j] ** 2 / s2))


def test_knn_graph_errors():
    with pytest.raises(TooFewPoints):
        knn_graph(np.random.rand(5, 2), k=5)
    with pytest.raises(DuplicatePoints):
        knn_graph(np.array([[0, 0], [0, 0], [1, 1]], float), k=1)


def test_correlation_graph_threshold():
    t = np.linspace(0, 1, 50)
    S = np.vstack([t, 2 * t + 1, -t, np.sin(20 * t)])
    g = correlation_graph(S, 0.75)
    pairs = {(i, j) for i, j, _ in g.edges}
    assert {(0, 1), (0, 2), (1, 2)} <= pairs
    assert all(3 not in p for p in pairs)
    with pytest.raises(ZeroVarianceRow):
        correlation_graph(np.vstack([t, np.ones(50)]))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2 ** 31))
def test_laplacian_psd_with_zero_rowsums(n, seed):
    g = erdos_renyi(n, 0.5, seed=seed)
    L = graph_matrices(g).laplacian
    np.testing.assert_allclose(L.sum(axis=1), 0, atol=1e-12)
    assert np.linalg.eigvalsh(L).min() > -1e-10
