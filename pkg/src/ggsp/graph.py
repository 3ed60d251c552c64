"""Weighted undirected graphs, their matrices, products and data-driven builders."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

from .errors import (
    ConnectivityTimeout,
    DuplicateEdge,
    DuplicatePoints,
    IndexOutOfRange,
    InvalidSpec,
    NonpositiveWeight,
    SelfLoop,
    TooFewPoints,
    TooFewSamples,
    ZeroVarianceRow,
)


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph on vertices ``0..n-1``.

    ``edges`` holds ``(i, j, w)`` triples with ``i < j``, sorted.  Use
    :func:`build_graph` rather than the constructor so the invariants are
    checked.
    """

    n: int
    edges: tuple[tuple[int, int, float], ...]

    @property
    def num_edges(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class GraphMatrices:
    adjacency: np.ndarray
    degree: np.ndarray
    laplacian: np.ndarray


def build_graph(n: int, edges: Iterable[Sequence[float]]) -> Graph:
    """Validate an edge list and return a :class:`Graph`.

    Edges may be given in either orientation; they are stored as ``i < j``.

    Raises:
        IndexOutOfRange, SelfLoop, NonpositiveWeight, DuplicateEdge
    """
    n = int(n)
    if n < 1:
        raise InvalidSpec(f"vertex count must be >= 1, got {n}")
    seen = set()
    out = []
    for e in edges:
        if len(e) != 3:
            raise InvalidSpec(f"edge must be (i, j, w), got {e!r}")
        i, j, w = int(e[0]), int(e[1]), float(e[2])
        if not (0 <= i < n and 0 <= j < n):
            raise IndexOutOfRange(f"edge ({i}, {j}) outside 0..{n - 1}")
        if i == j:
            raise SelfLoop(f"self-loop at vertex {i}")
        if not (w > 0 and np.isfinite(w)):
            raise NonpositiveWeight(f"edge ({i}, {j}) has weight {w}")
        if i > j:
            i, j = j, i
        if (i, j) in seen:
            raise DuplicateEdge(f"duplicate edge ({i}, {j})")
        seen.add((i, j))
        out.append((i, j, w))
    out.sort()
    return Graph(n, tuple(out))


def from_adjacency(W: np.ndarray) -> Graph:
    W = np.asarray(W, dtype=float)
    iu, ju = np.nonzero(np.triu(W, 1))
    return build_graph(W.shape[0], zip(iu.tolist(), ju.tolist(), W[iu, ju].tolist()))


def graph_matrices(g: Graph) -> GraphMatrices:
    W = np.zeros((g.n, g.n))
    for i, j, w in g.edges:
        W[i, j] = W[j, i] = w
    D = np.diag(W.sum(axis=1))
    return GraphMatrices(W, D, D - W)


def laplacian(g: Graph) -> np.ndarray:
    return graph_matrices(g).laplacian


def is_connected(g: Graph) -> bool:
    if g.n == 1:
        return True
    rows = [e[0] for e in g.edges]
    cols = [e[1] for e in g.edges]
    A = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(g.n, g.n))
    ncomp, _ = connected_components(A, directed=False)
    return ncomp == 1


def cycle_graph(T: int) -> Graph:
    if T < 3:
        raise InvalidSpec(f"cycle needs T >= 3, got {T}")
    return build_graph(T, [(t, (t + 1) % T, 1.0) for t in range(T)])


def path_graph(n: int) -> Graph:
    if n < 1:
        raise InvalidSpec(f"path needs n >= 1, got {n}")
    return build_graph(n, [(i, i + 1, 1.0) for i in range(n - 1)])


def erdos_renyi(n: int, p: float, seed=None, connected: bool = False,
                max_retries: int = 1000) -> Graph:
    """G(n, p) with unit weights.

    With ``connected=True`` draws are rejected until one is connected.  All
    draws come from one generator seeded by ``seed``, so the accepted graph is
    reproducible.
    """
    if n < 1:
        raise InvalidSpec(f"n must be >= 1, got {n}")
    if not (0 < p <= 1):
        raise InvalidSpec(f"edge probability must be in (0, 1], got {p}")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    for _ in range(max(1, int(max_retries))):
        keep = rng.random(iu.size) < p
        g = build_graph(n, zip(iu[keep].tolist(), ju[keep].tolist(), [1.0] * int(keep.sum())))
        if not connected or is_connected(g):
            return g
    raise ConnectivityTimeout(f"no connected G({n}, {p}) after {max_retries} draws")


def generate_graph(spec: dict) -> Graph:
    """Build a graph from a small dict spec.

    Recognised kinds::

        {"kind": "cycle", "T": 24}
        {"kind": "path", "n": 5}
        {"kind": "erdos_renyi", "n": 30, "p": 0.5, "seed": 1,
         "connected": true, "max_retries": 1000}
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InvalidSpec(f"graph spec needs a 'kind': {spec!r}")
    kind = spec["kind"]
    try:
        if kind == "cycle":
            return cycle_graph(int(spec["T"]))
        if kind == "path":
            return path_graph(int(spec["n"]))
        if kind == "erdos_renyi":
            return erdos_renyi(int(spec["n"]), float(spec["p"]), spec.get("seed"),
                               bool(spec.get("connected", False)),
                               int(spec.get("max_retries", 1000)))
    except KeyError as exc:
        raise InvalidSpec(f"graph spec {kind!r} missing field {exc}") from None
    raise InvalidSpec(f"unknown graph kind {kind!r}")


def cartesian_product(g: Graph, h: Graph) -> Graph:
    """Cartesian product; vertex ``(u, v)`` has index ``u * h.n + v``."""
    m = h.n
    edges = []
    for u, u2, w in g.edges:
        edges.extend((u * m + v, u2 * m + v, w) for v in range(m))
    for v, v2, w in h.edges:
        edges.extend((u * m + v, u * m + v2, w) for u in range(g.n))
    return build_graph(g.n * m, edges)


def tensor_product(g: Graph, h: Graph) -> Graph:
    """Tensor (Kronecker) product; same vertex ordering as :func:`cartesian_product`."""
    m = h.n
    edges = []
    for u, u2, wg in g.edges:
        for v, v2, wh in h.edges:
            # each pair of undirected edges yields two product edges
            edges.append((u * m + v, u2 * m + v2, wg * wh))
            edges.append((u * m + v2, u2 * m + v, wg * wh))
    return build_graph(g.n * m, edges)


def knn_graph(coords, k: int = 5) -> Graph:
    """Symmetrised k-nearest-neighbour graph with Gaussian weights.

    An edge joins i and j when either is among the other's ``k`` nearest
    points.  Weights are ``exp(-d**2 / s2)`` where ``s2`` is the population
    variance of all pairwise distances.

    Args:
        coords: (n, dim) point coordinates.
        k: neighbours per point.
    """
    X = np.asarray(coords, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if k < 1:
        raise InvalidSpec(f"k must be >= 1, got {k}")
    if n < k + 1:
        raise TooFewPoints(f"{n} points cannot have {k} neighbours each")
    dvec = pdist(X)
    if np.any(dvec == 0):
        raise DuplicatePoints("coincident points give zero distances")
    s2 = dvec.var()
    D = squareform(dvec)
    np.fill_diagonal(D, np.inf)
    nbrs = np.argsort(D, axis=1, kind="stable")[:, :k]
    A = np.zeros((n, n), dtype=bool)
    A[np.repeat(np.arange(n), k), nbrs.ravel()] = True
    A |= A.T
    iu, ju = np.nonzero(np.triu(A, 1))
    w = np.exp(-D[iu, ju] ** 2 / s2)
    return build_graph(n, zip(iu.tolist(), ju.tolist(), w.tolist()))


def correlation_graph(samples, threshold: float = 0.75) -> Graph:
    """Unit-weight graph joining rows whose |Pearson correlation| exceeds ``threshold``.

    Args:
        samples: (n, T) array, one row per vertex.
    """
    S = np.asarray(samples, dtype=float)
    if S.ndim != 2 or S.shape[1] < 2:
        raise TooFewSamples("need an (n, T) array with T >= 2")
    if np.any(S.std(axis=1) == 0):
        bad = np.flatnonzero(S.std(axis=1) == 0)
        raise ZeroVarianceRow(f"rows with zero variance: {bad.tolist()}")
    R = np.corrcoef(S)
    iu, ju = np.nonzero(np.triu(np.abs(R) > threshold, 1))
    return build_graph(S.shape[0], zip(iu.tolist(), ju.tolist(), [1.0] * iu.size))
