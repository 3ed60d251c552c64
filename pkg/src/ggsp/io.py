"""Text formats for graphs, coordinates, bases, filters, sample plans and EM results."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ParseError
from .estimation import EMResult, SamplePlan
from .graph import Graph, build_graph
from .spectral import SpectralBasis, _basis


def write_edgelist(path, g: Graph) -> None:
    with open(path, "w") as fh:
        fh.write(f"n={g.n}\n")
        for i, j, w in g.edges:
            fh.write(f"{i} {j} {float(w)!r}\n")


def read_edgelist(path) -> Graph:
    """Read the ``n=<count>`` header followed by ``i j w`` lines (blank lines and ``#`` comments skipped)."""
    n = None
    edges = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if n is None:
                if not line.startswith("n="):
                    raise ParseError("expected header 'n=<count>'", lineno)
                try:
                    n = int(line[2:])
                except ValueError:
                    raise ParseError(f"bad vertex count {line[2:]!r}", lineno) from None
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(f"expected 'i j w', got {line!r}", lineno)
            try:
                edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
            except ValueError:
                raise ParseError(f"bad edge {line!r}", lineno) from None
    if n is None:
        raise ParseError("missing header 'n=<count>'", 1)
    return build_graph(n, edges)


def read_coords_csv(path) -> np.ndarray:
    """Coordinates from a CSV with columns ``id,x,y``; rows are ordered by id."""
    rows = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["id", "x", "y"]:
            raise ParseError("expected header 'id,x,y'", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}", lineno)
            try:
                i, x, y = int(row[0]), float(row[1]), float(row[2])
            except ValueError:
                raise ParseError(f"bad row {row!r}", lineno) from None
            if i in rows:
                raise ParseError(f"duplicate id {i}", lineno)
            rows[i] = (x, y)
    if sorted(rows) != list(range(len(rows))):
        raise ParseError("ids must be 0..n-1", None)
    return np.array([rows[i] for i in range(len(rows))], dtype=float).reshape(-1, 2)


def write_basis_csv(path, b: SpectralBasis) -> None:
    """First row holds the eigenvalues, then one column per eigenvector."""
    np.savetxt(path, np.vstack([b.eigenvalues, b.eigenvectors]), delimiter=",", fmt="%.17g")


def read_basis_csv(path) -> SpectralBasis:
    a = np.loadtxt(path, delimiter=",", ndmin=2)
    return _basis(a[0], a[1:])


def write_matrix_csv(path, M) -> None:
    """Dense filter coefficients or operators, one row per line."""
    np.savetxt(path, np.atleast_2d(np.asarray(M, dtype=float)), delimiter=",", fmt="%.17g")


def write_plan_csv(path, plan: SamplePlan, values=None) -> None:
    values = np.full(plan.size, np.nan) if values is None else np.asarray(values, float).ravel()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vertex", "t", "value"])
        for v, t, y in zip(plan.vertex_index(), plan.flat_times(), values):
            w.writerow([int(v), repr(float(t)), "" if np.isnan(y) else repr(float(y))])


def read_plan_csv(path) -> tuple[SamplePlan, np.ndarray]:
    """Returns the plan and the values in plan order (NaN where the value column is empty)."""
    per = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["vertex", "t", "value"]:
            raise ParseError("expected header 'vertex,t,value'", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                v, t = int(row[0]), float(row[1])
                y = float(row[2]) if row[2].strip() else np.nan
            except (ValueError, IndexError):
                raise ParseError(f"bad row {row!r}", lineno) from None
            per.setdefault(v, []).append((t, y))
    n = max(per) + 1 if per else 0
    times = [np.array([t for t, _ in per.get(v, [])]) for v in range(n)]
    values = np.array([y for v in range(n) for _, y in per.get(v, [])])
    return SamplePlan(times), values


def write_em_json(path, result: EMResult) -> None:
    Path(path).write_text(json.dumps(result.to_json(), indent=2) + "\n")


def read_em_json(path) -> dict:
    d = json.loads(Path(path).read_text())
    d["p"] = np.asarray(d["p"], dtype=float)
    return d
