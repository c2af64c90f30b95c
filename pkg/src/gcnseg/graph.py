"""Undirected weighted graphs over pixel grids and their matrix operators.

Graphs are stored as canonical edge lists (i < j, nonnegative weight) with
an implied symmetric adjacency and zero diagonal.  Hot paths apply the
operators in sparse CSR form; dense matrices are materialized only for
small graphs (one 64x64 patch or less) and for oracle checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError

# Dense materialization is reserved for one-patch graphs and oracle checks.
DENSE_NODE_LIMIT = 4096


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph with canonical (i < j) edge list."""

    n: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if self.n < 1:
            raise DimensionError(f"graph needs at least one node, got n={self.n}")
        canon = tuple((int(i), int(j), float(w)) for i, j, w in self.edges)
        object.__setattr__(self, "edges", canon)
        seen = set()
        for i, j, w in canon:
            if not (0 <= i < j < self.n):
                raise ValueError(f"edge ({i}, {j}) is not canonical for n={self.n}")
            if not (math.isfinite(w) and w >= 0.0):
                raise ValueError(f"edge ({i}, {j}) has invalid weight {w}")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Edge endpoints and weights as flat arrays (empty for edgeless graphs)."""
        if not self.edges:
            z = np.zeros(0, dtype=np.intp)
            return z, z.copy(), np.zeros(0, dtype=np.float64)
        arr = np.asarray(self.edges, dtype=np.float64)
        return arr[:, 0].astype(np.intp), arr[:, 1].astype(np.intp), arr[:, 2]


def build_grid_graph(height: int, width: int, connectivity: int = 4) -> Graph:
    """Pixel-grid graph with row-major node ids (r * width + c) and unit weights.

    connectivity 4 links horizontal/vertical neighbours, 8 adds the diagonals.
    """
    if height < 1 or width < 1:
        raise DimensionError(f"grid dimensions must be positive, got {height}x{width}")
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    edges = []
    for r in range(height):
        base = r * width
        for c in range(width):
            i = base + c
            if c + 1 < width:
                edges.append((i, i + 1, 1.0))
            if r + 1 < height:
                edges.append((i, i + width, 1.0))
            if connectivity == 8 and r + 1 < height:
                if c + 1 < width:
                    edges.append((i, i + width + 1, 1.0))
                if c >= 1:
                    edges.append((i, i + width - 1, 1.0))
    return Graph(n=height * width, edges=tuple(edges))


def degree_diagonal(g: Graph) -> np.ndarray:
    """Weighted degree of every node (the diagonal of D)."""
    ii, jj, ww = g.edge_arrays()
    deg = np.zeros(g.n, dtype=np.float64)
    np.add.at(deg, ii, ww)
    np.add.at(deg, jj, ww)
    return deg


def _check_dense(g: Graph, what: str) -> None:
    if g.n > DENSE_NODE_LIMIT:
        raise DimensionError(
            f"dense {what} limited to n <= {DENSE_NODE_LIMIT}, got n={g.n}; "
            "use the sparse variant"
        )


def adjacency(g: Graph) -> np.ndarray:
    """Dense symmetric adjacency matrix A with zero diagonal."""
    _check_dense(g, "adjacency")
    a = np.zeros((g.n, g.n), dtype=np.float64)
    for i, j, w in g.edges:
        a[i, j] = w
        a[j, i] = w
    return a


def adjacency_sparse(g: Graph) -> sp.csr_array:
    ii, jj, ww = g.edge_arrays()
    rows = np.concatenate([ii, jj])
    cols = np.concatenate([jj, ii])
    vals = np.concatenate([ww, ww])
    return sp.csr_array((vals, (rows, cols)), shape=(g.n, g.n))


def laplacian(g: Graph) -> np.ndarray:
    """Dense combinatorial Laplacian L = D - A."""
    _check_dense(g, "Laplacian")
    lap = -adjacency(g)
    lap[np.diag_indices(g.n)] = degree_diagonal(g)
    return lap


def laplacian_sparse(g: Graph) -> sp.csr_array:
    """L = D - A in CSR form, suitable for graphs of any size."""
    ii, jj, ww = g.edge_arrays()
    diag = np.arange(g.n, dtype=np.intp)
    rows = np.concatenate([ii, jj, diag])
    cols = np.concatenate([jj, ii, diag])
    vals = np.concatenate([-ww, -ww, degree_diagonal(g)])
    return sp.csr_array((vals, (rows, cols)), shape=(g.n, g.n))


def renormalized_adjacency(g: Graph) -> np.ndarray:
    """Dense self-loop-normalized propagation operator.

    With A~ = A + I and D~ the diagonal of A~'s row sums, returns
    D~^(-1/2) A~ D~^(-1/2).  Every eigenvalue lies in [-1, 1].
    """
    _check_dense(g, "renormalized adjacency")
    scale = 1.0 / np.sqrt(degree_diagonal(g) + 1.0)
    a_tilde = adjacency(g)
    a_tilde[np.diag_indices(g.n)] = 1.0
    return a_tilde * scale[:, None] * scale[None, :]


def renormalized_adjacency_sparse(g: Graph) -> sp.csr_array:
    """Sparse CSR variant of :func:`renormalized_adjacency`."""
    ii, jj, ww = g.edge_arrays()
    diag = np.arange(g.n, dtype=np.intp)
    rows = np.concatenate([ii, jj, diag])
    cols = np.concatenate([jj, ii, diag])
    vals = np.concatenate([ww, ww, np.ones(g.n)])
    scale = 1.0 / np.sqrt(degree_diagonal(g) + 1.0)
    vals = vals * scale[rows] * scale[cols]
    return sp.csr_array((vals, (rows, cols)), shape=(g.n, g.n))
