"""Shared helpers: deterministic random graphs with exactly-representable weights."""

from __future__ import annotations

import numpy as np

from gcnseg.graph import Graph


def dyadic_weight(rng: np.random.Generator) -> float:
    # Multiples of 1/1024 in (0, 2]: sums of a few thousand of these are
    # exact in float64, which keeps row-sum identities bit-exact.
    return float(rng.integers(1, 2049)) / 1024.0


def random_connected_graph(rng: np.random.Generator, n: int,
                           extra_edges: int | None = None,
                           unit_weights: bool = False) -> Graph:
    """Random spanning tree plus extra edges; connected by construction."""
    edges = {}
    for i in range(1, n):
        j = int(rng.integers(0, i))
        edges[(j, i)] = 1.0 if unit_weights else dyadic_weight(rng)
    if extra_edges is None:
        extra_edges = n // 2
    for _ in range(extra_edges):
        i, j = rng.integers(0, n, size=2)
        i, j = int(min(i, j)), int(max(i, j))
        if i != j and (i, j) not in edges:
            edges[(i, j)] = 1.0 if unit_weights else dyadic_weight(rng)
    return Graph(n=n, edges=tuple((i, j, w) for (i, j), w in sorted(edges.items())))


def path_graph(n: int) -> Graph:
    return Graph(n=n, edges=tuple((i, i + 1, 1.0) for i in range(n - 1)))


def cycle_graph(n: int) -> Graph:
    edges = [(i, i + 1, 1.0) for i in range(n - 1)] + [(0, n - 1, 1.0)]
    return Graph(n=n, edges=tuple(sorted(edges)))


def complete_graph(n: int) -> Graph:
    return Graph(n=n, edges=tuple(
        (i, j, 1.0) for i in range(n) for j in range(i + 1, n)
    ))
