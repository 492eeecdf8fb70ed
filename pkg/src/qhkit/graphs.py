"""
Shortest paths on weighted undirected graphs with deterministic witnesses.

Distances come from `scipy.sparse.csgraph`; predecessors are rebuilt afterwards by
picking, for every vertex, the smallest-id neighbour lying on a tight edge, so the
same input always produces the same paths no matter how the solver broke ties.
"""

import logging
from typing import Iterable

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra, floyd_warshall

from .enums import Messages
from .errors import DomainError
from .typing import FloatArray, IntArray
from .utils import run_in_order

logger = logging.getLogger("qhkit.graphs")

# relative tolerance deciding whether an edge lies on a shortest path
TIGHT_TOLERANCE = 1e-12

# sources per dijkstra call, bounds the dense (batch, n) result
SOURCE_BATCH = 256

NO_PREDECESSOR = -1


def edge_graph(n: int, edges: IntArray, weights: FloatArray) -> csr_matrix:
    """Symmetric sparse adjacency with the given (u, v) edges and weights."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    weights = np.asarray(weights, dtype=np.float64)
    assert edges.shape[0] == weights.shape[0], f"expected one weight per edge, got {weights.shape[0]} for {edges.shape[0]} edges"
    assert np.all(weights > 0), "edge weights must be strictly positive"
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    data = np.concatenate([weights, weights])
    return coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def components(graph: csr_matrix) -> tuple[int, IntArray]:
    count, labels = connected_components(graph, directed=False)
    return int(count), np.asarray(labels, dtype=np.int64)


def shortest_from(graph: csr_matrix, sources: Iterable[int] | IntArray, workers: int = 1) -> FloatArray:
    """Dense `(len(sources), n)` shortest-path distances, `inf` where unreachable."""
    sources = np.asarray(list(sources) if not isinstance(sources, np.ndarray) else sources, dtype=np.int64)
    if sources.size == 0:
        return np.zeros((0, graph.shape[0]))

    batches = [sources[i:i + SOURCE_BATCH] for i in range(0, sources.size, SOURCE_BATCH)]
    if workers <= 1 or len(batches) == 1:
        return np.vstack([dijkstra(graph, directed=False, indices=batch) for batch in batches])

    results = run_in_order([lambda batch=batch: dijkstra(graph, directed=False, indices=batch) for batch in batches], workers=workers)
    for result in results:
        if isinstance(result, Exception):
            raise result
    return np.vstack(results)


def complete_graph_distances(weights: FloatArray) -> FloatArray:
    """All-pairs shortest paths of the complete graph with the given dense weights."""
    weights = np.asarray(weights, dtype=np.float64)
    n = weights.shape[0]
    off = ~np.eye(n, dtype=bool)
    if not np.all(weights[off] > 0):
        i, j = np.argwhere((weights <= 0) & off)[0]
        raise DomainError(Messages.REPEATED_POINTS % f"{int(i)} and {int(j)} at zero distance")
    return floyd_warshall(weights, directed=False)


def directed_edges(graph: csr_matrix) -> tuple[IntArray, IntArray, FloatArray]:
    coo = graph.tocoo()
    return coo.row.astype(np.int64), coo.col.astype(np.int64), np.asarray(coo.data, dtype=np.float64)


def predecessors(
    graph: csr_matrix,
    dist: FloatArray,
    source: int,
    edges: tuple[IntArray, IntArray, FloatArray] | None = None,
) -> IntArray:
    """
    Deterministic shortest-path tree for one source: `pred[v]` is the smallest id `u`
    with `dist[u] + w(u, v) == dist[v]` up to `TIGHT_TOLERANCE * max(1, dist[v])`.
    Pass `edges=directed_edges(graph)` when building many trees on one graph.
    """
    u, v, w = edges if edges is not None else directed_edges(graph)
    with np.errstate(invalid="ignore"):
        tight = np.abs(dist[u] + w - dist[v]) <= TIGHT_TOLERANCE * np.maximum(1.0, dist[v])
    tight &= np.isfinite(dist[v]) & (v != source)

    n = graph.shape[0]
    pred = np.full(n, n, dtype=np.int64)
    np.minimum.at(pred, v[tight], u[tight])
    pred[pred == n] = NO_PREDECESSOR
    return pred


def walk_path(pred: IntArray | list[int], source: int, target: int) -> list[int]:
    """Vertex sequence from `source` to `target` along a predecessor tree."""
    if source == target:
        return [source]
    if isinstance(pred, np.ndarray):
        pred = pred.tolist()

    path = [target]
    vertex = target
    for _ in range(len(pred)):
        vertex = pred[vertex]
        if vertex == NO_PREDECESSOR:
            raise ValueError(f"vertex {target} is not reachable from {source}")
        path.append(vertex)
        if vertex == source:
            path.reverse()
            return path
    raise AssertionError("predecessor tree contains a cycle")


def shortest_path(graph: csr_matrix, source: int, target: int) -> tuple[list[int], float]:
    dist = dijkstra(graph, directed=False, indices=source)
    if not np.isfinite(dist[target]):
        raise ValueError(f"vertex {target} is not reachable from {source}")
    pred = predecessors(graph, dist, source)
    return walk_path(pred, source, target), float(dist[target])
