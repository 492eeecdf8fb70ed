import dataclasses
import logging
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np
from scipy.sparse import csr_matrix

from .. import graphs
from ..enums import Messages, QhWeightMode
from ..errors import DomainError, MeshError
from ..typing import BoolArray, FloatArray, IntArray
from .metric import FiniteMetricSpace

if TYPE_CHECKING:
    from .domain import DomainSpace

logger = logging.getLogger("qhkit.mesh")

# relative slack on the clearance constraint, grid points at exactly beta * d(z) stay admissible
CLEARANCE_RTOL = 1e-9


def admissible_lengths(lengths: FloatArray, clearance_u: FloatArray, clearance_v: FloatArray, beta: float) -> BoolArray:
    return lengths <= beta * np.minimum(clearance_u, clearance_v) * (1 + CLEARANCE_RTOL)


@dataclasses.dataclass(frozen=True, eq=False)
class MeshGraph:
    """
    Clearance-constrained neighbour graph over the meshed interior points.

    `vertices` are point ids of the ambient space (sorted), `edges` index into
    `vertices`, `clearance[i]` is the boundary distance of `vertices[i]`. Every edge
    satisfies `length <= beta * min(clearance[u], clearance[v])` up to `CLEARANCE_RTOL`.
    """

    vertices: IntArray
    edges: IntArray
    lengths: FloatArray
    clearance: FloatArray
    beta: float
    k: int
    stranded: IntArray = dataclasses.field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    _graphs: dict = dataclasses.field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return int(self.vertices.size)

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def _positions(self) -> dict[int, int]:
        return {int(v): i for i, v in enumerate(self.vertices)}

    def is_meshed(self, x: int) -> bool:
        return int(x) in self._positions

    def position(self, x: int) -> int:
        try:
            return self._positions[int(x)]
        except KeyError:
            raise MeshError(Messages.NOT_MESHED % x)

    def positions(self, ids) -> IntArray:
        ids = np.asarray(ids, dtype=np.int64).reshape(-1)
        found = np.searchsorted(self.vertices, ids)
        found = np.clip(found, 0, max(self.size - 1, 0))
        bad = self.vertices[found] != ids
        if np.any(bad):
            raise MeshError(Messages.NOT_MESHED % int(ids[bad][0]))
        return found.astype(np.int64)

    def edge_weights(self, mode: QhWeightMode | None = None) -> FloatArray:
        """Edge lengths for `mode=None`, otherwise the quasihyperbolic quadrature of the edge."""
        if mode is None:
            return self.lengths
        du = self.clearance[self.edges[:, 0]]
        dv = self.clearance[self.edges[:, 1]]
        match mode:
            case QhWeightMode.UPPER:
                # 1/d(z) <= 1/(min - length) along the edge since d is 1-Lipschitz
                return self.lengths / (np.minimum(du, dv) - self.lengths)
            case QhWeightMode.TRAPEZOID:
                return self.lengths * (1.0 / du + 1.0 / dv) / 2.0
        raise ValueError(f"unknown weight mode {mode}")

    def graph(self, mode: QhWeightMode | None = None) -> csr_matrix:
        key = str(mode) if mode else "length"
        if key not in self._graphs:
            self._graphs[key] = graphs.edge_graph(self.size, self.edges, self.edge_weights(mode))
        return self._graphs[key]

    def directed_edges(self, mode: QhWeightMode | None = None):
        key = f"{mode or 'length'}:directed"
        if key not in self._graphs:
            self._graphs[key] = graphs.directed_edges(self.graph(mode))
        return self._graphs[key]

    def distances(self, sources, mode: QhWeightMode | None = None, workers: int = 1) -> FloatArray:
        """Rows of graph distances from the given point ids to every meshed vertex."""
        return graphs.shortest_from(self.graph(mode), self.positions(sources), workers=workers)

    def path(self, x: int, y: int, mode: QhWeightMode | None = None) -> tuple[list[int], float]:
        """Deterministic shortest path between point ids, returned as point ids."""
        source, target = self.position(x), self.position(y)
        local, weight = graphs.shortest_path(self.graph(mode), source, target)
        return [int(self.vertices[i]) for i in local], weight

    def clearance_ok(self) -> bool:
        u, v = self.edges[:, 0], self.edges[:, 1]
        return bool(np.all(admissible_lengths(self.lengths, self.clearance[u], self.clearance[v], self.beta)))

    def to_dict(self) -> dict:
        return dict(
            beta=self.beta,
            k=self.k,
            vertices=self.size,
            edges=self.num_edges,
            stranded=self.stranded.tolist(),
            clearance_ok=self.clearance_ok(),
        )


def _neighbour_edges(space: FiniteMetricSpace, ids: IntArray, k: int) -> tuple[IntArray, IntArray, FloatArray]:
    positions, lengths = space.nearest(ids, k)
    rows = np.repeat(np.arange(ids.size, dtype=np.int64), positions.shape[1])
    return rows, positions.reshape(-1), lengths.reshape(-1)


def _undirected(u: IntArray, v: IntArray, lengths: FloatArray, n: int) -> tuple[IntArray, FloatArray]:
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    _, first = np.unique(lo * n + hi, return_index=True)
    return np.stack([lo[first], hi[first]], axis=1), lengths[first]


def build_mesh(dom: 'DomainSpace', beta: float = 0.5, k: int = 8) -> MeshGraph:
    """
    Joins every interior point to its `k` nearest interior neighbours, keeping the
    edges whose length is at most `beta` times the smaller boundary distance.
    Points left without an admissible edge are stranded; the rest must be connected.
    """
    if not (0 < beta <= 0.5):
        raise DomainError(Messages.OUT_OF_RANGE % ("beta", beta))
    if k < 1:
        raise DomainError(Messages.OUT_OF_RANGE % ("k", k))

    interior = dom.interior
    clearance = dom.boundary_distances
    m = interior.size

    rows, cols, lengths = _neighbour_edges(dom.ambient, interior, k)
    admissible = admissible_lengths(lengths, clearance[rows], clearance[cols], beta)
    edges, lengths = _undirected(rows[admissible], cols[admissible], lengths[admissible], m)

    degree = np.bincount(edges.reshape(-1), minlength=m)
    meshed = np.flatnonzero(degree > 0)
    stranded = interior[degree == 0]
    if meshed.size == 0:
        raise MeshError(Messages.MESH_EMPTY % (dom.name or "domain"))

    local = np.full(m, -1, dtype=np.int64)
    local[meshed] = np.arange(meshed.size)
    edges = local[edges]

    graph = graphs.edge_graph(meshed.size, edges, lengths)
    count, labels = graphs.components(graph)
    if count > 1:
        summary = []
        for label in range(count):
            members = meshed[labels == label]
            summary.append(dict(
                size=int(members.size),
                points=interior[members[:5]].tolist(),
                min_clearance=float(clearance[members].min()),
            ))
        summary.sort(key=lambda c: -c["size"])
        raise MeshError(Messages.MESH_TOO_COARSE % (count, summary), components=summary)

    if stranded.size:
        logger.info(f"{dom.name or 'domain'}: {stranded.size} of {m} interior points stranded by the clearance constraint")
    logger.debug(f"{dom.name or 'domain'}: meshed {meshed.size} points with {edges.shape[0]} edges (beta={beta}, k={k})")

    mesh = MeshGraph(
        vertices=interior[meshed],
        edges=edges,
        lengths=lengths,
        clearance=clearance[meshed],
        beta=beta,
        k=k,
        stranded=stranded,
    )
    mesh._graphs["length"] = graph
    assert mesh.clearance_ok(), "constructed mesh violates its clearance constraint"
    return mesh


def space_graph(space: FiniteMetricSpace, k: int = 8) -> MeshGraph:
    """
    Neighbour graph over every point of a space without boundary, edges are the
    `k` nearest neighbours of each point (no clearance constraint).
    """
    ids = space.point_ids
    rows, cols, lengths = _neighbour_edges(space, ids, k)
    edges, lengths = _undirected(rows, cols, lengths, ids.size)
    return MeshGraph(
        vertices=ids,
        edges=edges,
        lengths=lengths,
        clearance=np.full(ids.size, np.inf),
        beta=0.5,
        k=k,
    )


def length_distance(dom: 'DomainSpace', x: int, y: int) -> float:
    """Inner length metric l_Omega(x, y) along the mesh."""
    dom.position(x)
    dom.position(y)
    if x == y:
        return 0.0
    mesh = dom.mesh
    return float(mesh.distances([x])[0, mesh.position(y)])
