"""
Quasihyperbolic distance k on a meshed domain, the quantities r and j, geodesic
witnesses and the lower/small-scale bounds relating them.
"""

import dataclasses
import logging
import math

import numpy as np

from . import graphs
from .enums import CheckStatus, QhWeightMode
from .spaces import DomainSpace
from .typing import FloatArray, IntArray

logger = logging.getLogger("qhkit.quasihyperbolic")

# relative slack on the j >= |log d(x)/d(y)| link, equality holds on collinear samples
LOG_RATIO_SLACK = 1e-12


@dataclasses.dataclass(frozen=True)
class QhPath:
    vertices: list[int]
    k_length: float
    arc_length: float
    mode: QhWeightMode

    def to_dict(self) -> dict:
        return dict(vertices=self.vertices, k=self.k_length, length=self.arc_length, mode=str(self.mode))


def qh_distance(dom: DomainSpace, x: int, y: int, mode: QhWeightMode = QhWeightMode.UPPER) -> float:
    dom.position(x)
    dom.position(y)
    if x == y:
        return 0.0
    mesh = dom.mesh
    return float(mesh.distances([x], mode)[0, mesh.position(y)])


def path_lengths(dom: DomainSpace, vertices: list[int]) -> FloatArray:
    """Ambient lengths of the consecutive segments of a vertex path."""
    if len(vertices) < 2:
        return np.zeros(0)
    ids = np.asarray(vertices, dtype=np.int64)
    return dom.ambient.pairwise_positions(ids, np.arange(ids.size - 1), np.arange(1, ids.size))


def qh_geodesic(dom: DomainSpace, x: int, y: int, mode: QhWeightMode = QhWeightMode.UPPER) -> QhPath:
    dom.position(x)
    dom.position(y)
    if x == y:
        return QhPath(vertices=[int(x)], k_length=0.0, arc_length=0.0, mode=mode)

    mesh = dom.mesh
    vertices, _ = mesh.path(x, y, mode)
    positions = mesh.positions(vertices)
    # k-length is re-summed along the path so it equals the sum of its edge weights
    graph = mesh.graph(mode)
    weights = np.asarray(graph[positions[:-1], positions[1:]]).reshape(-1)
    return QhPath(
        vertices=vertices,
        k_length=float(weights.sum()),
        arc_length=float(path_lengths(dom, vertices).sum()),
        mode=mode,
    )


def relative_distances(dom: DomainSpace, xs, ys) -> FloatArray:
    """Vectorized r_Omega over paired id arrays."""
    xs = np.asarray(xs, dtype=np.int64).reshape(-1)
    ys = np.asarray(ys, dtype=np.int64).reshape(-1)
    d = dom.ambient.pairwise_positions(np.concatenate([xs, ys]), np.arange(xs.size), np.arange(xs.size, 2 * xs.size))
    return d / np.minimum(dom.clearance(xs), dom.clearance(ys))


def relative_distance(dom: DomainSpace, x: int, y: int) -> float:
    return float(relative_distances(dom, [x], [y])[0])


def j_distances(dom: DomainSpace, xs, ys) -> FloatArray:
    return np.log1p(relative_distances(dom, xs, ys))


def j_distance(dom: DomainSpace, x: int, y: int) -> float:
    return math.log1p(relative_distance(dom, x, y))


def pair_qh_distances(dom: DomainSpace, pairs: IntArray, mode: QhWeightMode | None, workers: int = 1) -> FloatArray:
    """
    Graph distances for many (x, y) pairs of meshed point ids, one dijkstra per
    distinct x. `mode=None` gives the inner length metric.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    out = np.zeros(pairs.shape[0])
    if pairs.shape[0] == 0:
        return out
    mesh = dom.mesh
    sources, inverse = np.unique(pairs[:, 0], return_inverse=True)
    targets = mesh.positions(pairs[:, 1])
    for start in range(0, sources.size, graphs.SOURCE_BATCH):
        batch = sources[start:start + graphs.SOURCE_BATCH]
        rows = mesh.distances(batch, mode, workers=workers)
        mask = (inverse >= start) & (inverse < start + batch.size)
        out[mask] = rows[inverse[mask] - start, targets[mask]]
    return out


@dataclasses.dataclass(frozen=True)
class LowerBoundCheck:
    """k >= j >= |log d(x)/d(y)| over a set of pairs."""

    pairs: int
    k_violations: int
    j_violations: int
    worst_pair: tuple[int, int] | None
    worst_margin: float

    @property
    def passed(self) -> bool:
        return self.k_violations == 0 and self.j_violations == 0

    def to_dict(self) -> dict:
        return dict(
            pairs=self.pairs,
            k_violations=self.k_violations,
            j_violations=self.j_violations,
            worst_pair=None if self.worst_pair is None else list(self.worst_pair),
            worst_margin=self.worst_margin,
        )


def check_lower_bounds(dom: DomainSpace, pairs: IntArray, mode: QhWeightMode = QhWeightMode.UPPER, workers: int = 1) -> LowerBoundCheck:
    """
    Asserts k(x, y) >= j(x, y) with zero tolerance (upper mode dominates the
    continuum k), and j(x, y) >= |log d(x)/d(y)| up to `LOG_RATIO_SLACK`.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if pairs.shape[0] == 0:
        return LowerBoundCheck(0, 0, 0, None, math.inf)

    k = pair_qh_distances(dom, pairs, mode, workers=workers)
    j = j_distances(dom, pairs[:, 0], pairs[:, 1])
    log_ratio = np.abs(np.log(dom.clearance(pairs[:, 0]) / dom.clearance(pairs[:, 1])))

    k_margin = k - j
    j_margin = j - log_ratio + LOG_RATIO_SLACK * np.maximum(1.0, log_ratio)
    margin = np.minimum(k_margin, j_margin)
    worst = int(np.argmin(margin))
    return LowerBoundCheck(
        pairs=int(pairs.shape[0]),
        k_violations=int((k_margin < 0).sum()),
        j_violations=int((j_margin < 0).sum()),
        worst_pair=(int(pairs[worst, 0]), int(pairs[worst, 1])),
        worst_margin=float(margin[worst]),
    )


@dataclasses.dataclass(frozen=True)
class SmallScaleCheck:
    status: CheckStatus
    k: float | None
    bound: float
    scale: float

    def to_dict(self) -> dict:
        return dict(status=str(self.status), k=self.k, bound=self.bound, scale=self.scale)


def check_small_scale(
    dom: DomainSpace,
    x: int,
    y: int,
    lambda0: float,
    c0: float,
    mode: QhWeightMode = QhWeightMode.UPPER,
) -> SmallScaleCheck:
    """
    For d(x, y)/d(x) <= lambda0/(2 c0), checks k(x, y) <= 2 c0 d(x, y)/d(x), with the
    right-hand side multiplied by (1 + 2 beta) in upper mode.
    """
    scale = dom.ambient.distance(x, y) / dom.clearance([x])[0]
    bound = 2 * c0 * scale
    if mode == QhWeightMode.UPPER:
        bound *= 1 + 2 * dom.beta

    if scale > lambda0 / (2 * c0):
        return SmallScaleCheck(CheckStatus.OUT_OF_SCOPE, None, bound, float(scale))

    k = qh_distance(dom, x, y, mode)
    status = CheckStatus.PASS if k <= bound else CheckStatus.FAIL
    return SmallScaleCheck(status, k, float(bound), float(scale))
