"""
Deterministic generators for the example domains and test spaces.

Every generator is a pure function of its parameters: point ids are assigned
interior first, then boundary, in a fixed order.
"""

import logging
import math
from typing import Sequence

import numpy as np

from . import graphs
from .config import MeshConfig
from .enums import AmbientKind, DomainKind, Messages
from .errors import DomainError
from .spaces import DomainSpace, FiniteMetricSpace
from .transforms import TransformedSpace, invert
from .typing import INFINITY, CoordinateMap, FloatArray, IntArray

logger = logging.getLogger("qhkit.generators")

DISK_BOUNDARY_SAMPLES = 720
HALFLINE_ANCHORS = (1.0, 2.0, 3.0)


def _circle(center: FloatArray, radius: float, count: int) -> FloatArray:
    theta = 2 * np.pi * np.arange(count) / count
    return center + radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)


def _grid(h: float, lo: FloatArray, hi: FloatArray) -> FloatArray:
    """Square grid of spacing h on integer multiples of h inside the box [lo, hi]."""
    xs = np.arange(math.ceil(lo[0] / h - 1e-9), math.floor(hi[0] / h + 1e-9) + 1) * h
    ys = np.arange(math.ceil(lo[1] / h - 1e-9), math.floor(hi[1] / h + 1e-9) + 1) * h
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.stack([gx.reshape(-1), gy.reshape(-1)], axis=1)


def _domain(
    interior: FloatArray,
    boundary: FloatArray,
    kind: DomainKind,
    params: dict,
    name: str,
    epsilon: float | None = None,
    mesh_config: MeshConfig = MeshConfig(),
    unbounded: bool = False,
) -> DomainSpace:
    coords = np.vstack([interior, boundary])
    if epsilon is None:
        ambient = FiniteMetricSpace.euclidean(coords, name=name, unbounded=unbounded)
    else:
        ambient = FiniteMetricSpace.snowflake(coords, epsilon, name=name)
    m = interior.shape[0]
    return DomainSpace(
        ambient=ambient,
        interior=np.arange(m, dtype=np.int64),
        boundary=np.arange(m, coords.shape[0], dtype=np.int64),
        mesh_config=mesh_config,
        name=name,
        kind=kind,
        params=params,
    )


def _disk_points(h: float, center, radius: float, n_boundary: int) -> tuple[FloatArray, FloatArray]:
    if not (0 < h <= 0.2 * radius):
        raise DomainError(Messages.OUT_OF_RANGE % ("h", h))
    if n_boundary < 3:
        raise DomainError(Messages.OUT_OF_RANGE % ("n_boundary", n_boundary))
    center = np.asarray(center, dtype=np.float64).reshape(2)
    grid = _grid(h, center - radius, center + radius)
    inside = np.linalg.norm(grid - center, axis=1) < radius - h
    return grid[inside], _circle(center, radius, n_boundary)


def gen_disk(
    h: float,
    center: Sequence[float] = (0.0, 0.0),
    radius: float = 1.0,
    n_boundary: int = DISK_BOUNDARY_SAMPLES,
) -> DomainSpace:
    """Grid of spacing h inside |x - center| < radius - h, boundary sampled on the circle."""
    interior, boundary = _disk_points(h, center, radius, n_boundary)
    params = dict(h=h, center=[float(c) for c in center], radius=radius, n_boundary=n_boundary)
    return _domain(interior, boundary, DomainKind.DISK, params, f"disk(h={h})")


def gen_snowflake_disk(epsilon: float, h: float, n_boundary: int = DISK_BOUNDARY_SAMPLES) -> DomainSpace:
    """The points of `gen_disk(h)` under the snowflake metric |x - y| ** epsilon."""
    if not (0 < epsilon < 1):
        raise DomainError(Messages.OUT_OF_RANGE % ("epsilon", epsilon))
    interior, boundary = _disk_points(h, (0.0, 0.0), 1.0, n_boundary)
    params = dict(epsilon=epsilon, h=h, n_boundary=n_boundary)
    return _domain(interior, boundary, DomainKind.SNOWFLAKE_DISK, params, f"snowflake_disk(eps={epsilon}, h={h})", epsilon=epsilon)


def gen_halfline(
    ratio: float = 1.01,
    span: tuple[int, int] = (-400, 400),
    anchors: Sequence[float] = HALFLINE_ANCHORS,
) -> DomainSpace:
    """
    (0, inf) sampled at ratio ** i for i in span (inclusive) plus the anchor points,
    boundary {0}. Neighbouring samples are chained with k = 2.
    """
    if ratio <= 1:
        raise DomainError(Messages.OUT_OF_RANGE % ("ratio", ratio))
    lo, hi = span
    if lo > hi:
        raise DomainError(Messages.OUT_OF_RANGE % ("span", span))
    samples = float(ratio) ** np.arange(lo, hi + 1, dtype=np.float64)
    points = np.unique(np.concatenate([samples, np.asarray(anchors, dtype=np.float64)]))
    if np.any(points <= 0):
        raise DomainError(Messages.OUT_OF_RANGE % ("anchors", list(anchors)))

    params = dict(ratio=ratio, span=[lo, hi], anchors=[float(a) for a in anchors])
    return _domain(
        points.reshape(-1, 1),
        np.zeros((1, 1)),
        DomainKind.HALFLINE,
        params,
        f"halfline(ratio={ratio})",
        mesh_config=MeshConfig(beta=0.5, k=2),
        unbounded=True,
    )


def gen_grid_rect(h: float, width: float = 2.0, height: float = 1.0) -> DomainSpace:
    """Grid of spacing h at least h inside the rectangle (0, width) x (0, height), boundary every h/4."""
    if not (0 < h <= 0.2 * min(width, height)):
        raise DomainError(Messages.OUT_OF_RANGE % ("h", h))
    grid = _grid(h, np.array([h, h]), np.array([width - h, height - h]))

    step = h / 4
    xs = np.arange(0, round(width / step) + 1) * step
    ys = np.arange(1, round(height / step)) * step
    boundary = np.vstack([
        np.stack([xs, np.zeros_like(xs)], axis=1),
        np.stack([xs, np.full_like(xs, height)], axis=1),
        np.stack([np.zeros_like(ys), ys], axis=1),
        np.stack([np.full_like(ys, width), ys], axis=1),
    ])
    params = dict(h=h, width=width, height=height)
    return _domain(grid, boundary, DomainKind.GRID_RECT, params, f"grid_rect(h={h})")


def gen_slit_disk(h: float, n_boundary: int = DISK_BOUNDARY_SAMPLES) -> DomainSpace:
    """The unit disk minus the slit [0, 1) x {0}, the slit sampled every h/4."""
    interior, circle = _disk_points(h, (0.0, 0.0), 1.0, n_boundary)
    on_slit = (np.abs(interior[:, 1]) < 1e-12) & (interior[:, 0] >= -1e-12)
    step = h / 4
    slit_x = np.arange(0, math.ceil(1 / step)) * step
    slit = np.stack([slit_x, np.zeros_like(slit_x)], axis=1)
    params = dict(h=h, n_boundary=n_boundary)
    return _domain(interior[~on_slit], np.vstack([circle, slit]), DomainKind.SLIT_DISK, params, f"slit_disk(h={h})")


def arc_point(theta) -> FloatArray:
    """(i + e^{i theta})/2 as plane coordinates."""
    theta = np.asarray(theta, dtype=np.float64)
    return np.stack([np.cos(theta) / 2, (1 + np.sin(theta)) / 2], axis=-1)


def arc_ray_start(u: float) -> float:
    """Real part of the image of the arc's far endpoint under x -> x/|x|^2."""
    theta = 3 * math.pi / 2 - u
    return math.cos(theta) / (1 + math.sin(theta))


def gen_arc_example(u: float, n: int = 2000, ambient: AmbientKind = AmbientKind.EUCLIDEAN) -> tuple[DomainSpace, DomainSpace]:
    """
    The circle of radius 1/2 through the origin with an arc of angle u removed next
    to it: n samples at uniform theta in the open range (-pi/2, 3pi/2 - u), boundary
    the endpoints p = 0 and q. Returns the domain and its inversion at p, in which
    the boundary is the image of q.

    `ambient` is the chordal (euclidean) metric or the intrinsic arclength (curve).
    """
    if not (0 < u < math.pi / 2):
        raise DomainError(Messages.OUT_OF_RANGE % ("u", u))
    if n < 100:
        raise DomainError(Messages.OUT_OF_RANGE % ("n", n))

    start, stop = -math.pi / 2, 3 * math.pi / 2 - u
    theta = start + (stop - start) * np.arange(1, n + 1) / (n + 1)
    name = f"arc(u={u}, n={n})"
    params = dict(u=u, n=n, ambient=str(ambient))

    match ambient:
        case AmbientKind.EUCLIDEAN:
            coords = np.vstack([arc_point(theta), arc_point([start, stop])])
            space = FiniteMetricSpace.euclidean(coords, name=name)
        case AmbientKind.CURVE:
            arclength = np.concatenate([theta - start, [0.0, stop - start]]) / 2
            space = FiniteMetricSpace(AmbientKind.CURVE, arclength=arclength, name=name)
        case _:
            raise DomainError(Messages.OUT_OF_RANGE % ("arc ambient", ambient))

    p, q = n, n + 1
    dom = DomainSpace(
        ambient=space,
        interior=np.arange(n, dtype=np.int64),
        boundary=np.array([p, q], dtype=np.int64),
        name=name,
        kind=DomainKind.ARC_EXAMPLE,
        params=params,
    )
    inverted = invert(space, p, unbounded=False)
    return dom, transformed_domain(dom, inverted, name=f"inverted {name}")


def transformed_domain(dom: DomainSpace, ts: TransformedSpace, name: str | None = None) -> DomainSpace:
    """
    The domain carried into a transformed space: interior and boundary follow their
    labels, the removed base point and the added point at infinity belong to neither.
    """
    assert ts.source is dom.ambient or ts.source.size == dom.ambient.size, "transform must be of the domain's ambient space"
    labels = ts.labels
    keep_interior = np.isin(labels, dom.interior)
    keep_boundary = np.isin(labels, dom.boundary)
    return DomainSpace(
        ambient=ts.as_space(name),
        interior=np.flatnonzero(keep_interior).astype(np.int64),
        boundary=np.flatnonzero(keep_boundary).astype(np.int64),
        mesh_config=dom.mesh_config,
        name=name or f"{ts.kind}({dom.name}, {ts.p})",
        kind=DomainKind.EXPLICIT,
        params=dict(source=dom.name, transform=str(ts.kind), p=ts.p),
    )


def map_domain(dom: DomainSpace, fn: CoordinateMap, name: str | None = None) -> DomainSpace:
    """Image of a coordinate domain under a coordinate map; point ids are preserved."""
    space = dom.ambient
    if space.coords is None or space.kind not in (AmbientKind.EUCLIDEAN, AmbientKind.SNOWFLAKE):
        raise DomainError(Messages.MISSING_INPUT % "coordinates to map")
    mapped = np.asarray(fn(space.coords), dtype=np.float64)
    if mapped.shape[0] != space.size:
        raise DomainError(Messages.OUT_OF_RANGE % ("mapped point count", mapped.shape[0]))
    name = name or f"mapped {dom.name}"
    ambient = FiniteMetricSpace(space.kind, coords=mapped, epsilon=space.epsilon, name=name, unbounded=space.unbounded)
    return DomainSpace(
        ambient=ambient,
        interior=dom.interior,
        boundary=dom.boundary,
        mesh_config=dom.mesh_config,
        name=name,
        kind=DomainKind.EXPLICIT,
        params=dict(source=dom.name),
    )


def plane_inversion(coords: FloatArray) -> FloatArray:
    """x -> x/|x|^2."""
    return coords / np.sum(coords ** 2, axis=1, keepdims=True)


def similarity(scale: float, shift: Sequence[float] = (0.0, 0.0)) -> CoordinateMap:
    def fn(coords: FloatArray) -> FloatArray:
        return scale * coords + np.asarray(shift, dtype=np.float64)
    return fn


def gen_dyadic_line(lo: int = -10, hi: int = 10) -> FiniteMetricSpace:
    """{2^i : lo <= i <= hi} on the real line, flagged unbounded."""
    return FiniteMetricSpace.euclidean((2.0 ** np.arange(lo, hi + 1)).reshape(-1, 1), name=f"dyadic({lo}..{hi})", unbounded=True)


def random_space(rng: np.random.Generator, max_points: int, index: int = 0) -> FiniteMetricSpace:
    """
    A seeded random finite metric space of 4..max_points points: euclidean clouds at
    mixed scales in dimension 1-3 (even index) or shortest-path metrics of random
    complete graphs (odd index).
    """
    n = int(rng.integers(4, max(5, max_points + 1)))
    if index % 2 == 0:
        dim = int(rng.integers(1, 4))
        scales = 10.0 ** rng.uniform(-2, 2, size=(n, 1))
        coords = rng.normal(size=(n, dim)) * scales
        return FiniteMetricSpace.euclidean(coords, name=f"random[{index}] euclidean n={n}")

    weights = rng.uniform(0.1, 10.0, size=(n, n))
    weights = np.triu(weights, 1)
    weights = weights + weights.T
    matrix = graphs.complete_graph_distances(weights)
    matrix = np.minimum(matrix, matrix.T)
    return FiniteMetricSpace.from_matrix(matrix, name=f"random[{index}] graph n={n}")


def random_spaces(count: int, max_points: int, seed: int = 17) -> list[FiniteMetricSpace]:
    rng = np.random.default_rng(seed)
    return [random_space(rng, max_points, index=i) for i in range(count)]


def subsample_ids(dom: DomainSpace, max_points: int, seed: int = 17) -> IntArray:
    """
    At most `max_points` ambient ids of a domain: the boundary is thinned first
    (evenly, down to a quarter of the budget), then the interior is drawn at random.
    """
    interior, boundary = dom.interior, dom.boundary
    if interior.size + boundary.size <= max_points:
        return np.sort(np.concatenate([interior, boundary]))

    b = min(boundary.size, max(1, max_points // 4, max_points - interior.size))
    picks = np.unique(np.linspace(0, boundary.size - 1, b).round().astype(np.int64))
    boundary = boundary[picks]
    budget = max_points - boundary.size
    if interior.size > budget:
        rng = np.random.default_rng(seed)
        interior = np.sort(rng.choice(interior, size=budget, replace=False))
    return np.sort(np.concatenate([interior, boundary]))


def subsample_domain(dom: DomainSpace, max_points: int, seed: int = 17) -> DomainSpace:
    """The domain restricted to `subsample_ids`, renumbered in id order."""
    ids = subsample_ids(dom, max_points, seed)
    if ids.size == dom.ambient.size:
        return dom
    lookup = np.full(dom.ambient.size, INFINITY, dtype=np.int64)
    lookup[ids] = np.arange(ids.size)
    name = f"{dom.name} [{ids.size} points]"
    return DomainSpace(
        ambient=dom.ambient.subspace(ids, name=name),
        interior=lookup[np.intersect1d(dom.interior, ids)],
        boundary=lookup[np.intersect1d(dom.boundary, ids)],
        mesh_config=dom.mesh_config,
        name=name,
        kind=dom.kind,
        params=dict(dom.params, subsample=int(ids.size), seed=seed),
    )


GENERATORS = {
    DomainKind.DISK: gen_disk,
    DomainKind.SNOWFLAKE_DISK: gen_snowflake_disk,
    DomainKind.HALFLINE: gen_halfline,
    DomainKind.GRID_RECT: gen_grid_rect,
    DomainKind.SLIT_DISK: gen_slit_disk,
}
