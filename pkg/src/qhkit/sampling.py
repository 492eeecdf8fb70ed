"""
Seeded selection of point pairs, quadruples and triples.
"""

import itertools
import logging
import math

import numpy as np

from .config import SamplingConfig, ScanConfig
from .spaces import DomainSpace
from .typing import IntArray

logger = logging.getLogger("qhkit.sampling")

# above this many pairs the stratification pool is drawn instead of enumerated
POOL_LIMIT = 2_000_000

# the six orderings of a 4-subset that fix its first element; every other ordering
# repeats one of their cross ratios
QUADRUPLE_ORDERINGS = np.array([
    [0, 1, 2, 3],
    [0, 1, 3, 2],
    [0, 2, 1, 3],
    [0, 2, 3, 1],
    [0, 3, 1, 2],
    [0, 3, 2, 1],
], dtype=np.int64)


def _all_pairs(points: IntArray) -> IntArray:
    i, j = np.triu_indices(points.size, k=1)
    return np.stack([points[i], points[j]], axis=1)


def _random_pairs(points: IntArray, count: int, rng: np.random.Generator) -> IntArray:
    n = points.size
    a = rng.integers(0, n, size=count)
    b = rng.integers(0, n - 1, size=count)
    b = b + (b >= a)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    return np.stack([points[lo], points[hi]], axis=1)


def _unique_rows(rows: IntArray) -> IntArray:
    if rows.shape[0] == 0:
        return rows
    _, first = np.unique(rows, axis=0, return_index=True)
    return rows[np.sort(first)]


def boundary_layer_pairs(dom: DomainSpace, size: int) -> IntArray:
    """Every pair among the `size` meshed points closest to the boundary."""
    mesh = dom.mesh
    if size < 2:
        return np.zeros((0, 2), dtype=np.int64)
    order = np.argsort(mesh.clearance, kind="stable")[:size]
    return _all_pairs(np.sort(mesh.vertices[order]))


def sample_pairs(dom: DomainSpace, config: SamplingConfig = SamplingConfig(), points: IntArray | None = None) -> IntArray:
    """
    Pairs (x, y), x < y, of meshed points: all of them when there are at most
    `exhaustive_limit` points, otherwise `n_pairs` pairs spread evenly over the
    decades of r_Omega plus the boundary-layer pairs.
    """
    from .quasihyperbolic import relative_distances

    restricted = points is not None
    points = np.sort(dom.mesh.vertices if points is None else np.asarray(points, dtype=np.int64))
    if points.size < 2:
        return np.zeros((0, 2), dtype=np.int64)
    if points.size <= config.exhaustive_limit:
        return _all_pairs(points)

    rng = np.random.default_rng(config.seed)
    total = points.size * (points.size - 1) // 2
    if total <= POOL_LIMIT:
        pool = _all_pairs(points)
    else:
        pool = _unique_rows(_random_pairs(points, config.pool_factor * config.n_pairs, rng))

    r = relative_distances(dom, pool[:, 0], pool[:, 1])
    decades = np.floor(np.log10(r)).astype(np.int64)
    chosen = []
    remaining = config.n_pairs
    bins = [np.flatnonzero(decades == decade) for decade in np.unique(decades)]
    # smallest bins first so their unused quota rolls over to the larger ones
    bins.sort(key=lambda b: b.size)
    for i, members in enumerate(bins):
        quota = remaining // (len(bins) - i)
        take = members if members.size <= quota else rng.choice(members, size=quota, replace=False)
        chosen.append(np.sort(take))
        remaining -= take.size

    pairs = pool[np.sort(np.concatenate(chosen))]
    layer = boundary_layer_pairs(dom, config.boundary_layer)
    if restricted and layer.size:
        layer = layer[np.isin(layer[:, 0], points) & np.isin(layer[:, 1], points)]
    pairs = _unique_rows(np.vstack([pairs, layer]))
    logger.debug(f"{dom.name or 'domain'}: sampled {pairs.shape[0]} pairs over {len(bins)} r-decades")
    return pairs


def quadruples(points: IntArray, config: ScanConfig = ScanConfig()) -> tuple[IntArray, bool]:
    """
    Ordered quadruples of distinct points: every 4-subset under the orderings that
    fix its first element when that is at most `exhaustive_limit` samples, else
    `n_samples` seeded ordered quadruples without replacement.
    """
    points = np.asarray(points, dtype=np.int64)
    n = points.size
    if n < 4:
        return np.zeros((0, 4), dtype=np.int64), True

    total = len(QUADRUPLE_ORDERINGS) * math.comb(n, 4)
    if total <= config.exhaustive_limit:
        subsets = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(n), 4)), dtype=np.int64).reshape(-1, 4)
        ordered = subsets[:, QUADRUPLE_ORDERINGS].reshape(-1, 4)
        return points[ordered], True

    return points[_distinct_tuples(n, 4, min(config.n_samples, math.perm(n, 4)), config.seed)], False


def triples(points: IntArray, config: ScanConfig = ScanConfig()) -> tuple[IntArray, bool]:
    """Ordered triples (x, y, z) of distinct points, exhaustive or seeded like `quadruples`."""
    points = np.asarray(points, dtype=np.int64)
    n = points.size
    if n < 3:
        return np.zeros((0, 3), dtype=np.int64), True

    total = n * (n - 1) * (n - 2)
    if total <= config.exhaustive_limit:
        ordered = np.fromiter(itertools.chain.from_iterable(itertools.permutations(range(n), 3)), dtype=np.int64).reshape(-1, 3)
        return points[ordered], True

    return points[_distinct_tuples(n, 3, min(config.n_samples, total), config.seed)], False


def _distinct_tuples(n: int, width: int, count: int, seed: int) -> IntArray:
    rng = np.random.default_rng(seed)
    collected = np.zeros((0, width), dtype=np.int64)
    while collected.shape[0] < count:
        draw = rng.integers(0, n, size=(2 * count, width))
        ordered = np.sort(draw, axis=1)
        draw = draw[np.all(np.diff(ordered, axis=1) > 0, axis=1)]
        collected = _unique_rows(np.vstack([collected, draw]))
    return collected[:count]
