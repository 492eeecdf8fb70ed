"""
Sphericalization and inversion of finite metric spaces as exact chain metrics.

Both constructions start from a base weight (s_p or f_p) on the new point set and
take the infimum over finite chains drawn from that set, which on a finite set is
the all-pairs shortest path over the complete graph weighted by the base.
"""

import dataclasses
import logging
import math

import numpy as np

from . import graphs
from .caching import MetricCache
from .enums import CheckStatus, Messages, TransformKind
from .errors import DomainError
from .spaces import FiniteMetricSpace
from .typing import INFINITY, FloatArray, IntArray

logger = logging.getLogger("qhkit.transforms")

SANDWICH_TOLERANCE = 1e-12
ROUNDTRIP_FACTOR = 16.0


@dataclasses.dataclass(frozen=True, eq=False)
class BaseWeight:
    """
    `matrix[i, j]` is the base weight between `labels[i]` and `labels[j]`, labels
    are point ids of the source space and `INFINITY` for the added point.
    """

    kind: TransformKind
    p: int
    labels: IntArray
    matrix: FloatArray


@dataclasses.dataclass(frozen=True, eq=False)
class TransformedSpace:
    source: FiniteMetricSpace
    base: BaseWeight
    chain: FloatArray

    @property
    def kind(self) -> TransformKind:
        return self.base.kind

    @property
    def p(self) -> int:
        return self.base.p

    @property
    def labels(self) -> IntArray:
        return self.base.labels

    @property
    def size(self) -> int:
        return int(self.labels.size)

    def index_of(self, label: int) -> int:
        found = np.flatnonzero(self.labels == label)
        if found.size == 0:
            raise DomainError(Messages.UNKNOWN_POINT % (label, self.size))
        return int(found[0])

    def indices_of(self, labels) -> IntArray:
        lookup = {int(label): i for i, label in enumerate(self.labels)}
        try:
            return np.asarray([lookup[int(label)] for label in labels], dtype=np.int64)
        except KeyError as e:
            raise DomainError(Messages.UNKNOWN_POINT % (e.args[0], self.size))

    @property
    def has_infinity(self) -> bool:
        return bool(np.any(self.labels == INFINITY))

    def as_space(self, name: str | None = None) -> FiniteMetricSpace:
        """The chain metric as an explicit matrix space, points numbered like `labels`."""
        return FiniteMetricSpace.from_matrix(
            self.chain,
            name=name if name is not None else f"{self.kind}({self.source.name or 'space'}, {self.p})",
        )

    def sandwich(self) -> 'SandwichResult':
        return sandwich_check(self)


def spherical_base(space: FiniteMetricSpace, p: int) -> BaseWeight:
    """s_p on X and the added point at infinity (last label)."""
    space.check_ids([p])
    D = space.distance_matrix
    n = space.size
    a = 1.0 + D[p]

    matrix = np.zeros((n + 1, n + 1))
    matrix[:n, :n] = D / np.outer(a, a)
    matrix[:n, n] = matrix[n, :n] = 1.0 / a
    np.fill_diagonal(matrix, 0.0)

    labels = np.append(space.point_ids, INFINITY).astype(np.int64)
    return BaseWeight(TransformKind.SPHERICALIZE, int(p), labels, matrix)


def inversive_base(space: FiniteMetricSpace, p: int, unbounded: bool = False) -> BaseWeight:
    """f_p on X minus p, plus the point at infinity (last label) when `unbounded`."""
    space.check_ids([p])
    if space.size < 2:
        raise DomainError(Messages.OUT_OF_RANGE % ("point count for an inversion", space.size))

    keep = np.flatnonzero(space.point_ids != p)
    D = space.distance_matrix
    a = D[p, keep]
    m = keep.size + (1 if unbounded else 0)

    matrix = np.zeros((m, m))
    matrix[:keep.size, :keep.size] = D[np.ix_(keep, keep)] / np.outer(a, a)
    labels = keep.astype(np.int64)
    if unbounded:
        matrix[:keep.size, -1] = matrix[-1, :keep.size] = 1.0 / a
        labels = np.append(labels, INFINITY).astype(np.int64)
    np.fill_diagonal(matrix, 0.0)
    return BaseWeight(TransformKind.INVERT, int(p), labels, matrix)


def chain_metric(base: BaseWeight | FloatArray, cache: bool = False) -> FloatArray:
    """Infimum over finite chains of summed base weights, i.e. complete-graph shortest paths."""
    weights = base.matrix if isinstance(base, BaseWeight) else np.asarray(base, dtype=np.float64)
    if weights.shape[0] <= 1:
        return np.zeros_like(weights)

    if cache:
        try:
            return MetricCache(weights).chain
        except FileNotFoundError:
            pass

    chain = graphs.complete_graph_distances(weights)
    # restore exact symmetry, the solver accumulates in one direction
    chain = np.minimum(chain, chain.T)

    if cache:
        MetricCache(weights, chain=chain)
    return chain


def sphericalize(space: FiniteMetricSpace, p: int, cache: bool = False) -> TransformedSpace:
    base = spherical_base(space, p)
    logger.debug(f"sphericalizing {space.name or 'space'} ({space.size} points) at {p}")
    return TransformedSpace(space, base, chain_metric(base, cache=cache))


def invert(space: FiniteMetricSpace, p: int, unbounded: bool | None = None, cache: bool = False) -> TransformedSpace:
    unbounded = space.unbounded if unbounded is None else unbounded
    base = inversive_base(space, p, unbounded=unbounded)
    logger.debug(f"inverting {space.name or 'space'} ({space.size} points) at {p}, unbounded={unbounded}")
    return TransformedSpace(space, base, chain_metric(base, cache=cache))


@dataclasses.dataclass(frozen=True)
class SandwichResult:
    """Extremes of chain/base over off-diagonal pairs, the pair labels attaining them."""

    low_ratio: float
    low_pair: tuple[int, int]
    high_ratio: float
    high_pair: tuple[int, int]
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0

    @property
    def worst(self) -> tuple[tuple[int, int], float]:
        # distance of the ratio from the admissible band [1/4, 1], measured multiplicatively
        if 4 * self.low_ratio <= 1 / self.high_ratio:
            return self.low_pair, self.low_ratio
        return self.high_pair, self.high_ratio

    def to_dict(self) -> dict:
        pair, ratio = self.worst
        return dict(
            pair=list(pair),
            ratio=ratio,
            low=dict(pair=list(self.low_pair), ratio=self.low_ratio),
            high=dict(pair=list(self.high_pair), ratio=self.high_ratio),
            violations=self.violations,
        )


def sandwich_check(ts: TransformedSpace, tolerance: float = SANDWICH_TOLERANCE) -> SandwichResult:
    """1/4 base <= chain <= base on every pair, with an absolute tolerance."""
    base, chain = ts.base.matrix, ts.chain
    n = base.shape[0]
    if n < 2:
        return SandwichResult(1.0, (0, 0), 1.0, (0, 0), 0)

    iu = np.triu_indices(n, k=1)
    b, c = base[iu], chain[iu]
    violations = int(np.sum(c < 0.25 * b - tolerance) + np.sum(c > b + tolerance))

    ratio = c / b
    lo, hi = int(np.argmin(ratio)), int(np.argmax(ratio))
    labels = ts.labels
    return SandwichResult(
        low_ratio=float(ratio[lo]),
        low_pair=(int(labels[iu[0][lo]]), int(labels[iu[1][lo]])),
        high_ratio=float(ratio[hi]),
        high_pair=(int(labels[iu[0][hi]]), int(labels[iu[1][hi]])),
        violations=violations,
    )


@dataclasses.dataclass(frozen=True)
class RoundTripResult:
    status: CheckStatus
    worst_ratio: float
    worst_pair: tuple[int, int] | None
    low_ratio: float
    high_ratio: float

    def to_dict(self) -> dict:
        return dict(
            status=str(self.status),
            worst_ratio=self.worst_ratio,
            pair=None if self.worst_pair is None else list(self.worst_pair),
            low=self.low_ratio,
            high=self.high_ratio,
        )


def roundtrip_metric(space: FiniteMetricSpace, p: int, cache: bool = False) -> FloatArray:
    """d' on X: invert the sphericalization at p about its point at infinity (bounded)."""
    sphere = sphericalize(space, p, cache=cache)
    back = invert(sphere.as_space(), sphere.index_of(INFINITY), unbounded=False, cache=cache)
    # labels of `back` index the sphericalized points, which are X in order
    assert np.array_equal(back.labels, np.arange(space.size)), "round trip must return the original points in order"
    return back.chain


def roundtrip_check(space: FiniteMetricSpace, p: int, cache: bool = False) -> RoundTripResult:
    """The identity (X, d) -> (X, d') is 16-bilipschitz."""
    n = space.size
    if n < 2:
        return RoundTripResult(CheckStatus.VACUOUS, 1.0, None, 1.0, 1.0)

    d_prime = roundtrip_metric(space, p, cache=cache)
    iu = np.triu_indices(n, k=1)
    ratio = d_prime[iu] / space.distance_matrix[iu]
    distortion = np.maximum(ratio, 1.0 / ratio)
    worst = int(np.argmax(distortion))

    lo, hi = float(ratio.min()), float(ratio.max())
    passed = lo >= 1 / ROUNDTRIP_FACTOR and hi <= ROUNDTRIP_FACTOR
    return RoundTripResult(
        status=CheckStatus.PASS if passed else CheckStatus.FAIL,
        worst_ratio=float(distortion[worst]),
        worst_pair=(int(iu[0][worst]), int(iu[1][worst])),
        low_ratio=lo,
        high_ratio=hi,
    )


def cross_ratio_cancellation(space: FiniteMetricSpace, base: BaseWeight, quadruples: IntArray) -> float:
    """
    Largest relative gap between cr(Q, base) and cr(Q, d) over quadruples of
    source point ids avoiding p; the base-point factors cancel exactly.
    """
    from .moebius import cross_ratios

    quadruples = np.asarray(quadruples, dtype=np.int64).reshape(-1, 4)
    if quadruples.shape[0] == 0:
        return 0.0
    index = {int(label): i for i, label in enumerate(base.labels)}
    assert not np.any(quadruples == base.p), "quadruples must avoid the base point"
    mapped = np.vectorize(index.__getitem__, otypes=[np.int64])(quadruples)

    cr_d = cross_ratios(space.distance_matrix, quadruples)
    cr_base = cross_ratios(base.matrix, mapped)
    gap = np.abs(cr_base - cr_d) / cr_d
    return float(gap.max()) if gap.size else 0.0


def transform(space: FiniteMetricSpace, kind: TransformKind, p: int, unbounded: bool | None = None, cache: bool = False) -> TransformedSpace:
    match kind:
        case TransformKind.SPHERICALIZE:
            return sphericalize(space, p, cache=cache)
        case TransformKind.INVERT:
            return invert(space, p, unbounded=unbounded, cache=cache)
    raise ValueError(f"unknown transform {kind}")


def sandwich_summary(results: list[SandwichResult]) -> dict:
    worst = min(results, key=lambda r: min(4 * r.low_ratio, 1 / r.high_ratio)) if results else None
    return dict(
        spaces=len(results),
        violations=sum(r.violations for r in results),
        worst=None if worst is None else worst.to_dict(),
        low=min((r.low_ratio for r in results), default=math.nan),
        high=max((r.high_ratio for r in results), default=math.nan),
    )
