import dataclasses
import logging
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.spatial import KDTree
from scipy.spatial.distance import cdist

from ..enums import AmbientKind, Messages
from ..errors import DomainError
from ..typing import FloatArray, IntArray

logger = logging.getLogger("qhkit.spaces")

# absolute tolerance for the axioms of explicit matrices
MATRIX_TOLERANCE = 1e-12

# full triangle scans of coordinate spaces above this size are skipped, they hold by construction
COORDINATE_SCAN_LIMIT = 400


@dataclasses.dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """
    A finite set of points `0..n-1` with a distance function, given either by
    coordinates and an ambient tag or by an explicit symmetric matrix.

    - euclidean: `|x - y|` on `coords`
    - snowflake: `|x - y| ** epsilon` on `coords`
    - curve: `|s(x) - s(y)|` on the `arclength` parameter (intrinsic metric of a curve)
    - matrix: `matrix[x, y]`
    """

    kind: AmbientKind
    coords: FloatArray | None = None
    matrix: FloatArray | None = None
    epsilon: float | None = None
    arclength: FloatArray | None = None
    name: str = ""
    unbounded: bool = False

    def __post_init__(self):
        match self.kind:
            case AmbientKind.MATRIX:
                if self.matrix is None:
                    raise DomainError(Messages.MISSING_INPUT % "matrix for a matrix ambient")
                matrix = np.asarray(self.matrix, dtype=np.float64)
                if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
                    raise DomainError(Messages.OUT_OF_RANGE % ("matrix shape", matrix.shape))
                object.__setattr__(self, "matrix", matrix)
            case AmbientKind.CURVE:
                if self.arclength is None:
                    raise DomainError(Messages.MISSING_INPUT % "arclength for a curve ambient")
                object.__setattr__(self, "arclength", np.asarray(self.arclength, dtype=np.float64).reshape(-1))
            case _:
                if self.coords is None:
                    raise DomainError(Messages.MISSING_INPUT % f"coordinates for a {self.kind} ambient")
                coords = np.asarray(self.coords, dtype=np.float64)
                if coords.ndim == 1:
                    coords = coords.reshape(-1, 1)
                object.__setattr__(self, "coords", coords)

        if self.kind == AmbientKind.SNOWFLAKE:
            if self.epsilon is None or not (0 < self.epsilon < 1):
                raise DomainError(Messages.OUT_OF_RANGE % ("epsilon", self.epsilon))

        if self.size < 1:
            raise DomainError(Messages.OUT_OF_RANGE % ("point count", self.size))

    # constructors

    @classmethod
    def euclidean(cls, coords, name: str = "", unbounded: bool = False) -> 'FiniteMetricSpace':
        return cls(AmbientKind.EUCLIDEAN, coords=np.asarray(coords, dtype=np.float64), name=name, unbounded=unbounded)

    @classmethod
    def snowflake(cls, coords, epsilon: float, name: str = "") -> 'FiniteMetricSpace':
        return cls(AmbientKind.SNOWFLAKE, coords=np.asarray(coords, dtype=np.float64), epsilon=epsilon, name=name)

    @classmethod
    def from_matrix(cls, matrix, name: str = "", unbounded: bool = False) -> 'FiniteMetricSpace':
        return cls(AmbientKind.MATRIX, matrix=np.asarray(matrix, dtype=np.float64), name=name, unbounded=unbounded)

    # queries

    @property
    def size(self) -> int:
        match self.kind:
            case AmbientKind.MATRIX:
                assert self.matrix is not None
                return self.matrix.shape[0]
            case AmbientKind.CURVE:
                assert self.arclength is not None
                return self.arclength.shape[0]
            case _:
                assert self.coords is not None
                return self.coords.shape[0]

    @property
    def point_ids(self) -> IntArray:
        return np.arange(self.size, dtype=np.int64)

    def check_ids(self, ids) -> IntArray:
        ids = np.asarray(ids, dtype=np.int64).reshape(-1)
        bad = ids[(ids < 0) | (ids >= self.size)]
        if bad.size:
            raise DomainError(Messages.UNKNOWN_POINT % (int(bad[0]), self.size))
        return ids

    def pairwise(self, a: Sequence[int] | IntArray, b: Sequence[int] | IntArray) -> FloatArray:
        """Distance block `d(a[i], b[j])`."""
        a = self.check_ids(a)
        b = self.check_ids(b)
        match self.kind:
            case AmbientKind.MATRIX:
                assert self.matrix is not None
                return self.matrix[np.ix_(a, b)]
            case AmbientKind.CURVE:
                assert self.arclength is not None
                return np.abs(self.arclength[a][:, None] - self.arclength[b][None, :])
            case AmbientKind.SNOWFLAKE:
                assert self.coords is not None and self.epsilon is not None
                return cdist(self.coords[a], self.coords[b]) ** self.epsilon
            case _:
                assert self.coords is not None
                return cdist(self.coords[a], self.coords[b])

    def distance(self, x: int, y: int) -> float:
        return float(self.pairwise([x], [y])[0, 0])

    def distances_from(self, x: int, ids: Sequence[int] | IntArray | None = None) -> FloatArray:
        ids = self.point_ids if ids is None else ids
        return self.pairwise([x], ids)[0]

    @cached_property
    def distance_matrix(self) -> FloatArray:
        if self.kind == AmbientKind.MATRIX:
            assert self.matrix is not None
            return self.matrix
        ids = self.point_ids
        return self.pairwise(ids, ids)

    @property
    def diameter(self) -> float:
        return float(self.distance_matrix.max())

    def nearest(self, ids: IntArray, k: int) -> tuple[IntArray, FloatArray]:
        """
        The `k` nearest neighbours of every point of `ids` among `ids` (self excluded),
        returned as positions into `ids` together with their distances.
        """
        ids = self.check_ids(ids)
        k = min(k, ids.size - 1)
        if k < 1:
            return np.zeros((ids.size, 0), dtype=np.int64), np.zeros((ids.size, 0))

        if self.kind == AmbientKind.MATRIX:
            block = self.pairwise(ids, ids).copy()
            np.fill_diagonal(block, np.inf)
            positions = np.argsort(block, axis=1, kind="stable")[:, :k]
            return positions.astype(np.int64), np.take_along_axis(block, positions, axis=1)

        if self.kind == AmbientKind.CURVE:
            assert self.arclength is not None
            points = self.arclength[ids].reshape(-1, 1)
        else:
            assert self.coords is not None
            points = self.coords[ids]

        # snowflake distances are monotone in the euclidean ones, so the neighbours agree
        _, positions = KDTree(points).query(points, k=k + 1)
        positions = np.asarray(positions, dtype=np.int64)[:, 1:]
        rows = np.repeat(np.arange(ids.size), k)
        lengths = self.pairwise_positions(ids, rows, positions.reshape(-1)).reshape(ids.size, k)
        return positions, lengths

    def pairwise_positions(self, ids: IntArray, left: IntArray, right: IntArray) -> FloatArray:
        """Elementwise distances `d(ids[left[i]], ids[right[i]])`."""
        a, b = ids[left], ids[right]
        match self.kind:
            case AmbientKind.MATRIX:
                assert self.matrix is not None
                return self.matrix[a, b]
            case AmbientKind.CURVE:
                assert self.arclength is not None
                return np.abs(self.arclength[a] - self.arclength[b])
            case AmbientKind.SNOWFLAKE:
                assert self.coords is not None and self.epsilon is not None
                return np.linalg.norm(self.coords[a] - self.coords[b], axis=1) ** self.epsilon
            case _:
                assert self.coords is not None
                return np.linalg.norm(self.coords[a] - self.coords[b], axis=1)

    def subspace(self, ids: Sequence[int] | IntArray, name: str | None = None) -> 'FiniteMetricSpace':
        """Restriction to `ids`, renumbered `0..len(ids)-1` in the given order."""
        ids = self.check_ids(ids)
        return dataclasses.replace(
            self,
            coords=None if self.coords is None else self.coords[ids],
            matrix=None if self.matrix is None else self.matrix[np.ix_(ids, ids)],
            arclength=None if self.arclength is None else self.arclength[ids],
            name=self.name if name is None else name,
        )

    # serialization

    def ambient_dict(self) -> dict:
        data: dict = dict(kind=str(self.kind))
        if self.kind == AmbientKind.SNOWFLAKE:
            data["epsilon"] = self.epsilon
        if self.kind == AmbientKind.MATRIX:
            assert self.matrix is not None
            data["matrix"] = self.matrix.tolist()
        if self.kind == AmbientKind.CURVE:
            assert self.arclength is not None
            data["arclength"] = self.arclength.tolist()
        return data

    def to_dict(self) -> dict:
        return dict(
            name=self.name,
            ambient=self.ambient_dict(),
            points=None if self.coords is None else self.coords.tolist(),
            unbounded=self.unbounded,
        )

    @classmethod
    def from_dict(cls, data: dict) -> 'FiniteMetricSpace':
        ambient = data.get("ambient")
        if not isinstance(ambient, dict) or "kind" not in ambient:
            raise DomainError(Messages.MISSING_INPUT % "ambient.kind")
        try:
            kind = AmbientKind(ambient["kind"])
        except ValueError:
            raise DomainError(Messages.OUT_OF_RANGE % ("ambient.kind", ambient["kind"]))

        points = data.get("points")
        return cls(
            kind=kind,
            coords=None if points is None else np.asarray(points, dtype=np.float64),
            matrix=None if ambient.get("matrix") is None else np.asarray(ambient["matrix"], dtype=np.float64),
            epsilon=ambient.get("epsilon"),
            arclength=None if ambient.get("arclength") is None else np.asarray(ambient["arclength"], dtype=np.float64),
            name=data.get("name", ""),
            unbounded=bool(data.get("unbounded", False)),
        )


@dataclasses.dataclass(frozen=True)
class MetricViolation:
    """
    A failed axiom. For the triangle inequality `ids = (x, y, via)` and
    `slack = d(x, y) - d(x, via) - d(via, y) > 0`.
    """

    axiom: str
    ids: tuple[int, ...]
    slack: float

    def to_dict(self) -> dict:
        return dict(axiom=self.axiom, ids=list(self.ids), slack=self.slack)


@dataclasses.dataclass(frozen=True)
class MetricValidation:
    ok: bool
    violations: list[MetricViolation]
    total_violations: int
    checked_triangles: bool

    def to_dict(self) -> dict:
        return dict(
            ok=self.ok,
            violations=[v.to_dict() for v in self.violations],
            total_violations=self.total_violations,
            checked_triangles=self.checked_triangles,
        )


def validate_metric(space: FiniteMetricSpace, tolerance: float = MATRIX_TOLERANCE, limit: int = 100) -> MetricValidation:
    """
    Checks every metric axiom of `space`. Violations are returned as data, the
    `limit` worst ones are kept in the result (sorted by slack).
    """
    n = space.size
    violations: list[MetricViolation] = []
    total = 0

    scan_triangles = space.kind == AmbientKind.MATRIX or n <= COORDINATE_SCAN_LIMIT
    if not scan_triangles:
        logger.info(f"skipping the triangle scan of {space.name or 'space'} ({n} points), it holds for {space.kind} ambients")

    D = space.distance_matrix

    diagonal = np.abs(np.diag(D))
    for x in np.flatnonzero(diagonal > tolerance):
        violations.append(MetricViolation("identity", (int(x),), float(diagonal[x])))

    asymmetry = np.abs(D - D.T)
    xs, ys = np.nonzero(np.triu(asymmetry > tolerance, k=1))
    for x, y in zip(xs, ys):
        violations.append(MetricViolation("symmetry", (int(x), int(y)), float(asymmetry[x, y])))

    off = ~np.eye(n, dtype=bool)
    xs, ys = np.nonzero(np.triu((D <= 0) & off, k=1))
    for x, y in zip(xs, ys):
        violations.append(MetricViolation("positivity", (int(x), int(y)), float(-D[x, y])))
    total += len(violations)

    if scan_triangles:
        upper = np.triu(np.ones((n, n), dtype=bool), k=1)
        for via in range(n):
            excess = D - (D[:, via:via + 1] + D[via:via + 1, :])
            bad = (excess > tolerance) & upper
            count = int(bad.sum())
            if not count:
                continue
            total += count
            xs, ys = np.nonzero(bad)
            # keep only the worst few per pivot, the global cut happens below
            worst = np.argsort(-excess[xs, ys], kind="stable")[:limit]
            for i in worst:
                violations.append(MetricViolation("triangle", (int(xs[i]), int(ys[i]), via), float(excess[xs[i], ys[i]])))

    violations.sort(key=lambda v: (-v.slack, v.axiom, v.ids))
    return MetricValidation(
        ok=total == 0,
        violations=violations[:limit],
        total_violations=total,
        checked_triangles=scan_triangles,
    )
