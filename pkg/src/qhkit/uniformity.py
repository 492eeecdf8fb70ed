"""
Uniform-curve scores and the domain constants: uniformity, QH-uniformity,
(lambda, c)-quasiconvexity, annular convexity and the additive k/j fit.
"""

import dataclasses
import logging
import math
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import graphs
from .config import SamplingConfig
from .enums import CheckStatus, CurveKind, Messages, QhWeightMode
from .errors import DomainError
from .moebius import GridFit, grid_fit
from .quasihyperbolic import j_distances, pair_qh_distances
from .reports import ConstantsReport
from .sampling import sample_pairs
from .spaces import DomainSpace, FiniteMetricSpace, MeshGraph, space_graph
from .typing import FloatArray, IntArray
from .utils import run_in_order

logger = logging.getLogger("qhkit.uniformity")

CANDIDATE_MODES: dict[CurveKind, QhWeightMode | None] = {
    CurveKind.LENGTH: None,
    CurveKind.QH_UPPER: QhWeightMode.UPPER,
    CurveKind.QH_TRAPEZOID: QhWeightMode.TRAPEZOID,
}

DEFAULT_LAMBDAS = (1 / 16, 1 / 8, 1 / 4, 1 / 2)
ANNULAR_GRID = (1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0)
DIVERGENCE_FACTOR = 1.3

# meshed points above which quasiconvexity samples its ball centres
QUASICONVEX_DENSE_LIMIT = 3000


# curve scores

@dataclasses.dataclass(frozen=True)
class UniformCurveScore:
    curve: list[int]
    turning: float
    cigar: float
    kind: CurveKind | None = None

    @property
    def score(self) -> float:
        return max(self.turning, self.cigar)

    def to_dict(self) -> dict:
        return dict(
            curve=self.curve,
            turning=self.turning,
            cigar=self.cigar,
            score=self.score,
            kind=None if self.kind is None else str(self.kind),
        )


def _score_arrays(segments: FloatArray, clearance: FloatArray, chord: float) -> tuple[float, float]:
    """(turning, cigar) of a polyline with the given segment lengths and vertex clearances."""
    prefix = np.concatenate([[0.0], np.cumsum(segments)])
    total = prefix[-1]
    turning = max(total / chord, 1.0)
    cigar = float(np.max(np.minimum(prefix, total - prefix) / clearance))
    return turning, cigar


def curve_score(dom: DomainSpace, path: Sequence[int], x: int, y: int, kind: CurveKind | None = None) -> UniformCurveScore:
    """
    Turning ratio l/d(x, y) and cigar ratio max min(prefix, suffix)/d(v) over the
    vertices of `path`; x = y scores 1.
    """
    path = [int(v) for v in path]
    if not path or path[0] != x or path[-1] != y:
        raise DomainError(Messages.OUT_OF_RANGE % ("path endpoints", (path[:1], path[-1:])))
    if x == y:
        return UniformCurveScore(path, 1.0, 0.0, kind)

    ids = np.asarray(path, dtype=np.int64)
    segments = dom.ambient.pairwise_positions(ids, np.arange(ids.size - 1), np.arange(1, ids.size))
    chord = dom.ambient.pairwise_positions(ids, np.array([0]), np.array([ids.size - 1]))[0]
    turning, cigar = _score_arrays(segments, dom.clearance(ids), float(chord))
    return UniformCurveScore(path, turning, cigar, kind)


# uniformity estimate

@dataclasses.dataclass(frozen=True, eq=False)
class UniformityEstimate:
    pairs: IntArray
    kinds: tuple[CurveKind, ...]
    candidate_scores: FloatArray
    witness: UniformCurveScore | None
    witness_pair: tuple[int, int] | None

    @property
    def scores(self) -> FloatArray:
        if self.candidate_scores.size == 0:
            return np.zeros(0)
        return self.candidate_scores.min(axis=1)

    @property
    def c_est(self) -> float:
        scores = self.scores
        return float(scores.max()) if scores.size else 1.0

    def to_dict(self) -> dict:
        return dict(
            c_est=self.c_est,
            pairs=int(self.pairs.shape[0]),
            candidates=[str(k) for k in self.kinds],
            witness=None if self.witness is None else dict(pair=list(self.witness_pair or ()), **self.witness.to_dict()),
        )


def _score_sources(
    dom: DomainSpace,
    mode: QhWeightMode | None,
    sources: IntArray,
    targets: list[IntArray],
) -> list[FloatArray]:
    """Scores of the deterministic geodesics from each local source to its local targets."""
    mesh = dom.mesh
    graph = mesh.graph(mode)
    edges = mesh.directed_edges(mode)
    rows = graphs.shortest_from(graph, sources)
    vertices = mesh.vertices
    out = []
    for row, source, local_targets in zip(rows, sources, targets):
        pred = graphs.predecessors(graph, row, int(source), edges=edges).tolist()
        scores = np.empty(local_targets.size)
        chords = dom.ambient.pairwise_positions(vertices, np.full(local_targets.size, source), local_targets)
        for i, target in enumerate(local_targets):
            path = np.asarray(graphs.walk_path(pred, int(source), int(target)), dtype=np.int64)
            segments = dom.ambient.pairwise_positions(vertices, path[:-1], path[1:])
            turning, cigar = _score_arrays(segments, mesh.clearance[path], float(chords[i]))
            scores[i] = max(turning, cigar)
        out.append(scores)
    return out


def _candidate_path(dom: DomainSpace, kind: CurveKind, x: int, y: int) -> list[int]:
    path, _ = dom.mesh.path(x, y, CANDIDATE_MODES[kind])
    return path


def uniformity_estimate(
    dom: DomainSpace,
    pairs: IntArray | None = None,
    sampling: SamplingConfig = SamplingConfig(),
    kinds: Sequence[CurveKind] = tuple(CurveKind),
    workers: int = 1,
) -> UniformityEstimate:
    """
    For every pair, the best score among the candidate curves (the length geodesic
    and the two QH geodesics); c_est is the worst pair.
    """
    kinds = tuple(kinds)
    pairs = sample_pairs(dom, sampling) if pairs is None else np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    scores = np.ones((pairs.shape[0], len(kinds)))
    if pairs.shape[0] == 0:
        return UniformityEstimate(pairs, kinds, scores, None, None)

    mesh = dom.mesh
    local = np.stack([mesh.positions(pairs[:, 0]), mesh.positions(pairs[:, 1])], axis=1)
    sources, inverse = np.unique(local[:, 0], return_inverse=True)
    groups = [np.flatnonzero(inverse == i) for i in range(sources.size)]

    for column, kind in enumerate(kinds):
        mode = CANDIDATE_MODES[kind]
        mesh.graph(mode)
        mesh.directed_edges(mode)
        batches = [range(i, min(i + graphs.SOURCE_BATCH, sources.size)) for i in range(0, sources.size, graphs.SOURCE_BATCH)]
        tasks = [
            lambda batch=batch: _score_sources(dom, mode, sources[batch.start:batch.stop], [local[groups[i], 1] for i in batch])
            for batch in batches
        ]
        results = run_in_order(tasks, workers=workers) if workers > 1 and len(tasks) > 1 else [task() for task in tasks]
        for batch, result in zip(batches, results):
            if isinstance(result, Exception):
                raise result
            for i, values in zip(batch, result):
                scores[groups[i], column] = values

    best = scores.min(axis=1)
    worst = int(np.argmax(best))
    x, y = int(pairs[worst, 0]), int(pairs[worst, 1])
    kind = kinds[int(np.argmin(scores[worst]))]
    witness = curve_score(dom, _candidate_path(dom, kind, x, y), x, y, kind)
    logger.info(f"{dom.name or 'domain'}: c_est={best.max():.4g} over {pairs.shape[0]} pairs (witness {x}-{y}, {kind})")
    return UniformityEstimate(pairs, kinds, scores, witness, (x, y))


# QH uniformity

@dataclasses.dataclass(frozen=True, eq=False)
class QhUniformity:
    pairs: IntArray
    j: FloatArray
    k_trapezoid: FloatArray
    k_upper: FloatArray

    def _max(self, k: FloatArray) -> tuple[float, tuple[int, int] | None]:
        if self.j.size == 0:
            return 1.0, None
        ratio = k / self.j
        i = int(np.argmax(ratio))
        return float(ratio[i]), (int(self.pairs[i, 0]), int(self.pairs[i, 1]))

    @property
    def c_qh(self) -> float:
        return self._max(self.k_trapezoid)[0]

    @property
    def c_qh_upper(self) -> float:
        return self._max(self.k_upper)[0]

    def to_dict(self) -> dict:
        value, pair = self._max(self.k_trapezoid)
        upper, upper_pair = self._max(self.k_upper)
        return dict(
            c_qh=value,
            witness=None if pair is None else list(pair),
            c_qh_upper=upper,
            witness_upper=None if upper_pair is None else list(upper_pair),
            pairs=int(self.pairs.shape[0]),
        )


def qh_uniformity(
    dom: DomainSpace,
    pairs: IntArray | None = None,
    sampling: SamplingConfig = SamplingConfig(),
    workers: int = 1,
) -> QhUniformity:
    """max k/j over sampled pairs, trapezoid (estimate) and upper (>= 1 exactly) modes."""
    pairs = sample_pairs(dom, sampling) if pairs is None else np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    return QhUniformity(
        pairs=pairs,
        j=j_distances(dom, pairs[:, 0], pairs[:, 1]),
        k_trapezoid=pair_qh_distances(dom, pairs, QhWeightMode.TRAPEZOID, workers=workers),
        k_upper=pair_qh_distances(dom, pairs, QhWeightMode.UPPER, workers=workers),
    )


# quasiconvexity

@dataclasses.dataclass(frozen=True)
class QuasiconvexRow:
    lam: float
    c: float
    witness: tuple[int, int, int] | None
    pairs: int

    @property
    def vacuous(self) -> bool:
        return self.pairs == 0

    def to_dict(self) -> dict:
        return dict(
            **{"lambda": self.lam},
            c=self.c,
            witness=None if self.witness is None else list(self.witness),
            pairs=self.pairs,
        )


@dataclasses.dataclass(frozen=True)
class QuasiconvexTable:
    rows: list[QuasiconvexRow]

    def row(self, lam: float) -> QuasiconvexRow:
        for row in self.rows:
            if math.isclose(row.lam, lam):
                return row
        raise KeyError(lam)

    def c_at(self, lam: float) -> float:
        return self.row(lam).c

    def to_dict(self) -> list[dict]:
        return [row.to_dict() for row in self.rows]


def quasiconvexity_estimate(
    dom: DomainSpace,
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
    max_centers: int = 400,
    seed: int = 17,
    workers: int = 1,
) -> QuasiconvexTable:
    """
    c(lambda) = max l(y1, y2)/d(y1, y2) over pairs inside a ball B(x, lambda d(x)),
    x running over the meshed points (a seeded subset on very large meshes).
    """
    mesh = dom.mesh
    m = mesh.size
    centers = np.arange(m)
    if m > QUASICONVEX_DENSE_LIMIT:
        centers = np.sort(np.random.default_rng(seed).choice(m, size=max_centers, replace=False))
        logger.info(f"{dom.name or 'domain'}: quasiconvexity over {max_centers} of {m} ball centres")

    vertices = mesh.vertices
    # only the largest balls and the length rows of their members are kept
    reach = dom.ambient.pairwise(vertices[centers], vertices)
    balls = [np.flatnonzero(reach[i] < max(lambdas) * mesh.clearance[x]) for i, x in enumerate(centers)]
    needed = np.unique(np.concatenate(balls))
    lengths = mesh.distances(vertices[needed], workers=workers)
    row_of = np.full(m, -1, dtype=np.int64)
    row_of[needed] = np.arange(needed.size)

    rows = []
    for lam in lambdas:
        best, witness, count = 1.0, None, 0
        for i, x in enumerate(centers):
            ball = balls[i]
            members = ball[reach[i, ball] < lam * mesh.clearance[x]]
            if members.size < 2:
                continue
            sub_l = lengths[np.ix_(row_of[members], members)]
            sub_d = dom.ambient.pairwise(vertices[members], vertices[members])
            iu = np.triu_indices(members.size, k=1)
            ratio = sub_l[iu] / sub_d[iu]
            count += ratio.size
            top = int(np.argmax(ratio))
            if ratio[top] > best or witness is None:
                best = max(best, float(ratio[top]))
                witness = (int(vertices[x]), int(vertices[members[iu[0][top]]]), int(vertices[members[iu[1][top]]]))
        rows.append(QuasiconvexRow(float(lam), best if count else math.nan, witness, count))
        logger.debug(f"{dom.name or 'domain'}: c({lam:.4g}) = {best:.4g} over {count} pairs")
    return QuasiconvexTable(rows)


# annular convexity

@dataclasses.dataclass(frozen=True)
class AnnularCheck:
    status: CheckStatus
    c: float
    pairs: int
    witness: dict | None

    def to_dict(self) -> dict:
        return {"c": self.c, "pass": self.status == CheckStatus.PASS, "status": str(self.status), "pairs": self.pairs, "witness": self.witness}


def _annulus_graph(source: DomainSpace | FiniteMetricSpace, k: int) -> tuple[MeshGraph, FiniteMetricSpace]:
    if isinstance(source, DomainSpace):
        return source.mesh, source.ambient
    return space_graph(source, k), source


def annular_convexity_check(
    source: DomainSpace | FiniteMetricSpace,
    c: float,
    radii: Sequence[float],
    centers: Sequence[int] | None = None,
    n_centers: int = 8,
    max_annulus: int = 64,
    seed: int = 17,
    k: int = 8,
) -> AnnularCheck:
    """
    For centres x and radii r, every pair y, z in B(x, 2r) minus B(x, r) must be joined
    by a graph path of length <= c d(y, z) that avoids B(x, r/c).
    """
    mesh, ambient = _annulus_graph(source, k)
    rng = np.random.default_rng(seed)
    vertices = mesh.vertices
    if centers is None:
        count = min(n_centers, vertices.size)
        local_centers = np.sort(rng.choice(vertices.size, size=count, replace=False))
    else:
        local_centers = mesh.positions(centers)

    graph = mesh.graph()
    checked = 0
    for x in local_centers:
        row = ambient.pairwise([vertices[x]], vertices)[0]
        for r in radii:
            annulus = np.flatnonzero((row >= r) & (row < 2 * r))
            if annulus.size < 2:
                continue
            if annulus.size > max_annulus:
                annulus = np.sort(rng.choice(annulus, size=max_annulus, replace=False))

            keep = np.flatnonzero(row >= r / c)
            local = np.full(vertices.size, -1, dtype=np.int64)
            local[keep] = np.arange(keep.size)
            sub = graph[keep][:, keep]
            dist = graphs.shortest_from(sub, local[annulus])[:, local[annulus]]
            direct = ambient.pairwise(vertices[annulus], vertices[annulus])

            iu = np.triu_indices(annulus.size, k=1)
            checked += iu[0].size
            excess = dist[iu] - c * direct[iu]
            if np.any(excess > 0):
                i = int(np.argmax(excess))
                witness = dict(
                    center=int(vertices[x]),
                    r=float(r),
                    pair=[int(vertices[annulus[iu[0][i]]]), int(vertices[annulus[iu[1][i]]])],
                    length=float(dist[iu][i]),
                    distance=float(direct[iu][i]),
                )
                return AnnularCheck(CheckStatus.FAIL, float(c), checked, witness)

    status = CheckStatus.PASS if checked else CheckStatus.VACUOUS
    return AnnularCheck(status, float(c), checked, None)


def default_radii(dom: DomainSpace) -> tuple[float, ...]:
    mesh = dom.mesh
    far = dom.ambient.pairwise(mesh.vertices[:1], mesh.vertices).max()
    return (far / 16, far / 8, far / 4)


def annular_constant(
    source: DomainSpace | FiniteMetricSpace,
    radii: Sequence[float],
    grid: Sequence[float] = ANNULAR_GRID,
    seed: int = 17,
) -> AnnularCheck:
    """Smallest grid c that passes (passing is monotone in c), else the failing check at the largest c."""
    lo, hi = 0, len(grid) - 1
    result = annular_convexity_check(source, grid[hi], radii, seed=seed)
    if result.status != CheckStatus.PASS:
        return result
    best = result
    while lo < hi:
        mid = (lo + hi) // 2
        attempt = annular_convexity_check(source, grid[mid], radii, seed=seed)
        if attempt.status == CheckStatus.PASS:
            best, hi = attempt, mid
        else:
            lo = mid + 1
    return best


# additive fit and proof constants

def additive_fit(
    dom: DomainSpace,
    pairs: IntArray | None = None,
    sampling: SamplingConfig = SamplingConfig(),
    mode: QhWeightMode = QhWeightMode.TRAPEZOID,
    workers: int = 1,
) -> GridFit:
    """(c, c') with k <= c j + c' on sampled pairs, c on the grid 1, 1.25, ..."""
    pairs = sample_pairs(dom, sampling) if pairs is None else np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    j = j_distances(dom, pairs[:, 0], pairs[:, 1])
    k = pair_qh_distances(dom, pairs, mode, workers=workers)
    return grid_fit("c", "cprime", pairs, j, k)


def qh_from_additive(c: float, c_prime: float, lambda0: float, c0: float) -> float:
    """k <= c j + c' on a (lambda0, c0)-quasiconvex domain gives k <= (c + c'/log(1 + lambda0/(2 c0))) j."""
    return c + c_prime / math.log1p(lambda0 / (2 * c0))


def additive_bound(lambda0: float, c0: float, c: float) -> float:
    """c' = 2 lambda0 + 2 c log(2 c0 c / lambda0) of a c-uniform (lambda0, c0)-quasiconvex domain."""
    return 2 * lambda0 + 2 * c * math.log(2 * c0 * c / lambda0)


def cigar_objective(u, c0: float):
    return u * np.expm1(2 * c0 / np.asarray(u, dtype=np.float64))


def cigar_constant(c0: float, upper: float = 1e6) -> tuple[float, float]:
    """
    Numeric max over u >= 2 of u (exp(2 c0/u) - 1), next to its closed form
    2 (exp(c0) - 1) attained at u = 2.
    """
    grid = np.geomspace(2.0, upper, 20001)
    values = cigar_objective(grid, c0)
    i = int(np.argmax(values))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    refined = minimize_scalar(lambda u: -float(cigar_objective(u, c0)), bounds=(lo, hi), method="bounded")
    numeric = max(float(values.max()), -float(refined.fun))
    return numeric, 2 * math.expm1(c0)


@dataclasses.dataclass(frozen=True)
class RefinementTrend:
    status: CheckStatus
    values: list[float]
    growth: list[float]

    def to_dict(self) -> dict:
        return dict(status=str(self.status), values=self.values, growth=self.growth)


def refinement_trend(values: Sequence[float], factor: float = DIVERGENCE_FACTOR) -> RefinementTrend:
    """`diverges` when every successive refinement grows the value by at least `factor`."""
    values = [float(v) for v in values]
    growth = [b / a for a, b in zip(values, values[1:])]
    diverges = bool(growth) and all(g >= factor for g in growth)
    return RefinementTrend(CheckStatus.DIVERGES if diverges else CheckStatus.PASS, values, growth)


@dataclasses.dataclass(frozen=True)
class AdditiveBoundCheck:
    """The additive offset of k - c_g j measured at c_g >= 2 c_est against its closed-form bound."""

    status: CheckStatus
    c_est: float
    lambda0: float
    c0: float
    c_grid: float
    c_prime: float
    bound: float
    witness: tuple[int, int] | None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self) | {"status": str(self.status)}


def additive_bound_check(
    dom: DomainSpace,
    sampling: SamplingConfig = SamplingConfig(),
    lambda0: float = 0.5,
    mode: QhWeightMode = QhWeightMode.UPPER,
    workers: int = 1,
) -> AdditiveBoundCheck:
    """
    With c_est from the uniformity estimate and c0 = c(lambda0) from the
    quasiconvexity estimate, the fitted offset at the first grid value >= 2 c_est
    must stay below (1 + 2 beta) times `additive_bound(lambda0, c0, c_est)`.
    """
    pairs = sample_pairs(dom, sampling)
    c_est = uniformity_estimate(dom, pairs, workers=workers).c_est
    c0 = quasiconvexity_estimate(dom, (lambda0,), seed=sampling.seed, workers=workers).c_at(lambda0)
    c0 = 1.0 if math.isnan(c0) else c0

    fit = additive_fit(dom, pairs, mode=mode, workers=workers)
    c_grid = 1.0 + 0.25 * math.ceil(max(0.0, 2 * c_est - 1.0) / 0.25 - 1e-9)
    c_prime = fit.at(c_grid)
    bound = (1 + 2 * dom.beta) * additive_bound(lambda0, c0, c_est)
    status = CheckStatus.PASS if c_prime <= bound else CheckStatus.FAIL
    return AdditiveBoundCheck(status, c_est, lambda0, c0, c_grid, c_prime, bound, fit.witness(c_grid))


def estimate_constants(
    dom: DomainSpace,
    sampling: SamplingConfig = SamplingConfig(),
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
    radii: Sequence[float] | None = None,
    workers: int = 1,
) -> ConstantsReport:
    pairs = sample_pairs(dom, sampling)
    uniform = uniformity_estimate(dom, pairs, workers=workers)
    qh = qh_uniformity(dom, pairs, workers=workers)
    table = quasiconvexity_estimate(dom, lambdas, seed=sampling.seed, workers=workers)
    annular = annular_constant(dom, default_radii(dom) if radii is None else radii, seed=sampling.seed)
    additive = additive_fit(dom, pairs, workers=workers)

    c, c_prime = additive.best
    lambda0 = max(lambdas)
    c0 = table.c_at(lambda0)
    implied = None if math.isnan(c0) else qh_from_additive(c, c_prime, lambda0, c0)
    qh_dict = qh.to_dict()

    return ConstantsReport(
        domain=dom.name,
        mesh=dom.mesh.to_dict() | {"points": dom.interior.size},
        c_uniform=uniform.c_est,
        c_qh=qh.c_qh,
        c_qh_upper=qh.c_qh_upper,
        quasiconvex=[{"lambda": row.lam, "c": row.c, "pairs": row.pairs} for row in table.rows],
        annular=dict(
            c=annular.c if annular.status == CheckStatus.PASS else "fails",
            **{"pass": annular.status != CheckStatus.FAIL},
            status=str(annular.status),
        ),
        additive=dict(c=c, cprime=c_prime, qh_constant=implied),
        witnesses=dict(
            c_uniform=uniform.to_dict()["witness"],
            c_qh=qh_dict["witness"],
            c_qh_upper=qh_dict["witness_upper"],
            quasiconvex=[row.to_dict()["witness"] for row in table.rows],
            annular=annular.witness,
            additive=additive.witness(c),
        ),
    )
