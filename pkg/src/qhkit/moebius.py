"""
Cross ratios, quasimöbius / quasisymmetric distortion scans with parametric
eta envelopes, and the quasi-isometry and affine-j fits between two domains.
"""

import dataclasses
import logging
import math

import numpy as np

from .config import SamplingConfig, ScanConfig
from .enums import CheckStatus, Messages, QhWeightMode
from .errors import CorrespondenceError, DomainError
from .quasihyperbolic import j_distances, pair_qh_distances
from .sampling import quadruples, sample_pairs, triples
from .spaces import DomainSpace, FiniteMetricSpace
from .transforms import TransformedSpace
from .typing import INFINITY, FloatArray, IntArray

logger = logging.getLogger("qhkit.moebius")

# relative slack when comparing the fitted C of two exponents
ENVELOPE_TIE = 1e-9

# post-fit soundness tolerance, the fitted C is a rounded quotient
ENVELOPE_SLACK = 1e-12

GRID_STEP = 0.25
GRID_ROWS = 400


# cross ratios

def cross_ratios(D: FloatArray, quads: IntArray) -> FloatArray:
    """cr(Q) = d(x1, x3) d(x2, x4) / (d(x1, x4) d(x2, x3)) for every row of `quads`."""
    q = np.asarray(quads, dtype=np.int64).reshape(-1, 4)
    x1, x2, x3, x4 = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    return D[x1, x3] * D[x2, x4] / (D[x1, x4] * D[x2, x3])


def cross_ratio(space: FiniteMetricSpace, Q) -> float:
    Q = space.check_ids(Q)
    if Q.size != 4 or np.unique(Q).size != 4:
        raise DomainError(Messages.REPEATED_POINTS % Q.tolist())
    x1, x2, x3, x4 = (int(x) for x in Q)
    return space.distance(x1, x3) * space.distance(x2, x4) / (space.distance(x1, x4) * space.distance(x2, x3))


@dataclasses.dataclass(frozen=True)
class QuadrupleSample:
    Q: tuple[int, ...]
    cr_in: float
    cr_out: float

    def to_dict(self) -> dict:
        return dict(Q=list(self.Q), cr_in=self.cr_in, cr_out=self.cr_out)


# envelopes

@dataclasses.dataclass(frozen=True)
class EtaEnvelope:
    """eta(t) = C * max(t**alpha, t**(1/alpha)) with C >= 1 and 0 < alpha <= 1."""

    C: float
    alpha: float

    def __post_init__(self):
        assert self.C >= 1, f"expected C >= 1 but got {self.C}"
        assert 0 < self.alpha <= 1, f"expected 0 < alpha <= 1 but got {self.alpha}"

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        return self.C * envelope_base(t, self.alpha)

    def inverse(self, s):
        """eta^-1, exact for the parametric form."""
        u = np.asarray(s, dtype=np.float64) / self.C
        return np.where(u >= 1, u ** self.alpha, u ** (1 / self.alpha))

    def inverse_map(self) -> 'EtaEnvelope':
        """
        An envelope for the inverse map: 1/eta^-1(1/t) equals
        max((Ct)**alpha, (Ct)**(1/alpha)), which C**(1/alpha) * max(t**alpha, t**(1/alpha)) dominates.
        """
        return EtaEnvelope(self.C ** (1 / self.alpha), self.alpha)

    def compose(self, other: 'EtaEnvelope'):
        """self o other as a plain callable."""
        return lambda t: self(other(t))

    def to_dict(self) -> dict:
        return dict(C=self.C, alpha=self.alpha)


def envelope_base(t: FloatArray, alpha: float) -> FloatArray:
    return np.maximum(t ** alpha, t ** (1 / alpha))


def inverse_envelope(envelope: EtaEnvelope):
    """t -> 1 / eta^-1(1/t), the control function of the inverse map."""
    return lambda t: 1.0 / envelope.inverse(1.0 / np.asarray(t, dtype=np.float64))


def fit_envelope(t_in: FloatArray, t_out: FloatArray, alphas=ScanConfig.alphas) -> tuple[EtaEnvelope, dict[float, float]]:
    """
    Minimal C for every alpha of the grid; the reported envelope takes the largest
    alpha whose C is within `ENVELOPE_TIE` of the smallest one.
    """
    t_in = np.asarray(t_in, dtype=np.float64)
    t_out = np.asarray(t_out, dtype=np.float64)
    table: dict[float, float] = {}
    for alpha in alphas:
        C = 1.0
        if t_in.size:
            C = max(1.0, float(np.max(t_out / envelope_base(t_in, alpha))))
        table[float(alpha)] = C

    smallest = min(table.values())
    alpha = max(a for a, C in table.items() if C <= smallest * (1 + ENVELOPE_TIE))
    envelope = EtaEnvelope(table[alpha], alpha)
    if t_in.size:
        assert np.all(t_out <= envelope(t_in) * (1 + ENVELOPE_SLACK)), "fitted envelope must dominate every sample"
    return envelope, table


# correspondences

def check_correspondence(n_in: int, n_out: int, correspondence) -> IntArray:
    """
    `correspondence[i]` is the output id of input point i, or -1 where undefined.
    Defined entries must be in range and pairwise distinct.
    """
    image = np.asarray(correspondence, dtype=np.int64).reshape(-1)
    if image.size != n_in:
        raise CorrespondenceError(Messages.NOT_BIJECTIVE % f"expected {n_in} entries, got {image.size}")
    defined = image[image >= 0]
    if np.any(image < -1) or np.any(defined >= n_out):
        raise CorrespondenceError(Messages.NOT_BIJECTIVE % "ids out of range")
    if np.unique(defined).size != defined.size:
        values, counts = np.unique(defined, return_counts=True)
        raise CorrespondenceError(Messages.NOT_BIJECTIVE % f"output id {int(values[counts > 1][0])} is hit more than once")
    return image


def identity_correspondence(n: int) -> IntArray:
    return np.arange(n, dtype=np.int64)


def transform_correspondence(ts: TransformedSpace) -> IntArray:
    """Identity of the source points into a transformed space, -1 for the removed base point."""
    image = np.full(ts.source.size, -1, dtype=np.int64)
    for index, label in enumerate(ts.labels):
        if label != INFINITY:
            image[label] = index
    return image


# distortion scans

@dataclasses.dataclass(frozen=True, eq=False)
class DistortionScan:
    """
    Samples of a distortion scan: `ids[i]` are input point ids, `t_in`/`t_out` the
    cross ratios (or distance ratios) before and after the correspondence.
    """

    kind: str
    ids: IntArray
    t_in: FloatArray
    t_out: FloatArray
    envelope: EtaEnvelope
    table: dict[float, float]
    exhaustive: bool

    @property
    def size(self) -> int:
        return int(self.t_in.size)

    def sample(self, i: int) -> QuadrupleSample:
        return QuadrupleSample(tuple(int(x) for x in self.ids[i]), float(self.t_in[i]), float(self.t_out[i]))

    def samples(self):
        for i in range(self.size):
            yield self.sample(i)

    def worst(self) -> QuadrupleSample | None:
        """The sample that binds the fitted C."""
        if not self.size:
            return None
        slack = self.t_out / envelope_base(self.t_in, self.envelope.alpha)
        return self.sample(int(np.argmax(slack)))

    def ratio_range(self) -> tuple[float, float]:
        if not self.size:
            return 1.0, 1.0
        ratio = self.t_out / self.t_in
        return float(ratio.min()), float(ratio.max())

    def ratio_violations(self, factor: float) -> int:
        """Samples with t_out/t_in outside [1/factor, factor]."""
        ratio = self.t_out / self.t_in
        return int(np.sum((ratio > factor) | (ratio < 1 / factor)))

    def sound(self) -> bool:
        return bool(np.all(self.t_out <= self.envelope(self.t_in) * (1 + ENVELOPE_SLACK)))

    def to_dict(self) -> dict:
        worst = self.worst()
        low, high = self.ratio_range()
        return dict(
            kind=self.kind,
            samples=self.size,
            exhaustive=self.exhaustive,
            envelope=self.envelope.to_dict(),
            table=[dict(alpha=a, C=C) for a, C in sorted(self.table.items(), reverse=True)],
            worst=None if worst is None else dict(Q=list(worst.Q), cr_in=worst.cr_in, cr_out=worst.cr_out),
            ratio=dict(low=low, high=high),
        )


def _scan_points(space_in: FiniteMetricSpace, space_out: FiniteMetricSpace, correspondence, points) -> tuple[IntArray, IntArray]:
    image = check_correspondence(
        space_in.size,
        space_out.size,
        identity_correspondence(space_in.size) if correspondence is None else correspondence,
    )
    points = np.flatnonzero(image >= 0) if points is None else space_in.check_ids(points)
    if np.any(image[points] < 0):
        raise CorrespondenceError(Messages.NOT_BIJECTIVE % "scanned points without an image")
    return image, points


def qm_scan(
    space_in: FiniteMetricSpace,
    space_out: FiniteMetricSpace,
    correspondence=None,
    config: ScanConfig = ScanConfig(),
    points=None,
) -> DistortionScan:
    """Cross ratio distortion cr(Q, d_in) -> cr(f(Q), d_out) over seeded or exhaustive quadruples."""
    image, points = _scan_points(space_in, space_out, correspondence, points)
    quads, exhaustive = quadruples(points, config)

    t_in = cross_ratios(space_in.distance_matrix, quads)
    t_out = cross_ratios(space_out.distance_matrix, image[quads])
    envelope, table = fit_envelope(t_in, t_out, config.alphas)
    logger.debug(f"qm scan over {quads.shape[0]} quadruples: C={envelope.C:.4g}, alpha={envelope.alpha:.4g}")
    return DistortionScan("qm", quads, t_in, t_out, envelope, table, exhaustive)


def qs_scan(
    space_in: FiniteMetricSpace,
    space_out: FiniteMetricSpace,
    correspondence=None,
    config: ScanConfig = ScanConfig(),
    points=None,
) -> DistortionScan:
    """Distance ratio distortion d(x, y)/d(x, z) over seeded or exhaustive triples."""
    image, points = _scan_points(space_in, space_out, correspondence, points)
    tri, exhaustive = triples(points, config)

    D_in, D_out = space_in.distance_matrix, space_out.distance_matrix
    x, y, z = tri[:, 0], tri[:, 1], tri[:, 2]
    t_in = D_in[x, y] / D_in[x, z]
    t_out = D_out[image[x], image[y]] / D_out[image[x], image[z]]
    envelope, table = fit_envelope(t_in, t_out, config.alphas)
    logger.debug(f"qs scan over {tri.shape[0]} triples: C={envelope.C:.4g}, alpha={envelope.alpha:.4g}")
    return DistortionScan("qs", tri, t_in, t_out, envelope, table, exhaustive)


def composition_dominated(scan_gf: DistortionScan, eta_f: EtaEnvelope, eta_g: EtaEnvelope) -> bool:
    """The samples of g o f stay below eta_g(eta_f(t))."""
    bound = eta_g.compose(eta_f)(scan_gf.t_in)
    return bool(np.all(scan_gf.t_out <= bound * (1 + ENVELOPE_SLACK)))


# grid fits

@dataclasses.dataclass(frozen=True, eq=False)
class GridFit:
    """
    Table of `value -> offset` on the grid 1, 1.25, 1.5, ... where offset is the
    least nonnegative number with `target <= value * source + offset` on every
    sample. The reported pair minimizes value + offset (ties to the smaller value).
    """

    value_name: str
    offset_name: str
    pairs: IntArray
    sources: FloatArray
    targets: FloatArray
    values: FloatArray
    offsets: FloatArray

    def offset_at(self, value: float) -> tuple[float, int | None]:
        if self.sources.size == 0:
            return 0.0, None
        excess = self.targets - value * self.sources
        worst = int(np.argmax(excess))
        return max(0.0, float(excess[worst])), worst

    def at(self, value: float) -> float:
        return self.offset_at(value)[0]

    @property
    def best_index(self) -> int:
        total = self.values + self.offsets
        return int(np.flatnonzero(total <= total.min())[0])

    @property
    def best(self) -> tuple[float, float]:
        i = self.best_index
        return float(self.values[i]), float(self.offsets[i])

    def witness(self, value: float) -> tuple[int, int] | None:
        _, worst = self.offset_at(value)
        if worst is None:
            return None
        row = self.pairs[worst % self.pairs.shape[0]]
        return int(row[0]), int(row[1])

    def to_dict(self) -> dict:
        value, offset = self.best
        return {
            self.value_name: value,
            self.offset_name: offset,
            "witness": self.witness(value),
            "samples": int(self.pairs.shape[0]),
            "table": [{self.value_name: float(v), self.offset_name: float(o)} for v, o in zip(self.values, self.offsets)],
        }


def grid_fit(value_name: str, offset_name: str, pairs: IntArray, sources: FloatArray, targets: FloatArray, start: float = 1.0) -> GridFit:
    """
    Fits `targets <= value * sources + offset`. `sources`/`targets` may stack several
    directions; row i belongs to pair `i % len(pairs)`.
    """
    sources = np.asarray(sources, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)

    positive = sources > 0
    top = start
    if np.any(positive):
        top = max(start, float(np.max(targets[positive] / sources[positive])))
    rows = min(GRID_ROWS, int(math.ceil((top - start) / GRID_STEP)) + 1)
    values = start + GRID_STEP * np.arange(rows)

    fit = GridFit(value_name, offset_name, np.asarray(pairs, dtype=np.int64).reshape(-1, 2), sources, targets, values, np.zeros(rows))
    offsets = np.array([fit.at(v) for v in values])
    return dataclasses.replace(fit, offsets=offsets)


def _mapped_pairs(dom_in: DomainSpace, dom_out: DomainSpace, correspondence, sampling: SamplingConfig) -> tuple[IntArray, IntArray]:
    image = check_correspondence(dom_in.ambient.size, dom_out.ambient.size, correspondence)
    candidates = dom_in.mesh.vertices
    mapped = image[candidates]
    keep = mapped >= 0
    keep[keep] = [dom_out.mesh.is_meshed(int(y)) for y in mapped[keep]]
    points = candidates[keep]
    pairs = sample_pairs(dom_in, sampling, points=points)
    return pairs, image[pairs]


def qi_fit(
    dom_in: DomainSpace,
    dom_out: DomainSpace,
    correspondence,
    mode: QhWeightMode = QhWeightMode.TRAPEZOID,
    sampling: SamplingConfig = SamplingConfig(),
    workers: int = 1,
) -> GridFit:
    """(L, A) with k_out <= L k_in + A and k_in <= L k_out + A over sampled pairs."""
    pairs, images = _mapped_pairs(dom_in, dom_out, correspondence, sampling)
    k_in = pair_qh_distances(dom_in, pairs, mode, workers=workers)
    k_out = pair_qh_distances(dom_out, images, mode, workers=workers)
    return grid_fit("L", "A", pairs, np.concatenate([k_in, k_out]), np.concatenate([k_out, k_in]))


def j_affine_fit(
    dom_in: DomainSpace,
    dom_out: DomainSpace,
    correspondence,
    sampling: SamplingConfig = SamplingConfig(),
) -> GridFit:
    """(a, b) with j_out <= a j_in + b and j_in <= a j_out + b over sampled pairs."""
    pairs, images = _mapped_pairs(dom_in, dom_out, correspondence, sampling)
    j_in = j_distances(dom_in, pairs[:, 0], pairs[:, 1])
    j_out = j_distances(dom_out, images[:, 0], images[:, 1])
    return grid_fit("a", "b", pairs, np.concatenate([j_in, j_out]), np.concatenate([j_out, j_in]))


@dataclasses.dataclass(frozen=True)
class PairCheck:
    status: CheckStatus
    pairs: int
    violations: int
    worst_pair: tuple[int, int] | None
    worst_margin: float

    def to_dict(self) -> dict:
        return dict(
            status=str(self.status),
            pairs=self.pairs,
            violations=self.violations,
            worst_pair=None if self.worst_pair is None else list(self.worst_pair),
            worst_margin=self.worst_margin,
        )


def _pair_check(pairs: IntArray, lhs: FloatArray, rhs: FloatArray) -> PairCheck:
    if pairs.shape[0] == 0:
        return PairCheck(CheckStatus.VACUOUS, 0, 0, None, math.inf)
    margin = rhs - lhs
    worst = int(np.argmin(margin))
    violations = int(np.sum(margin < 0))
    return PairCheck(
        status=CheckStatus.PASS if violations == 0 else CheckStatus.FAIL,
        pairs=int(pairs.shape[0]),
        violations=violations,
        worst_pair=(int(pairs[worst, 0]), int(pairs[worst, 1])),
        worst_margin=float(margin[worst]),
    )


def r_distortion_check(
    dom_in: DomainSpace,
    dom_out: DomainSpace,
    correspondence,
    envelope: EtaEnvelope,
    sampling: SamplingConfig = SamplingConfig(),
) -> PairCheck:
    """
    With `envelope` controlling the distance ratios of the inverse correspondence,
    checks 1 + r_in <= (1 + C)(1 + r_out)**(1/alpha) on sampled pairs.
    """
    pairs, images = _mapped_pairs(dom_in, dom_out, correspondence, sampling)
    r_in = np.expm1(j_distances(dom_in, pairs[:, 0], pairs[:, 1]))
    r_out = np.expm1(j_distances(dom_out, images[:, 0], images[:, 1]))
    lhs = 1 + r_in
    rhs = (1 + envelope.C) * (1 + r_out) ** (1 / envelope.alpha)
    return _pair_check(pairs, lhs, rhs * (1 + ENVELOPE_SLACK))


def qi_scale(envelope: EtaEnvelope, lambda2: float, c2: float) -> float:
    """q = log(1 + eta^-1(lambda2 / (2 c2))), the scale below which k_out stays under lambda2."""
    return float(np.log1p(envelope.inverse(lambda2 / (2 * c2))))


def qi_local_check(
    dom_in: DomainSpace,
    dom_out: DomainSpace,
    correspondence,
    envelope: EtaEnvelope,
    lambda2: float,
    c2: float,
    mode: QhWeightMode = QhWeightMode.UPPER,
    sampling: SamplingConfig = SamplingConfig(),
) -> PairCheck:
    """Pairs with k_in <= qi_scale(...) must satisfy k_out <= lambda2 (times 1 + 2 beta in upper mode)."""
    pairs, images = _mapped_pairs(dom_in, dom_out, correspondence, sampling)
    q = qi_scale(envelope, lambda2, c2)
    k_in = pair_qh_distances(dom_in, pairs, mode)
    local = k_in <= q
    pairs, images = pairs[local], images[local]
    k_out = pair_qh_distances(dom_out, images, mode)
    bound = lambda2 * ((1 + 2 * dom_out.beta) if mode == QhWeightMode.UPPER else 1.0)
    return _pair_check(pairs, k_out, np.full(k_out.shape, bound))
