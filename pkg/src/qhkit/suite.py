"""
End-to-end numeric verification: every check builds or reuses its spaces and
domains, measures, and returns a record. Checks run concurrently and the report is
assembled in declared check order.
"""

import logging
import math
import threading
import time
from typing import Any, Callable

import numpy as np

from .config import ScanConfig, SuiteChecks, SuiteConfig
from .enums import AmbientKind, CheckStatus
from .errors import QhkitError
from .generators import (arc_ray_start, gen_arc_example, gen_disk, gen_dyadic_line,
                         gen_grid_rect, gen_halfline, gen_slit_disk,
                         gen_snowflake_disk, plane_inversion, random_spaces,
                         subsample_domain, transformed_domain)
from .moebius import qm_scan, transform_correspondence
from .quasihyperbolic import check_lower_bounds, qh_distance
from .reports import CheckRecord, SuiteReport
from .sampling import sample_pairs
from .spaces import DomainSpace, FiniteMetricSpace, length_distance, validate_metric
from .storage.files import load_domain, load_space
from .transforms import (ROUNDTRIP_FACTOR, cross_ratio_cancellation, invert,
                         roundtrip_check, sandwich_check, sphericalize)
from .uniformity import (DEFAULT_LAMBDAS, DIVERGENCE_FACTOR, additive_bound_check,
                         cigar_constant, quasiconvexity_estimate,
                         refinement_trend, uniformity_estimate)
from .utils import format_elapsed, run_in_order

logger = logging.getLogger("qhkit.suite")

ANCHORS: dict[SuiteChecks, str] = {
    SuiteChecks.Sandwich: "1/4 f_p <= d_p <= f_p and 1/4 s_p <= d^_p <= s_p",
    SuiteChecks.QhLowerBound: "k(x, y) >= j(x, y) >= |log d(x)/d(y)|",
    SuiteChecks.CrossRatio16t: "cr(Q, d_p) <= eta(cr(Q, d)) with eta(t) = 16 t",
    SuiteChecks.RoundTrip: "id: (X, d) -> (X, d') is 16-bilipschitz",
    SuiteChecks.QuasiconvexTransfer: "(lambda, c)-quasiconvex => (lambda/(10000 c^2), 64 c)-quasiconvex after sphericalization",
    SuiteChecks.AdditiveConstants: "k <= c j + c' with c' = 2 lambda0 + 2 c log(2 c0 c / lambda0)",
    SuiteChecks.CigarConstant: "c6 = max{u (e^(2 c0/u) - 1): u >= 2} = 2 (e^c0 - 1)",
    SuiteChecks.ArcExample: "c_uniform of the arc grows like 1/u; its inversion is a 1-uniform ray with d_p = |tau(a) - tau(b)|",
    SuiteChecks.SnowflakeDivergence: "(disk, d^eps) has no rectifiable curves",
    SuiteChecks.UniformityStability: "uniform domain under a quasimöbius map => c-uniform image, c = c(eta, c1, c2, lambda)",
}

# absolute tolerances of the exact identities
EUCLIDEAN_IDENTITY_TOLERANCE = 1e-12
ISOMETRY_TOLERANCE = 1e-9
CANCELLATION_TOLERANCE = 1e-12
CIGAR_TOLERANCE = 1e-9

ARC_GROWTH_BAND = (0.8, 1.2)
ARC_INVERTED_BOUND = 3.0
ARC_QUASICONVEX_SLACK = 0.05
HALFLINE_K_BAND = (1.0, 1.05)

# random spaces also scanned for cross ratio bounds
CROSS_RATIO_RANDOM_SPACES = 10


class SuiteContext:
    """Configuration plus a memo of the spaces and domains shared between checks."""

    def __init__(self, config: SuiteConfig):
        self.logger = logging.getLogger(self.__class__.__name__)
        self.config = config
        self._memo: dict[str, Any] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def shared(self, key: str, factory: Callable[[], Any]) -> Any:
        with self._guard:
            lock = self._locks.setdefault(key, threading.Lock())
        with lock:
            if key not in self._memo:
                self.logger.debug(f"building {key}")
                self._memo[key] = factory()
            return self._memo[key]

    # domains

    def disk(self, h: float) -> DomainSpace:
        return self.shared(f"disk:{h}", lambda: gen_disk(h).with_mesh_config(self.config.mesh))

    def halfline(self) -> DomainSpace:
        return self.shared("halfline", lambda: gen_halfline(self.config.halfline_ratio))

    def arc(self, u: float, n: int) -> tuple[DomainSpace, DomainSpace]:
        return self.shared(f"arc:{u}:{n}", lambda: gen_arc_example(u, n))

    def snowflake(self, h: float) -> DomainSpace:
        return self.shared(f"snowflake:{h}", lambda: gen_snowflake_disk(self.config.snowflake_epsilon, h))

    def file_domains(self) -> list[DomainSpace]:
        return self.shared("files", lambda: [load_domain(self.config.resolve(p)) for p in self.config.domain_files])

    def generated_domains(self) -> list[DomainSpace]:
        cfg = self.config

        def build():
            return [
                self.disk(cfg.disk_h),
                self.halfline(),
                gen_grid_rect(cfg.disk_h_transform),
                gen_slit_disk(cfg.disk_h_transform),
                self.arc(cfg.arc_us[0], cfg.arc_n)[0],
                self.snowflake(cfg.snowflake_levels[0]),
            ]
        return self.shared("generated", build) + self.file_domains()

    def ambient_samples(self) -> list[FiniteMetricSpace]:
        """Ambient spaces of every domain, cut down to `transform_max_points`."""
        cfg = self.config

        def build():
            spaces = []
            for dom in self.generated_domains():
                sub = subsample_domain(dom, cfg.transform_max_points, seed=cfg.seed)
                spaces.append(sub.ambient)
            return spaces
        return self.shared("ambient", build)

    def random_spaces(self) -> list[FiniteMetricSpace]:
        cfg = self.config
        return self.shared("random", lambda: random_spaces(cfg.random_spaces, cfg.random_max_points, seed=cfg.seed))

    def extra_spaces(self) -> list[FiniteMetricSpace]:
        return self.shared("extra", lambda: [load_space(self.config.resolve(p)) for p in self.config.extra_spaces])


# checks, each returns (status, values, witness)

CheckResult = tuple[CheckStatus, dict[str, Any], dict[str, Any] | None]


def check_sandwich(ctx: SuiteContext) -> CheckResult:
    spaces = ctx.extra_spaces() + ctx.random_spaces() + ctx.ambient_samples()
    worst_ratio, worst = math.inf, None
    low, high, transforms, identity_gap = math.inf, -math.inf, 0, 0.0

    for space in spaces:
        validation = validate_metric(space)
        if not validation.ok:
            first = validation.violations[0]
            return CheckStatus.FAIL, dict(spaces=len(spaces), invalid=space.name), dict(space=space.name, **first.to_dict())

        for ts in (sphericalize(space, 0), invert(space, 0)):
            result = sandwich_check(ts)
            transforms += 1
            low, high = min(low, result.low_ratio), max(high, result.high_ratio)
            if not result.passed:
                return CheckStatus.FAIL, dict(spaces=len(spaces), transforms=transforms), dict(space=space.name, transform=str(ts.kind), **result.to_dict())
            score = min(4 * result.low_ratio, 1 / result.high_ratio)
            if score < worst_ratio:
                worst_ratio, worst = score, dict(space=space.name, transform=str(ts.kind), **result.to_dict())

            if ts.kind == "invert" and space.kind == AmbientKind.EUCLIDEAN:
                gap = float(np.max(np.abs(ts.chain - ts.base.matrix) / np.maximum(ts.base.matrix, 1.0)))
                identity_gap = max(identity_gap, gap)
                if gap > EUCLIDEAN_IDENTITY_TOLERANCE:
                    return CheckStatus.FAIL, dict(euclidean_identity_gap=gap), dict(space=space.name, transform=str(ts.kind), gap=gap)

    values = dict(spaces=len(spaces), transforms=transforms, low=low, high=high, euclidean_identity_gap=identity_gap)
    return CheckStatus.PASS, values, worst


def check_lower_bound(ctx: SuiteContext) -> CheckResult:
    cfg = ctx.config
    per_domain, pairs_total = [], 0
    for dom in ctx.generated_domains():
        pairs = sample_pairs(dom, cfg.sampling)
        result = check_lower_bounds(dom, pairs)
        pairs_total += result.pairs
        per_domain.append(dict(domain=dom.name, **result.to_dict()))
        if not result.passed:
            return CheckStatus.FAIL, dict(domains=per_domain), dict(domain=dom.name, pair=result.worst_pair, margin=result.worst_margin)

    halfline = ctx.halfline()
    one, two = halfline.nearest_interior([1.0]), halfline.nearest_interior([2.0])
    k = qh_distance(halfline, one, two)
    ratio = k / math.log(2)
    values = dict(pairs=pairs_total, domains=per_domain, halfline_k12=k, halfline_ratio=ratio)
    if not (HALFLINE_K_BAND[0] <= ratio <= HALFLINE_K_BAND[1]):
        return CheckStatus.FAIL, values, dict(domain=halfline.name, pair=[one, two], k=k)
    return CheckStatus.PASS, values, None


def check_cross_ratio(ctx: SuiteContext) -> CheckResult:
    cfg = ctx.config
    spaces = [gen_dyadic_line()] + ctx.random_spaces()[:CROSS_RATIO_RANDOM_SPACES] + ctx.ambient_samples()
    scans, samples, cancellation = 0, 0, 0.0
    low, high = math.inf, -math.inf

    for space in spaces:
        exhaustive = space.size <= cfg.quadruple_exhaustive_points
        scan_config = ScanConfig(
            seed=cfg.seed,
            exhaustive_limit=cfg.scan.exhaustive_limit if exhaustive else 0,
            n_samples=cfg.quadruple_samples,
            alphas=cfg.scan.alphas,
        )
        points = space.point_ids[1:]
        for ts in (sphericalize(space, 0), invert(space, 0)):
            scan = qm_scan(space, ts.as_space(), transform_correspondence(ts), config=scan_config, points=points)
            scans += 1
            samples += scan.size
            if not scan.size:
                continue
            lo, hi = scan.ratio_range()
            low, high = min(low, lo), max(high, hi)
            gap = cross_ratio_cancellation(space, ts.base, scan.ids)
            cancellation = max(cancellation, gap)

            violations = scan.ratio_violations(16.0)
            if violations or gap > CANCELLATION_TOLERANCE:
                ratio = scan.t_out / scan.t_in
                i = int(np.argmax(np.maximum(ratio, 1 / ratio)))
                witness = dict(space=space.name, transform=str(ts.kind), **scan.sample(i).to_dict(), cancellation_gap=gap)
                return CheckStatus.FAIL, dict(scans=scans, violations=violations), witness

    values = dict(scans=scans, samples=samples, low=low, high=high, cancellation_gap=cancellation)
    return CheckStatus.PASS, values, None


def check_roundtrip(ctx: SuiteContext) -> CheckResult:
    dyadic = gen_dyadic_line()
    cases = [(dyadic, int(np.flatnonzero(dyadic.coords[:, 0] == 1.0)[0]))]
    cases += [(space, 0) for space in ctx.ambient_samples()]

    results = []
    for space, p in cases:
        result = roundtrip_check(space, p)
        results.append(dict(space=space.name, p=p, **result.to_dict()))
        if result.status == CheckStatus.FAIL:
            return CheckStatus.FAIL, dict(spaces=results), results[-1]

    worst = max(results, key=lambda r: r["worst_ratio"])
    return CheckStatus.PASS, dict(spaces=results, bound=ROUNDTRIP_FACTOR), worst


def check_quasiconvex_transfer(ctx: SuiteContext) -> CheckResult:
    cfg = ctx.config
    dom = subsample_domain(ctx.disk(cfg.disk_h_transform), cfg.transform_max_points, seed=cfg.seed)
    lam = max(DEFAULT_LAMBDAS)
    c = quasiconvexity_estimate(dom, (lam,), seed=cfg.seed).c_at(lam)

    p = int(dom.boundary[0])
    sphere = transformed_domain(dom, sphericalize(dom.ambient, p), name=f"sphericalized {dom.name}")
    lam_prime = lam / (10000 * c ** 2)
    bound = 64 * c * (1 + 2 * dom.beta)
    table = quasiconvexity_estimate(sphere, (lam_prime, *DEFAULT_LAMBDAS), seed=cfg.seed)

    values = {
        "lambda": lam, "c": c, "p": p,
        "lambda_prime": lam_prime, "c_prime": bound,
        "table": table.to_dict(),
    }
    proven = [row for row in table.rows if not row.vacuous and row.c <= bound]
    if proven:
        values["proven_at"] = min(row.lam for row in proven)
        return CheckStatus.PASS, values, None
    if all(row.vacuous for row in table.rows):
        return CheckStatus.VACUOUS, values, None
    worst = max((row for row in table.rows if not row.vacuous), key=lambda row: row.c)
    return CheckStatus.FAIL, values, worst.to_dict()


def check_additive_constants(ctx: SuiteContext) -> CheckResult:
    cfg = ctx.config
    dom = ctx.disk(cfg.disk_h)
    result = additive_bound_check(dom, cfg.sampling)
    witness = None if result.witness is None else dict(domain=dom.name, pair=result.witness)
    return result.status, result.to_dict(), witness


def check_cigar_constant(ctx: SuiteContext) -> CheckResult:
    rows = []
    for c0 in ctx.config.cigar_c0:
        numeric, closed = cigar_constant(c0)
        gap = abs(numeric - closed)
        rows.append(dict(c0=c0, numeric=numeric, closed_form=closed, gap=gap))
        if gap > CIGAR_TOLERANCE * max(1.0, closed):
            return CheckStatus.FAIL, dict(rows=rows), rows[-1]
    return CheckStatus.PASS, dict(rows=rows), None


def _isometry_gap(dom: DomainSpace, inverted: DomainSpace) -> tuple[float, list[int]]:
    """max |d_p(a, b) - |tau(a) - tau(b)|| over the points of the inverted space."""
    coords = dom.ambient.coords
    assert coords is not None, "isometry check needs plane coordinates"
    p = int(dom.boundary[0])
    labels = np.delete(np.arange(dom.ambient.size), p)
    tau = plane_inversion(coords[labels])
    expected = np.linalg.norm(tau[:, None, :] - tau[None, :, :], axis=2)
    gap = np.abs(inverted.ambient.distance_matrix - expected)
    i, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
    return float(gap[i, j]), [int(labels[i]), int(labels[j])]


def check_arc_example(ctx: SuiteContext) -> CheckResult:
    cfg = ctx.config
    rows = []
    for u in cfg.arc_us:
        dom, inverted = ctx.arc(u, cfg.arc_n)
        gap, pair = _isometry_gap(dom, inverted)
        estimate = uniformity_estimate(dom, sampling=cfg.sampling)
        inverted_estimate = uniformity_estimate(inverted, sampling=cfg.sampling)
        row = dict(
            u=u,
            ray_start=arc_ray_start(u),
            isometry_gap=gap,
            c_uniform=estimate.c_est,
            c_uniform_inverted=inverted_estimate.c_est,
            witness=estimate.to_dict()["witness"],
        )
        rows.append(row)
        if gap > ISOMETRY_TOLERANCE:
            return CheckStatus.FAIL, dict(rows=rows), dict(u=u, pair=pair, gap=gap)
        if inverted_estimate.c_est > ARC_INVERTED_BOUND:
            return CheckStatus.FAIL, dict(rows=rows), dict(u=u, **inverted_estimate.to_dict())

    growth = []
    for a, b in zip(rows, rows[1:]):
        expected = a["u"] / b["u"]
        ratio = b["c_uniform"] / a["c_uniform"]
        growth.append(dict(u=[a["u"], b["u"]], ratio=ratio, expected=expected))
        if not (ARC_GROWTH_BAND[0] * expected <= ratio <= ARC_GROWTH_BAND[1] * expected):
            return CheckStatus.FAIL, dict(rows=rows, growth=growth), growth[-1]

    dom, _ = ctx.arc(cfg.arc_us[0], cfg.arc_n)
    quasiconvex = quasiconvexity_estimate(dom, (0.5,), seed=cfg.seed).row(0.5)
    values = dict(rows=rows, growth=growth, quasiconvex=quasiconvex.to_dict())
    if quasiconvex.c > math.pi + ARC_QUASICONVEX_SLACK:
        return CheckStatus.FAIL, values, quasiconvex.to_dict()
    return CheckStatus.PASS, values, None


def check_snowflake(ctx: SuiteContext) -> CheckResult:
    cfg = ctx.config
    lengths = []
    for h in cfg.snowflake_levels:
        dom = ctx.snowflake(h)
        x, y = dom.nearest_interior([-0.5, 0.0]), dom.nearest_interior([0.5, 0.0])
        lengths.append(length_distance(dom, x, y))

    trend = refinement_trend(lengths)
    values = dict(epsilon=cfg.snowflake_epsilon, levels=list(cfg.snowflake_levels), **trend.to_dict())
    if trend.status == CheckStatus.DIVERGES:
        return CheckStatus.DIVERGES, values, None
    return CheckStatus.FAIL, values, dict(levels=list(cfg.snowflake_levels), lengths=lengths)


def check_stability(ctx: SuiteContext) -> CheckResult:
    cfg = ctx.config
    families: dict[str, list[float]] = {"sphericalized disk": [], "inverted arc": []}

    for h in cfg.stability_levels:
        dom = subsample_domain(gen_disk(h).with_mesh_config(cfg.mesh), cfg.transform_max_points, seed=cfg.seed)
        sphere = transformed_domain(dom, sphericalize(dom.ambient, int(dom.boundary[0])), name=f"sphericalized {dom.name}")
        families["sphericalized disk"].append(uniformity_estimate(sphere, sampling=cfg.sampling).c_est)

    for n in cfg.arc_stability_n:
        _, inverted = ctx.arc(cfg.arc_us[0], n)
        families["inverted arc"].append(uniformity_estimate(inverted, sampling=cfg.sampling).c_est)

    values = {name: refinement_trend(estimates).to_dict() for name, estimates in families.items()}
    for name, estimates in families.items():
        # stable means no refinement step grows the estimate by the divergence factor
        unstable = any(g >= DIVERGENCE_FACTOR for g in values[name]["growth"])
        if unstable or not all(math.isfinite(c) for c in estimates):
            return CheckStatus.FAIL, values, dict(family=name, values=estimates)
    return CheckStatus.PASS, values, None


CHECKS: dict[SuiteChecks, Callable[[SuiteContext], CheckResult]] = {
    SuiteChecks.Sandwich: check_sandwich,
    SuiteChecks.QhLowerBound: check_lower_bound,
    SuiteChecks.CrossRatio16t: check_cross_ratio,
    SuiteChecks.RoundTrip: check_roundtrip,
    SuiteChecks.QuasiconvexTransfer: check_quasiconvex_transfer,
    SuiteChecks.AdditiveConstants: check_additive_constants,
    SuiteChecks.CigarConstant: check_cigar_constant,
    SuiteChecks.ArcExample: check_arc_example,
    SuiteChecks.SnowflakeDivergence: check_snowflake,
    SuiteChecks.UniformityStability: check_stability,
}


def run_check(ctx: SuiteContext, check: SuiteChecks) -> CheckRecord:
    logger.info(f"running {check.name}")
    start = time.perf_counter()
    try:
        status, values, witness = CHECKS[check](ctx)
    except QhkitError as e:
        logger.error(f"{check.name} could not complete: {e}")
        status, values, witness = CheckStatus.FAIL, {}, dict(error=str(e), components=getattr(e, "components", None))
    elapsed = time.perf_counter() - start
    logger.info(f"{check.name}: {status} in {format_elapsed(elapsed)}")
    return CheckRecord(check, ANCHORS[check], status, values, witness, runtime=elapsed)


def run_suite(config: SuiteConfig = SuiteConfig()) -> SuiteReport:
    """Runs the selected checks on `config.threads` workers, records in declared order."""
    config.check_inputs()
    ctx = SuiteContext(config)
    selected = [check for check in SuiteChecks if check in config.checks]

    start = time.perf_counter()
    results = run_in_order([lambda check=check: run_check(ctx, check) for check in selected], workers=config.threads)
    records = []
    for check, result in zip(selected, results):
        if isinstance(result, Exception):
            result = CheckRecord(check, ANCHORS[check], CheckStatus.FAIL, {}, dict(error=repr(result)))
        records.append(result)

    report = SuiteReport(records, config.to_dict(), total_runtime=time.perf_counter() - start)
    logger.info(f"suite {'passed' if report.passed else 'failed'} ({len(records)} checks) in {format_elapsed(report.total_runtime)}")
    return report
