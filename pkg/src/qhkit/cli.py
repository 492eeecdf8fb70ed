import argparse
import csv
import logging
import os
import sys
from pathlib import Path
from typing import Any

import numpy as np

from .config import MeshConfig, SamplingConfig, ScanConfig, SuiteChecks, SuiteConfig
from .enums import AmbientKind, DomainKind, Messages, QhWeightMode, TransformKind
from .errors import ConfigError, CorrespondenceError, DomainError, MeshError
from .storage.files import dumps, read_json, write_json
from .storage.paths import QhkitPaths, resolve_input

logger = logging.getLogger("qhkit.cli")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_COMPUTATION = 3

EXTRA_GENERATORS = ("arc_example", "dyadic_line", "random")


class CliParser(argparse.ArgumentParser):
    """Usage errors surface as ConfigError instead of exiting the interpreter."""

    def error(self, message):
        raise ConfigError(Messages.INVALID_CONFIG % message)


# input / output


def _load(path: str):
    """The finite space in `path` and, when the file describes a domain, the domain."""
    from .spaces import DomainSpace
    from .storage.files import load_space

    path = Path(path).expanduser()
    if not path.exists():
        raise ConfigError(Messages.MISSING_INPUT % path)
    if path.suffix == ".npz":
        return load_space(path), None
    try:
        data = read_json(path)
    except ValueError as e:
        raise ConfigError(Messages.INVALID_CONFIG % f"{path}: {e}")
    if isinstance(data, dict) and "interior" in data:
        dom = DomainSpace.from_dict(data)
        return dom.ambient, dom
    return load_space(path), None


def _load_domain(path: str):
    _, dom = _load(path)
    if dom is None:
        raise ConfigError(Messages.MISSING_INPUT % f"interior/boundary samples in {path}")
    return dom


def _emit(args, data: Any):
    if args.out:
        write_json(args.out, data)
        logger.info(f"wrote {args.out}")
    else:
        sys.stdout.write(dumps(data) + "\n")


def _write_csv(path: str, header: list[str], rows):
    with open(path, mode="w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)
    logger.info(f"wrote {path}")


def _point(dom, value: str, ids: bool) -> int:
    try:
        if ids:
            return int(value)
        coords = [float(v) for v in value.split(",")]
    except ValueError:
        raise ConfigError(Messages.INVALID_CONFIG % f"expected {'a point id' if ids else 'comma separated coordinates'}, got {value!r}")
    return dom.nearest_interior(coords)


# subcommands


def cmd_gen(args) -> int:
    from . import generators

    match args.kind:
        case DomainKind.DISK:
            data = generators.gen_disk(args.h, center=args.center, radius=args.radius).to_dict()
        case DomainKind.SNOWFLAKE_DISK:
            data = generators.gen_snowflake_disk(args.epsilon, args.h).to_dict()
        case DomainKind.HALFLINE:
            data = generators.gen_halfline(args.ratio, span=tuple(args.span)).to_dict()
        case DomainKind.GRID_RECT:
            data = generators.gen_grid_rect(args.h, width=args.width, height=args.height).to_dict()
        case DomainKind.SLIT_DISK:
            data = generators.gen_slit_disk(args.h).to_dict()
        case "arc_example":
            dom, inverted = generators.gen_arc_example(args.u, n=args.n, ambient=AmbientKind(args.ambient))
            if args.inverted_out:
                write_json(args.inverted_out, inverted.to_dict())
            data = dom.to_dict()
        case "dyadic_line":
            data = generators.gen_dyadic_line().to_dict()
        case "random":
            rng = np.random.default_rng(args.seed)
            data = generators.random_space(rng, args.max_points, index=args.index).to_dict()
        case _:
            raise ConfigError(Messages.INVALID_CONFIG % f"unknown generator {args.kind!r}")
    _emit(args, data)
    return EXIT_OK


def cmd_validate(args) -> int:
    from .spaces import validate_metric

    space, dom = _load(args.input)
    validation = validate_metric(space)
    data = dict(
        name=space.name,
        points=space.size,
        metric=validation.to_dict(),
        domain=None,
    )
    if dom is not None:
        data["domain"] = dict(
            interior=int(dom.interior.size),
            boundary=int(dom.boundary.size),
            min_clearance=float(dom.boundary_distances.min()),
            mesh=dom.mesh.to_dict(),
        )
    _emit(args, data)
    return EXIT_OK if validation.ok else EXIT_CHECK_FAILED


def cmd_mesh(args) -> int:
    dom = _load_domain(args.input)
    config = MeshConfig(
        beta=dom.mesh_config.beta if args.beta is None else args.beta,
        k=dom.mesh_config.k if args.k is None else args.k,
    )
    dom = dom.with_mesh_config(config)
    _emit(args, dict(name=dom.name, points=int(dom.interior.size), mesh=dom.mesh.to_dict()))
    return EXIT_OK


def cmd_qh(args) -> int:
    from .quasihyperbolic import j_distance, qh_distance, relative_distance

    dom = _load_domain(args.input)
    x, y = _point(dom, args.x, args.ids), _point(dom, args.y, args.ids)
    mode = QhWeightMode(args.mode)
    _emit(args, {
        "pair": [x, y],
        "k": qh_distance(dom, x, y, mode),
        "j": j_distance(dom, x, y),
        "r": relative_distance(dom, x, y),
        "mode": str(mode),
    })
    return EXIT_OK


def cmd_transform(args) -> int:
    from .generators import transformed_domain
    from .transforms import transform

    space, dom = _load(args.input)
    ts = transform(space, TransformKind(args.kind), args.p, unbounded=args.unbounded, cache=args.cache)
    data = transformed_domain(dom, ts).to_dict() if dom is not None else ts.as_space().to_dict()
    data.update(labels=ts.labels.tolist(), sandwich=ts.sandwich().to_dict())
    _emit(args, data)
    return EXIT_OK


def cmd_cr(args) -> int:
    from .moebius import cross_ratio, transform_correspondence
    from .transforms import transform

    space, _ = _load(args.input)
    quad = [int(x) for x in args.quad]
    data = {"Q": quad, "cr": cross_ratio(space, quad), "transform": None, "cr_out": None}
    if args.transform:
        ts = transform(space, TransformKind(args.transform), args.p, unbounded=args.unbounded, cache=args.cache)
        image = transform_correspondence(ts)
        if np.any(image[quad] < 0):
            raise DomainError(Messages.OUT_OF_RANGE % ("quadruple containing the base point", quad))
        data.update(transform=args.transform, cr_out=cross_ratio(ts.as_space(), image[quad].tolist()))
    _emit(args, data)
    return EXIT_OK


def cmd_scan(args) -> int:
    from .moebius import qm_scan, qs_scan, transform_correspondence
    from .transforms import transform

    space_in, _ = _load(args.input)
    if args.transform:
        ts = transform(space_in, TransformKind(args.transform), args.p, unbounded=args.unbounded, cache=args.cache)
        space_out, correspondence = ts.as_space(), transform_correspondence(ts)
    elif args.to:
        space_out, _ = _load(args.to)
        correspondence = None
        if args.correspondence:
            try:
                correspondence = np.asarray(read_json(args.correspondence), dtype=np.int64)
            except (FileNotFoundError, ValueError) as e:
                raise ConfigError(Messages.INVALID_CONFIG % f"correspondence {args.correspondence}: {e}")
    else:
        raise ConfigError(Messages.MISSING_INPUT % "a target space (--to) or a transform (--transform)")

    config = ScanConfig(seed=args.seed, n_samples=args.samples)
    scan = (qm_scan if args.kind == "qm" else qs_scan)(space_in, space_out, correspondence, config)
    if args.csv:
        _write_csv(args.csv, ["t_in", "t_out"], zip(scan.t_in.tolist(), scan.t_out.tolist()))
    _emit(args, scan.to_dict())
    return EXIT_OK


def cmd_constants(args) -> int:
    from .uniformity import estimate_constants

    dom = _load_domain(args.input)
    report = estimate_constants(dom, SamplingConfig(seed=args.seed, n_pairs=args.pairs), workers=args.threads)
    if args.csv:
        _write_csv(args.csv, ["lambda", "c", "pairs"], ([row["lambda"], row["c"], row["pairs"]] for row in report.quasiconvex))
    _emit(args, report.to_dict())
    return EXIT_OK


def cmd_suite(args) -> int:
    from .suite import run_suite

    config = SuiteConfig.from_file(resolve_input(args.config))
    overrides: dict[str, Any] = dict(seed=args.seed, threads=args.threads_explicit)
    if args.checks:
        try:
            overrides["checks"] = SuiteChecks.from_names(args.checks)
        except KeyError as e:
            raise ConfigError(Messages.INVALID_CONFIG % f"unknown check {e.args[0]!r}")
    config = config.with_overrides(**overrides)

    report = run_suite(config)
    for record in report.records:
        logger.info(f"{record.check.name}: {record.status} ({record.anchor})")
    if args.csv:
        _write_csv(args.csv, ["check", "status", "runtime"], ([r.check.name, str(r.status), r.runtime] for r in report.records))
    _emit(args, report.to_dict())
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


# parser


def _add_transform_args(parser: argparse.ArgumentParser, required: bool):
    parser.add_argument(
        "--transform", "-t",
        type=str,
        choices=[k.value for k in TransformKind],
        required=required,
        help="Transform applied to the input space."
    )
    parser.add_argument(
        "--p",
        type=int,
        default=0,
        help="Base point id of the transform, defaults to 0."
    )
    parser.add_argument(
        "--unbounded",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="Whether the inversion adds the point at infinity, defaults to the space's own flag."
    )


def _common_parser(seed: int | None) -> CliParser:
    common = CliParser(add_help=False)
    common.add_argument(
        "--out", "-o",
        type=str,
        default=None,
        help="Write JSON output to this file (`.zst` compresses it), defaults to standard output."
    )
    common.add_argument(
        "--seed", "-s",
        type=int,
        default=seed,
        help="Seed of every randomized step, defaults to 17." if seed is not None else "Seed of every randomized step, defaults to the configuration's."
    )
    common.add_argument(
        "--csv",
        type=str,
        default=None,
        help="Also write plot data as CSV columns to this file."
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser(17)

    parser = CliParser(prog="qhkit", description="Quasihyperbolic metric, sphericalization and inversion on finite spaces.")
    parser.add_argument(
        "--log-level", "-l",
        type=str,
        choices=["debug", "info", "warning", "error", "critical"],
        default="info",
        help="Set the logging level."
    )
    parser.add_argument(
        "--qhkit-directory", "-qd",
        type=str,
        default=None,
        help="The root directory for the metric cache and bundled resources, defaults to \"~/.qhkit/\""
    )
    parser.add_argument(
        "--threads", "-j",
        type=int,
        default=None,
        help="Worker threads for shortest paths and suite checks, defaults to $QHKIT_THREADS or 4."
    )
    parser.add_argument(
        "--cache",
        action=argparse.BooleanOptionalAction,
        default=False,
        help="Cache chain metrics on disk, keyed by their base weights."
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    gen = sub.add_parser("gen", parents=[common], help="Generate a built-in domain or space.")
    gen.add_argument("kind", choices=[k.value for k in DomainKind if k not in (DomainKind.EXPLICIT, DomainKind.ARC_EXAMPLE)] + list(EXTRA_GENERATORS))
    gen.add_argument("--h", type=float, default=0.05, help="Grid spacing.")
    gen.add_argument("--center", type=float, nargs=2, default=(0.0, 0.0), help="Disk centre.")
    gen.add_argument("--radius", type=float, default=1.0, help="Disk radius.")
    gen.add_argument("--epsilon", type=float, default=0.5, help="Snowflake exponent.")
    gen.add_argument("--ratio", type=float, default=1.01, help="Geometric ratio of the half-line samples.")
    gen.add_argument("--span", type=int, nargs=2, default=(-400, 400), help="Exponent range of the half-line samples.")
    gen.add_argument("--width", type=float, default=2.0, help="Rectangle width.")
    gen.add_argument("--height", type=float, default=1.0, help="Rectangle height.")
    gen.add_argument("--u", type=float, default=0.4, help="Removed arc angle of the arc example.")
    gen.add_argument("--n", type=int, default=2000, help="Arc samples.")
    gen.add_argument("--ambient", type=str, choices=[AmbientKind.EUCLIDEAN.value, AmbientKind.CURVE.value], default="euclidean", help="Metric of the arc example.")
    gen.add_argument("--inverted-out", type=str, default=None, help="Also write the inverted arc example to this file.")
    gen.add_argument("--max-points", type=int, default=200, help="Size bound of a random space.")
    gen.add_argument("--index", type=int, default=0, help="Even indices give Euclidean point clouds, odd ones graph metrics.")
    gen.set_defaults(handler=cmd_gen)

    validate = sub.add_parser("validate", parents=[common], help="Check the metric axioms and mesh a domain file.")
    validate.add_argument("--in", "-i", dest="input", type=str, required=True)
    validate.set_defaults(handler=cmd_validate)

    mesh = sub.add_parser("mesh", parents=[common], help="Build the clearance-constrained mesh of a domain.")
    mesh.add_argument("--in", "-i", dest="input", type=str, required=True)
    mesh.add_argument("--beta", type=float, default=None, help="Clearance parameter, defaults to the file's.")
    mesh.add_argument("--k", type=int, default=None, help="Nearest neighbours per vertex, defaults to the file's.")
    mesh.set_defaults(handler=cmd_mesh)

    qh = sub.add_parser("qh", parents=[common], help="Quasihyperbolic distance between two points of a domain.")
    qh.add_argument("--in", "-i", dest="input", type=str, required=True)
    qh.add_argument("--x", type=str, required=True, help="Point coordinates (comma separated), or an id with --ids.")
    qh.add_argument("--y", type=str, required=True, help="Point coordinates (comma separated), or an id with --ids.")
    qh.add_argument("--ids", action="store_true", help="Read --x/--y as point ids.")
    qh.add_argument("--mode", type=str, choices=[m.value for m in QhWeightMode], default=QhWeightMode.UPPER.value)
    qh.set_defaults(handler=cmd_qh)

    tr = sub.add_parser("transform", parents=[common], help="Sphericalize or invert a space or domain.")
    tr.add_argument("--in", "-i", dest="input", type=str, required=True)
    tr.add_argument("--kind", "-k", type=str, choices=[k.value for k in TransformKind], required=True)
    tr.add_argument("--p", type=int, default=0, help="Base point id, defaults to 0.")
    tr.add_argument("--unbounded", action=argparse.BooleanOptionalAction, default=None)
    tr.set_defaults(handler=cmd_transform)

    cr = sub.add_parser("cr", parents=[common], help="Cross ratio of a quadruple, optionally after a transform.")
    cr.add_argument("--in", "-i", dest="input", type=str, required=True)
    cr.add_argument("--quad", "-q", type=int, nargs=4, required=True, metavar="ID")
    _add_transform_args(cr, required=False)
    cr.set_defaults(handler=cmd_cr)

    scan = sub.add_parser("scan", parents=[common], help="Quasimobius (qm) or quasisymmetric (qs) distortion scan.")
    scan.add_argument("--in", "-i", dest="input", type=str, required=True)
    scan.add_argument("--to", type=str, default=None, help="Target space file.")
    scan.add_argument("--correspondence", type=str, default=None, help="JSON list: output id of every input point, -1 for none.")
    scan.add_argument("--kind", type=str, choices=["qm", "qs"], default="qm")
    scan.add_argument("--samples", type=int, default=ScanConfig.n_samples, help="Seeded samples above the exhaustive limit.")
    _add_transform_args(scan, required=False)
    scan.set_defaults(handler=cmd_scan)

    constants = sub.add_parser("constants", parents=[common], help="Estimate the uniformity constants of a domain.")
    constants.add_argument("--in", "-i", dest="input", type=str, required=True)
    constants.add_argument("--pairs", type=int, default=SamplingConfig.n_pairs, help="Seeded pairs above the exhaustive limit.")
    constants.set_defaults(handler=cmd_constants)

    suite = sub.add_parser("suite", parents=[_common_parser(None)], help="Run the verification suite.")
    suite.add_argument("--config", "-c", type=str, default="default.json", help="Suite configuration, falls back to the bundled file of the same name.")
    suite.add_argument("--checks", type=str, nargs="+", default=None, help="Run only these checks (flag names, e.g. Sandwich CigarConstant).")
    suite.set_defaults(handler=cmd_suite)

    return parser


def dispatch(argv: list[str] | None = None) -> int:
    """Runs one subcommand and maps its outcome to an exit code."""
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as e:
        logger.error(str(e))
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    logging.root.setLevel(args.log_level.upper())
    if args.qhkit_directory:
        QhkitPaths.set_root(args.qhkit_directory)

    try:
        if args.threads is None and os.getenv("QHKIT_THREADS"):
            try:
                args.threads = int(os.environ["QHKIT_THREADS"])
            except ValueError:
                raise ConfigError(Messages.INVALID_CONFIG % f"QHKIT_THREADS must be an integer, got {os.environ['QHKIT_THREADS']!r}")
        args.threads_explicit = args.threads
        args.threads = 4 if args.threads is None else args.threads
        if args.threads < 1:
            raise ConfigError(Messages.INVALID_CONFIG % f"threads must be >= 1, got {args.threads}")
        return args.handler(args)
    except ConfigError as e:
        logger.error(str(e))
        return EXIT_USAGE
    except (MeshError, DomainError, CorrespondenceError) as e:
        logger.error(f"{e.__class__.__name__}: {e}")
        for component in getattr(e, "components", []):
            logger.error(f"component {component}")
        return EXIT_COMPUTATION
    except ValueError as e:
        # malformed argument values that slipped past argparse
        logger.error(Messages.INVALID_CONFIG % e)
        return EXIT_USAGE
