import dataclasses
import math
from pathlib import Path
from typing import Any

from ..enums import Messages
from ..errors import ConfigError
from .checks import SuiteChecks
from .mesh import MeshConfig
from .sampling import SamplingConfig, ScanConfig


@dataclasses.dataclass(frozen=True)
class SuiteConfig:
    """
    Everything the verification suite needs, validated as a whole before any check
    runs. Mesh levels are grid spacings h (snowflake and stability refinements run
    coarse to fine); `arc_us` are the removed-arc angles of the circular-arc domain.
    """

    seed: int = 17
    checks: SuiteChecks = SuiteChecks.all()

    random_spaces: int = 50
    random_max_points: int = 200
    extra_spaces: tuple[str, ...] = ()
    domain_files: tuple[str, ...] = ()

    disk_h: float = 0.05
    disk_h_transform: float = 0.1
    halfline_ratio: float = 1.01
    arc_n: int = 2000
    arc_us: tuple[float, ...] = (0.4, 0.2, 0.1)
    arc_stability_n: tuple[int, ...] = (500, 1000)
    snowflake_epsilon: float = 0.5
    snowflake_levels: tuple[float, ...] = (0.1, 0.05, 0.025)
    stability_levels: tuple[float, ...] = (0.1, 0.07)
    cigar_c0: tuple[float, ...] = (1.0, 2.0, 4.0)

    transform_max_points: int = 800
    quadruple_exhaustive_points: int = 40
    quadruple_samples: int = 100_000
    threads: int = 4

    mesh: MeshConfig = MeshConfig()
    sampling: SamplingConfig = SamplingConfig()
    scan: ScanConfig = ScanConfig()

    base_dir: Path = Path(".")

    def __post_init__(self):
        self.validate()

    def validate(self):
        def require(ok: bool, what: str):
            if not ok:
                raise ConfigError(Messages.INVALID_CONFIG % what)

        require(self.random_spaces >= 0, f"random_spaces must be >= 0, got {self.random_spaces}")
        require(self.random_max_points >= 4, f"random_max_points must be >= 4, got {self.random_max_points}")
        require(0 < self.disk_h <= 0.2, f"disk_h must lie in (0, 0.2], got {self.disk_h}")
        require(0 < self.disk_h_transform <= 0.2, f"disk_h_transform must lie in (0, 0.2], got {self.disk_h_transform}")
        require(self.halfline_ratio > 1, f"halfline_ratio must be > 1, got {self.halfline_ratio}")
        require(self.arc_n >= 100, f"arc_n must be >= 100, got {self.arc_n}")
        require(len(self.arc_us) >= 1 and all(0 < u < math.pi / 2 for u in self.arc_us), f"arc_us must lie in (0, pi/2), got {self.arc_us}")
        require(all(n >= 100 for n in self.arc_stability_n), f"arc_stability_n must be >= 100, got {self.arc_stability_n}")
        require(0 < self.snowflake_epsilon < 1, f"snowflake_epsilon must lie in (0, 1), got {self.snowflake_epsilon}")
        for name in ("snowflake_levels", "stability_levels"):
            levels = getattr(self, name)
            require(len(levels) >= 2, f"{name} needs at least two mesh levels, got {levels}")
            require(all(0 < h <= 0.2 for h in levels), f"{name} must lie in (0, 0.2], got {levels}")
            require(all(a > b for a, b in zip(levels, levels[1:])), f"{name} must refine (strictly decrease), got {levels}")
        require(all(c > 0 for c in self.cigar_c0), f"cigar_c0 must be positive, got {self.cigar_c0}")
        require(self.transform_max_points >= 4, f"transform_max_points must be >= 4, got {self.transform_max_points}")
        require(self.quadruple_exhaustive_points >= 4, f"quadruple_exhaustive_points must be >= 4, got {self.quadruple_exhaustive_points}")
        require(self.quadruple_samples >= 1, f"quadruple_samples must be >= 1, got {self.quadruple_samples}")
        require(self.threads >= 1, f"threads must be >= 1, got {self.threads}")
        require(0 < self.mesh.beta <= 0.5, f"mesh.beta must lie in (0, 0.5], got {self.mesh.beta}")
        require(self.mesh.k >= 1, f"mesh.k must be >= 1, got {self.mesh.k}")

    def resolve(self, path: str) -> Path:
        path = Path(path).expanduser()
        return path if path.is_absolute() else self.base_dir / path

    def check_inputs(self):
        """Every referenced file must exist; raised before any check runs."""
        missing = [p for p in (*self.extra_spaces, *self.domain_files) if not self.resolve(p).exists()]
        if missing:
            raise ConfigError(Messages.MISSING_INPUT % ", ".join(missing))

    def with_overrides(self, **overrides) -> 'SuiteConfig':
        overrides = {k: v for k, v in overrides.items() if v is not None}
        if "seed" in overrides:
            seed = overrides["seed"]
            overrides.setdefault("sampling", self.sampling.with_seed(seed))
            overrides.setdefault("scan", self.scan.with_seed(seed))
        return dataclasses.replace(self, **overrides)

    def to_dict(self) -> dict:
        return dict(
            seed=self.seed,
            checks=[flag.name for flag in SuiteChecks if flag in self.checks],
            random_spaces=self.random_spaces,
            random_max_points=self.random_max_points,
            extra_spaces=list(self.extra_spaces),
            domain_files=list(self.domain_files),
            disk_h=self.disk_h,
            disk_h_transform=self.disk_h_transform,
            halfline_ratio=self.halfline_ratio,
            arc_n=self.arc_n,
            arc_us=list(self.arc_us),
            arc_stability_n=list(self.arc_stability_n),
            snowflake_epsilon=self.snowflake_epsilon,
            snowflake_levels=list(self.snowflake_levels),
            stability_levels=list(self.stability_levels),
            cigar_c0=list(self.cigar_c0),
            transform_max_points=self.transform_max_points,
            quadruple_exhaustive_points=self.quadruple_exhaustive_points,
            quadruple_samples=self.quadruple_samples,
            threads=self.threads,
            mesh=self.mesh.to_dict(),
            sampling=dataclasses.asdict(self.sampling),
            scan=dict(dataclasses.asdict(self.scan), alphas=list(self.scan.alphas)),
        )

    @classmethod
    def from_dict(cls, data: dict[str, Any], base_dir: str | Path = ".") -> 'SuiteConfig':
        if not isinstance(data, dict):
            raise ConfigError(Messages.INVALID_CONFIG % "the configuration must be a JSON object")

        fields = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - set(fields) - {"base_dir"})
        if unknown:
            raise ConfigError(Messages.INVALID_CONFIG % f"unknown keys {unknown}")

        seed = int(data.get("seed", 17))
        kwargs: dict[str, Any] = dict(seed=seed, base_dir=Path(base_dir))
        try:
            if "checks" in data:
                checks = data["checks"]
                kwargs["checks"] = SuiteChecks.all() if checks == "all" else SuiteChecks.from_names(list(checks))

            for name in ("random_spaces", "random_max_points", "arc_n", "transform_max_points",
                         "quadruple_exhaustive_points", "quadruple_samples", "threads"):
                if name in data:
                    kwargs[name] = int(data[name])
            for name in ("disk_h", "disk_h_transform", "halfline_ratio", "snowflake_epsilon"):
                if name in data:
                    kwargs[name] = float(data[name])
            for name in ("arc_us", "snowflake_levels", "stability_levels", "cigar_c0"):
                if name in data:
                    kwargs[name] = tuple(float(v) for v in data[name])
            if "arc_stability_n" in data:
                kwargs["arc_stability_n"] = tuple(int(v) for v in data["arc_stability_n"])
            for name in ("extra_spaces", "domain_files"):
                if name in data:
                    kwargs[name] = tuple(str(v) for v in data[name])

            if "mesh" in data:
                kwargs["mesh"] = MeshConfig.from_dict(data["mesh"])
            sampling = dict(data.get("sampling") or {})
            kwargs["sampling"] = SamplingConfig(**{"seed": seed, **{k: int(v) for k, v in sampling.items()}})
            scan = dict(data.get("scan") or {})
            if "alphas" in scan:
                scan["alphas"] = tuple(float(a) for a in scan["alphas"])
            kwargs["scan"] = ScanConfig(**{"seed": seed, **scan})
        except KeyError as e:
            raise ConfigError(Messages.INVALID_CONFIG % f"unknown check {e.args[0]!r}")
        except (TypeError, ValueError) as e:
            raise ConfigError(Messages.INVALID_CONFIG % e)

        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> 'SuiteConfig':
        from ..storage.files import read_json

        path = Path(path)
        try:
            data = read_json(path)
        except FileNotFoundError:
            raise ConfigError(Messages.MISSING_INPUT % path)
        except ValueError as e:
            raise ConfigError(Messages.INVALID_CONFIG % f"{path}: {e}")
        return cls.from_dict(data, base_dir=path.parent)
