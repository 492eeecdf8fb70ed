import dataclasses
from typing import Any

from .config import SuiteChecks
from .enums import CheckStatus
from .utils import to_jsonable

RUNTIME_FIELDS = ("runtime", "total_runtime")


@dataclasses.dataclass(frozen=True)
class CheckRecord:
    """One suite check: the statement it verifies, its outcome and the data behind it."""

    check: SuiteChecks
    anchor: str
    status: CheckStatus
    values: dict[str, Any] = dataclasses.field(default_factory=dict)
    witness: dict[str, Any] | None = None
    runtime: float = 0.0

    @property
    def failed(self) -> bool:
        return self.status == CheckStatus.FAIL

    def to_dict(self) -> dict:
        return dict(
            check=self.check.name,
            anchor=self.anchor,
            status=str(self.status),
            values=to_jsonable(self.values),
            witness=to_jsonable(self.witness),
            runtime=self.runtime,
        )


@dataclasses.dataclass(frozen=True)
class SuiteReport:
    records: list[CheckRecord]
    config: dict[str, Any]
    total_runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return not any(record.failed for record in self.records)

    def record(self, check: SuiteChecks) -> CheckRecord:
        for record in self.records:
            if record.check == check:
                return record
        raise KeyError(check.name)

    def to_dict(self, runtime: bool = True) -> dict:
        data = dict(
            overall="pass" if self.passed else "fail",
            config=to_jsonable(self.config),
            checks=[record.to_dict() for record in self.records],
            total_runtime=self.total_runtime,
        )
        return data if runtime else strip_runtime(data)


def strip_runtime(data: Any) -> Any:
    """Drops timing fields so that two runs of the same configuration compare equal."""
    if isinstance(data, dict):
        return {k: strip_runtime(v) for k, v in data.items() if k not in RUNTIME_FIELDS}
    if isinstance(data, list):
        return [strip_runtime(v) for v in data]
    return data


@dataclasses.dataclass(frozen=True)
class ConstantsReport:
    """
    Measured constants of one domain together with the pairs, triples and curves
    that attain them and the mesh they were measured on.
    """

    domain: str
    mesh: dict[str, Any]
    c_uniform: float
    c_qh: float
    c_qh_upper: float
    quasiconvex: list[dict[str, Any]]
    annular: dict[str, Any]
    additive: dict[str, Any]
    witnesses: dict[str, Any]

    def to_dict(self) -> dict:
        return to_jsonable(dict(
            domain=self.domain,
            mesh=self.mesh,
            c_uniform=self.c_uniform,
            c_qh=self.c_qh,
            c_qh_upper=self.c_qh_upper,
            quasiconvex=self.quasiconvex,
            annular=self.annular,
            additive=self.additive,
            witnesses=self.witnesses,
        ))
