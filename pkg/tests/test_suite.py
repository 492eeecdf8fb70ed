import math

import pytest

from qhkit.config import SuiteChecks, SuiteConfig
from qhkit.enums import CheckStatus
from qhkit.errors import ConfigError
from qhkit.reports import strip_runtime
from qhkit.storage.files import write_json
from qhkit.suite import ANCHORS, CHECKS, run_suite
from qhkit.transforms import ROUNDTRIP_FACTOR

from .conftest import FAST_SAMPLING


def small_config(**overrides) -> SuiteConfig:
    """Coarse levels everywhere so that the selected checks finish quickly."""
    base = dict(
        random_spaces=2,
        random_max_points=20,
        disk_h=0.2,
        disk_h_transform=0.2,
        arc_n=100,
        arc_us=(0.4,),
        snowflake_levels=(0.2, 0.1),
        transform_max_points=30,
        threads=1,
    )
    return SuiteConfig(**(base | overrides))


def test_every_check_is_registered():
    assert set(CHECKS) == set(SuiteChecks)
    assert set(ANCHORS) == set(SuiteChecks)


def test_cigar_constant_check():
    report = run_suite(small_config(checks=SuiteChecks.CigarConstant))
    assert report.passed
    record = report.record(SuiteChecks.CigarConstant)
    assert record.status == CheckStatus.PASS
    assert [row["c0"] for row in record.values["rows"]] == [1.0, 2.0, 4.0]


def test_reports_are_deterministic():
    config = small_config(checks=SuiteChecks.CigarConstant)
    first = run_suite(config).to_dict(runtime=False)
    second = run_suite(config).to_dict(runtime=False)
    assert first == second
    assert "total_runtime" not in first
    assert all("runtime" not in check for check in first["checks"])


def test_strip_runtime():
    data = {"runtime": 1.0, "checks": [{"runtime": 2.0, "status": "pass"}], "total_runtime": 3.0}
    assert strip_runtime(data) == {"checks": [{"status": "pass"}]}


def test_sandwich_check_passes_on_generated_spaces():
    report = run_suite(small_config(checks=SuiteChecks.Sandwich))
    record = report.record(SuiteChecks.Sandwich)
    assert record.status == CheckStatus.PASS
    assert record.values["low"] >= 0.25 - 1e-12
    assert record.values["high"] <= 1 + 1e-12
    assert record.values["euclidean_identity_gap"] <= 1e-12


def test_invalid_extra_space_fails_the_sandwich(tmp_path):
    path = tmp_path / "broken.json"
    write_json(path, [[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    report = run_suite(small_config(checks=SuiteChecks.Sandwich, extra_spaces=(str(path),)))
    assert not report.passed
    record = report.record(SuiteChecks.Sandwich)
    assert record.status == CheckStatus.FAIL
    assert record.witness["axiom"] == "triangle"
    assert report.to_dict()["overall"] == "fail"


def test_missing_inputs_stop_the_suite(tmp_path):
    config = small_config(checks=SuiteChecks.CigarConstant, domain_files=("missing.json",), base_dir=tmp_path)
    with pytest.raises(ConfigError):
        run_suite(config)


def test_records_follow_declared_order():
    checks = SuiteChecks.CigarConstant | SuiteChecks.Sandwich
    report = run_suite(small_config(checks=checks, threads=2))
    assert [record.check for record in report.records] == [SuiteChecks.Sandwich, SuiteChecks.CigarConstant]


def run_one(check: SuiteChecks, config: SuiteConfig):
    report = run_suite(config)
    assert report.passed
    return report.record(check)


def test_lower_bound_check_meshes_every_generated_domain():
    config = small_config(
        checks=SuiteChecks.QhLowerBound,
        disk_h=0.1,
        disk_h_transform=0.1,
        arc_n=2000,
        snowflake_levels=(0.1, 0.05),
        sampling=FAST_SAMPLING,
    )
    record = run_one(SuiteChecks.QhLowerBound, config)
    assert record.status == CheckStatus.PASS
    domains = record.values["domains"]
    assert [d["domain"].split("(")[0] for d in domains] == ["disk", "halfline", "grid_rect", "slit_disk", "arc", "snowflake_disk"]
    assert 1.0 <= record.values["halfline_ratio"] <= 1.05


def test_cross_ratio_check():
    config = small_config(checks=SuiteChecks.CrossRatio16t, quadruple_exhaustive_points=10, quadruple_samples=2000)
    record = run_one(SuiteChecks.CrossRatio16t, config)
    assert record.status == CheckStatus.PASS
    assert record.values["samples"] > 0
    assert 1 / 16 <= record.values["low"] <= record.values["high"] <= 16
    assert record.values["cancellation_gap"] <= 1e-12


def test_roundtrip_check():
    record = run_one(SuiteChecks.RoundTrip, small_config(checks=SuiteChecks.RoundTrip))
    assert record.status == CheckStatus.PASS
    assert record.values["bound"] == ROUNDTRIP_FACTOR
    assert all(space["worst_ratio"] <= ROUNDTRIP_FACTOR for space in record.values["spaces"])


def test_quasiconvex_transfer_check():
    config = SuiteConfig(checks=SuiteChecks.QuasiconvexTransfer, disk_h_transform=0.1, threads=1)
    record = run_one(SuiteChecks.QuasiconvexTransfer, config)
    assert record.status == CheckStatus.PASS
    assert record.values["c"] >= 1.0
    assert record.values["proven_at"] >= record.values["lambda_prime"]


def test_additive_constants_check():
    config = small_config(checks=SuiteChecks.AdditiveConstants, disk_h=0.1, sampling=FAST_SAMPLING)
    record = run_one(SuiteChecks.AdditiveConstants, config)
    assert record.status == CheckStatus.PASS
    assert record.values["c_grid"] >= 2 * record.values["c_est"]
    assert record.values["c_prime"] <= record.values["bound"]


def test_arc_example_check():
    config = SuiteConfig(checks=SuiteChecks.ArcExample, arc_us=(0.4, 0.2), threads=1)
    record = run_one(SuiteChecks.ArcExample, config)
    assert record.status == CheckStatus.PASS
    rows = record.values["rows"]
    assert all(row["isometry_gap"] <= 1e-9 for row in rows)
    assert all(row["c_uniform_inverted"] <= 3.0 for row in rows)
    (growth,) = record.values["growth"]
    assert 1.6 <= growth["ratio"] <= 2.4
    assert record.values["quasiconvex"]["c"] <= math.pi + 0.05


def test_snowflake_divergence_check():
    config = small_config(checks=SuiteChecks.SnowflakeDivergence, snowflake_levels=(0.1, 0.05))
    record = run_one(SuiteChecks.SnowflakeDivergence, config)
    assert record.status == CheckStatus.DIVERGES
    assert all(g >= 1.3 for g in record.values["growth"])


def test_uniformity_stability_check():
    record = run_one(SuiteChecks.UniformityStability, SuiteConfig(checks=SuiteChecks.UniformityStability, threads=1))
    assert record.status == CheckStatus.PASS
    for family in ("sphericalized disk", "inverted arc"):
        assert all(g < 1.3 for g in record.values[family]["growth"])
