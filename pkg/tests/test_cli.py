import json
import math

import numpy as np
import pytest

from qhkit.cli import EXIT_CHECK_FAILED, EXIT_COMPUTATION, EXIT_OK, EXIT_USAGE, dispatch
from qhkit.spaces import DomainSpace, FiniteMetricSpace
from qhkit.storage.files import read_json, save_domain, write_json


def run(capsys, *argv) -> tuple[int, dict | None]:
    code = dispatch(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


@pytest.fixture
def halfline_file(tmp_path, halfline):
    path = tmp_path / "halfline.json"
    save_domain(path, halfline)
    return str(path)


@pytest.fixture
def two_islands(tmp_path):
    """Two clusters of interior points on a line, separated by a boundary point."""
    coords = np.concatenate([np.linspace(1.0, 1.5, 6), np.linspace(5.0, 5.5, 6), [0.0, 3.0, 8.0]])
    dom = DomainSpace(
        ambient=FiniteMetricSpace.euclidean(coords.reshape(-1, 1)),
        interior=np.arange(12),
        boundary=np.arange(12, 15),
        name="islands",
    )
    path = tmp_path / "islands.json"
    save_domain(path, dom)
    return str(path)


def test_gen_and_validate(tmp_path, capsys):
    out = tmp_path / "disk.json"
    assert dispatch(["gen", "disk", "--h", "0.1", "-o", str(out)]) == EXIT_OK
    assert read_json(out)["kind"] == "disk"

    code, data = run(capsys, "validate", "-i", str(out))
    assert code == EXIT_OK
    assert data["metric"]["ok"]
    assert 240 <= data["domain"]["interior"] <= 260
    assert data["domain"]["mesh"]["clearance_ok"]


def test_validate_reports_a_broken_matrix(tmp_path, capsys):
    path = tmp_path / "broken.json"
    write_json(path, [[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    code, data = run(capsys, "validate", "-i", str(path))
    assert code == EXIT_CHECK_FAILED
    assert data["metric"]["violations"][0]["axiom"] == "triangle"


def test_qh_on_the_halfline(halfline_file, capsys):
    code, data = run(capsys, "qh", "-i", halfline_file, "--x", "1", "--y", "2")
    assert code == EXIT_OK
    assert data["j"] == pytest.approx(math.log(2))
    assert data["r"] == pytest.approx(1.0)
    assert data["k"] == pytest.approx(math.log(2), rel=0.03)

    code, trapezoid = run(capsys, "qh", "-i", halfline_file, "--x", "1", "--y", "2", "--mode", "trapezoid")
    assert trapezoid["k"] <= data["k"]


def test_transform_and_cross_ratio(tmp_path, capsys):
    line = tmp_path / "dyadic.json"
    assert dispatch(["gen", "dyadic_line", "-o", str(line)]) == EXIT_OK

    code, data = run(capsys, "transform", "-i", str(line), "--kind", "invert", "--p", "0")
    assert code == EXIT_OK
    assert data["labels"][-1] == -1
    assert 0 not in data["labels"]
    assert data["sandwich"]["violations"] == 0

    code, data = run(capsys, "cr", "-i", str(line), "--quad", "1", "2", "3", "4", "--transform", "sphericalize")
    assert code == EXIT_OK
    assert data["transform"] == "sphericalize"
    assert 1 / 16 <= data["cr_out"] / data["cr"] <= 16


def test_scan_writes_plot_data(tmp_path, capsys):
    space = tmp_path / "cloud.json"
    write_json(space, FiniteMetricSpace.euclidean(np.random.default_rng(3).uniform(size=(9, 2))).to_dict())
    csv = tmp_path / "scan.csv"
    code, data = run(capsys, "scan", "-i", str(space), "--transform", "invert", "--csv", str(csv))
    assert code == EXIT_OK
    assert data["exhaustive"]
    assert csv.read_text().splitlines()[0] == "t_in,t_out"
    assert data["ratio"]["low"] >= 1 / 16 and data["ratio"]["high"] <= 16


def test_constants(tmp_path, disk, capsys):
    path = tmp_path / "disk.json"
    save_domain(path, disk)
    code, data = run(capsys, "constants", "-i", str(path), "--pairs", "200", "--csv", str(tmp_path / "qc.csv"))
    assert code == EXIT_OK
    assert data["c_uniform"] >= 1.0
    assert (tmp_path / "qc.csv").read_text().startswith("lambda,c,pairs")


def test_suite_with_selected_checks(tmp_path, capsys):
    config = tmp_path / "suite.json"
    write_json(config, {"checks": ["Sandwich"], "threads": 1})
    out = tmp_path / "report.json"
    code = dispatch(["suite", "-c", str(config), "--checks", "cigar_constant", "-o", str(out), "--seed", "3"])
    assert code == EXIT_OK
    report = read_json(out)
    assert report["overall"] == "pass"
    assert [check["check"] for check in report["checks"]] == ["CigarConstant"]
    assert report["config"]["seed"] == 3


def test_usage_errors(tmp_path):
    assert dispatch(["gen", "nosuchdomain"]) == EXIT_USAGE
    assert dispatch(["qh", "-i", str(tmp_path / "missing.json"), "--x", "1", "--y", "2"]) == EXIT_USAGE
    assert dispatch(["suite", "-c", str(tmp_path / "missing.json")]) == EXIT_USAGE
    assert dispatch(["--threads", "0", "gen", "dyadic_line", "-o", str(tmp_path / "d.json")]) == EXIT_USAGE


def test_malformed_point_values(halfline_file):
    assert dispatch(["qh", "-i", halfline_file, "--x", "abc", "--y", "2"]) == EXIT_USAGE
    assert dispatch(["qh", "-i", halfline_file, "--x", "1.5", "--y", "2", "--ids"]) == EXIT_USAGE


def test_unknown_suite_check(tmp_path):
    config = tmp_path / "suite.json"
    write_json(config, {"threads": 1})
    assert dispatch(["suite", "-c", str(config), "--checks", "Bogus"]) == EXIT_USAGE


def test_threads_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("QHKIT_THREADS", "many")
    assert dispatch(["gen", "dyadic_line", "-o", str(tmp_path / "d.json")]) == EXIT_USAGE


def test_disconnected_mesh_exits_with_computation_error(two_islands):
    assert dispatch(["mesh", "-i", two_islands]) == EXIT_COMPUTATION


def test_help_exits_cleanly(capsys):
    assert dispatch(["--help"]) == EXIT_OK
    assert "suite" in capsys.readouterr().out
