import math

import numpy as np
import pytest

from qhkit import uniformity
from qhkit.enums import CheckStatus, CurveKind
from qhkit.errors import DomainError
from qhkit.sampling import sample_pairs
from qhkit.spaces import FiniteMetricSpace
from qhkit.uniformity import (additive_bound, additive_fit, annular_convexity_check, cigar_constant,
                              cigar_objective, curve_score, estimate_constants, qh_from_additive,
                              qh_uniformity, quasiconvexity_estimate, refinement_trend,
                              uniformity_estimate)

from .conftest import FAST_SAMPLING


@pytest.fixture(scope="module")
def lattice():
    xs, ys = np.meshgrid(np.arange(21.0), np.arange(21.0), indexing="ij")
    return FiniteMetricSpace.euclidean(np.stack([xs.reshape(-1), ys.reshape(-1)], axis=1), name="lattice")


def lattice_id(i: int, j: int) -> int:
    return 21 * i + j


def test_curve_score_of_constant_curve(disk):
    x = int(disk.mesh.vertices[0])
    score = curve_score(disk, [x], x, x)
    assert score.score == 1.0


def test_curve_score_of_straight_segment(disk):
    x, y = disk.nearest_interior([-0.5, 0.0]), disk.nearest_interior([0.5, 0.0])
    middle = disk.nearest_interior([0.0, 0.0])
    score = curve_score(disk, [x, middle, y], x, y, CurveKind.LENGTH)
    assert score.turning == pytest.approx(1.0)
    # half the length over the clearance at the centre
    assert score.cigar == pytest.approx(0.5)


def test_curve_score_needs_matching_endpoints(disk):
    x, y = (int(v) for v in disk.mesh.vertices[:2])
    with pytest.raises(DomainError):
        curve_score(disk, [x, y], y, x)


def test_disk_uniformity(disk):
    estimate = uniformity_estimate(disk, sampling=FAST_SAMPLING)
    assert 1.0 <= estimate.c_est < 5.0
    assert estimate.witness is not None
    assert estimate.witness.score >= 1.0
    assert estimate.witness_pair is not None


def test_disk_qh_uniformity(disk):
    qh = qh_uniformity(disk, sampling=FAST_SAMPLING)
    assert qh.c_qh_upper >= 1.0
    assert qh.c_qh_upper >= qh.c_qh
    assert qh.c_qh < 5.0


def test_disk_quasiconvexity(disk):
    table = quasiconvexity_estimate(disk, (1 / 16, 1 / 8, 1 / 4, 1 / 2))
    assert table.row(1 / 16).vacuous
    assert math.isnan(table.c_at(1 / 16))
    values = [table.c_at(lam) for lam in (1 / 8, 1 / 4, 1 / 2)]
    assert values == sorted(values)
    assert 1.0 <= values[-1] <= 2.0


def test_sampled_quasiconvexity_matches_dense_with_every_centre(disk, monkeypatch):
    lambdas = (1 / 4, 1 / 2)
    dense = quasiconvexity_estimate(disk, lambdas)
    monkeypatch.setattr(uniformity, "QUASICONVEX_DENSE_LIMIT", 10)
    sampled = quasiconvexity_estimate(disk, lambdas, max_centers=disk.mesh.size)
    assert sampled.to_dict() == dense.to_dict()


def test_sampled_quasiconvexity_never_exceeds_dense(disk, monkeypatch):
    dense = quasiconvexity_estimate(disk, (1 / 2,))
    monkeypatch.setattr(uniformity, "QUASICONVEX_DENSE_LIMIT", 10)
    sampled = quasiconvexity_estimate(disk, (1 / 2,), max_centers=20, seed=3)
    row = sampled.row(1 / 2)
    assert 0 < row.pairs < dense.row(1 / 2).pairs
    assert 1.0 <= row.c <= dense.c_at(1 / 2)


def test_uniformity_witness_reproduces_the_estimate(disk):
    estimate = uniformity_estimate(disk, sampling=FAST_SAMPLING)
    assert estimate.witness.score == estimate.c_est


def test_annular_convexity_on_a_lattice(lattice):
    center = [lattice_id(10, 10)]
    assert annular_convexity_check(lattice, 4.0, [2.0], centers=center).status == CheckStatus.PASS

    failed = annular_convexity_check(lattice, 1.0, [2.0], centers=center)
    assert failed.status == CheckStatus.FAIL
    assert failed.witness["center"] == center[0]
    assert failed.witness["length"] > failed.witness["distance"]


def test_annular_convexity_without_annulus_is_vacuous(lattice):
    check = annular_convexity_check(lattice, 2.0, [100.0], centers=[lattice_id(10, 10)])
    assert check.status == CheckStatus.VACUOUS


def test_additive_fit(disk):
    pairs = sample_pairs(disk, FAST_SAMPLING)
    fit = additive_fit(disk, pairs)
    c, c_prime = fit.best
    assert c >= 1.0 and c_prime >= 0.0
    assert fit.at(c) == pytest.approx(c_prime)
    assert np.all(np.diff(fit.offsets) <= 1e-12)


def test_additive_formulas():
    assert additive_bound(0.5, 1.0, 1.0) == pytest.approx(1.0 + 2 * math.log(4.0))
    assert qh_from_additive(2.0, 1.0, 0.5, 1.0) == pytest.approx(2.0 + 1.0 / math.log(1.25))


@pytest.mark.parametrize("c0", [1.0, 2.0, 4.0])
def test_cigar_constant_matches_closed_form(c0):
    numeric, closed = cigar_constant(c0)
    assert numeric == pytest.approx(closed, rel=1e-9)
    assert closed == pytest.approx(2 * (math.exp(c0) - 1))


def test_cigar_objective_decreases():
    u = np.geomspace(2.0, 1e4, 50)
    assert np.all(np.diff(cigar_objective(u, 2.0)) < 0)


def test_refinement_trend():
    assert refinement_trend([1.0, 1.5, 2.25]).status == CheckStatus.DIVERGES
    assert refinement_trend([1.0, 1.1, 1.2]).status == CheckStatus.PASS
    assert refinement_trend([3.0]).status == CheckStatus.PASS


def test_estimate_constants(disk):
    report = estimate_constants(disk, sampling=FAST_SAMPLING)
    data = report.to_dict()
    assert data["domain"] == disk.name
    assert 1.0 <= data["c_uniform"] < 5.0
    assert data["c_qh_upper"] >= 1.0
    assert [row["lambda"] for row in data["quasiconvex"]] == [1 / 16, 1 / 8, 1 / 4, 1 / 2]
    assert data["additive"]["c"] >= 1.0
    assert data["annular"]["pass"]
