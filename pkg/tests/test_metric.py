import numpy as np
import pytest
from numpy.testing import assert_allclose

from qhkit.enums import AmbientKind
from qhkit.errors import DomainError
from qhkit.spaces import DomainSpace, FiniteMetricSpace, boundary_distance, validate_metric


def test_euclidean_distances(line_points):
    space = FiniteMetricSpace.euclidean(line_points)
    assert space.size == 3
    assert space.distance(1, 2) == 3.0
    assert_allclose(space.distance_matrix, [[0, 1, 4], [1, 0, 3], [4, 3, 0]])


def test_snowflake_is_power_of_euclidean():
    coords = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 9.0]])
    plain = FiniteMetricSpace.euclidean(coords)
    snow = FiniteMetricSpace.snowflake(coords, 0.5)
    assert_allclose(snow.distance_matrix, plain.distance_matrix ** 0.5)


def test_snowflake_requires_epsilon_below_one():
    with pytest.raises(DomainError):
        FiniteMetricSpace.snowflake([[0.0], [1.0]], 1.0)


def test_curve_ambient_uses_arclength():
    space = FiniteMetricSpace(AmbientKind.CURVE, arclength=np.array([0.0, 0.5, 2.0]))
    assert space.distance(0, 2) == 2.0
    assert space.distance(2, 1) == 1.5


def test_matrix_must_be_square():
    with pytest.raises(DomainError):
        FiniteMetricSpace.from_matrix(np.zeros((2, 3)))


def test_unknown_ids_are_rejected(line_points):
    space = FiniteMetricSpace.euclidean(line_points)
    with pytest.raises(DomainError):
        space.distance(0, 3)


def test_validate_accepts_euclidean(line_points):
    result = validate_metric(FiniteMetricSpace.euclidean(line_points))
    assert result.ok
    assert result.total_violations == 0


def test_validate_reports_triangle_violation():
    matrix = np.array([
        [0.0, 1.0, 5.0],
        [1.0, 0.0, 1.0],
        [5.0, 1.0, 0.0],
    ])
    result = validate_metric(FiniteMetricSpace.from_matrix(matrix))
    assert not result.ok
    violation = result.violations[0]
    assert violation.axiom == "triangle"
    assert sorted(violation.ids[:2]) == [0, 2]
    assert violation.slack == pytest.approx(3.0)


def test_validate_reports_asymmetry_and_zero_distance():
    matrix = np.array([
        [0.0, 1.0, 0.0],
        [2.0, 0.0, 1.0],
        [0.0, 1.0, 0.0],
    ])
    result = validate_metric(FiniteMetricSpace.from_matrix(matrix))
    axioms = {v.axiom for v in result.violations}
    assert {"symmetry", "positivity"} <= axioms


def test_space_dict_round_trip():
    space = FiniteMetricSpace.snowflake([[0.0, 0.0], [1.0, 2.0]], 0.25, name="tiny")
    again = FiniteMetricSpace.from_dict(space.to_dict())
    assert again.kind == AmbientKind.SNOWFLAKE
    assert again.epsilon == 0.25
    assert again.name == "tiny"
    assert_allclose(again.distance_matrix, space.distance_matrix)


def test_from_dict_requires_ambient_kind():
    with pytest.raises(DomainError):
        FiniteMetricSpace.from_dict({"points": [[0.0]]})


def test_domain_boundary_distances(line_points):
    dom = DomainSpace(FiniteMetricSpace.euclidean(line_points), interior=[1, 2], boundary=[0])
    assert_allclose(dom.boundary_distances, [1.0, 4.0])
    assert boundary_distance(dom, 2) == 4.0


def test_domain_rejects_empty_boundary(line_points):
    with pytest.raises(DomainError):
        DomainSpace(FiniteMetricSpace.euclidean(line_points), interior=[0, 1, 2], boundary=[])


def test_domain_rejects_point_in_both_sets(line_points):
    with pytest.raises(DomainError):
        DomainSpace(FiniteMetricSpace.euclidean(line_points), interior=[0, 1], boundary=[1, 2])


def test_domain_position_of_boundary_point_fails(line_points):
    dom = DomainSpace(FiniteMetricSpace.euclidean(line_points), interior=[1, 2], boundary=[0])
    with pytest.raises(DomainError):
        dom.position(0)


def test_domain_dict_round_trip(disk):
    again = DomainSpace.from_dict(disk.to_dict())
    assert again.kind == disk.kind
    assert np.array_equal(again.interior, disk.interior)
    assert np.array_equal(again.boundary, disk.boundary)
    assert again.mesh_config == disk.mesh_config
    assert_allclose(again.boundary_distances, disk.boundary_distances)


def test_nearest_interior(disk):
    center = disk.nearest_interior([0.01, -0.02])
    assert_allclose(disk.ambient.coords[center], [0.0, 0.0], atol=1e-12)
