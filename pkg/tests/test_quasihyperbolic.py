import math

import numpy as np
import pytest

from qhkit.enums import CheckStatus, QhWeightMode
from qhkit.errors import DomainError
from qhkit.quasihyperbolic import (check_lower_bounds, check_small_scale, j_distance,
                                   pair_qh_distances, qh_distance, qh_geodesic,
                                   relative_distance)
from qhkit.sampling import sample_pairs

from .conftest import FAST_SAMPLING


def anchors(halfline):
    return halfline.nearest_interior([1.0]), halfline.nearest_interior([2.0])


def test_halfline_upper_k_matches_log2(halfline):
    one, two = anchors(halfline)
    k = qh_distance(halfline, one, two, QhWeightMode.UPPER)
    assert math.log(2) <= k <= 1.05 * math.log(2)


def test_halfline_trapezoid_k_is_close_to_log2(halfline):
    one, two = anchors(halfline)
    k = qh_distance(halfline, one, two, QhWeightMode.TRAPEZOID)
    assert k == pytest.approx(math.log(2), rel=1e-2)


def test_relative_and_j_distance(halfline):
    one, two = anchors(halfline)
    assert relative_distance(halfline, one, two) == pytest.approx(1.0)
    assert j_distance(halfline, one, two) == pytest.approx(math.log(2))


def test_qh_distance_zero_on_diagonal(disk):
    x = disk.nearest_interior([0.0, 0.0])
    assert qh_distance(disk, x, x) == 0.0


def test_qh_distance_rejects_boundary_points(disk):
    x = disk.nearest_interior([0.0, 0.0])
    with pytest.raises(DomainError):
        qh_distance(disk, x, int(disk.boundary[0]))


def test_geodesic_is_consistent_with_distance(disk):
    x = disk.nearest_interior([-0.6, 0.1])
    y = disk.nearest_interior([0.3, 0.5])
    path = qh_geodesic(disk, x, y)
    assert path.vertices[0] == x and path.vertices[-1] == y
    assert path.k_length == pytest.approx(qh_distance(disk, x, y), rel=1e-12)
    assert path.arc_length >= disk.ambient.distance(x, y)


def test_pair_distances_match_single_queries(disk):
    pairs = sample_pairs(disk, FAST_SAMPLING)[:25]
    batch = pair_qh_distances(disk, pairs, QhWeightMode.TRAPEZOID)
    single = [qh_distance(disk, int(x), int(y), QhWeightMode.TRAPEZOID) for x, y in pairs]
    np.testing.assert_allclose(batch, single, rtol=1e-12)


def test_upper_mode_dominates_trapezoid(disk):
    pairs = sample_pairs(disk, FAST_SAMPLING)
    upper = pair_qh_distances(disk, pairs, QhWeightMode.UPPER)
    trapezoid = pair_qh_distances(disk, pairs, QhWeightMode.TRAPEZOID)
    assert np.all(upper >= trapezoid)


def test_lower_bounds_hold_on_disk(disk):
    result = check_lower_bounds(disk, sample_pairs(disk, FAST_SAMPLING))
    assert result.passed
    assert result.pairs > 0
    assert result.worst_margin >= 0


def test_lower_bounds_hold_on_halfline(halfline):
    result = check_lower_bounds(halfline, sample_pairs(halfline, FAST_SAMPLING))
    assert result.passed


def test_lower_bounds_with_no_pairs(disk):
    result = check_lower_bounds(disk, np.zeros((0, 2), dtype=np.int64))
    assert result.passed
    assert result.worst_pair is None


def test_small_scale_bound(disk):
    x = disk.nearest_interior([0.0, 0.0])
    y = disk.nearest_interior([0.1, 0.0])
    result = check_small_scale(disk, x, y, lambda0=0.5, c0=1.1)
    assert result.status == CheckStatus.PASS
    assert result.k <= result.bound


def test_small_scale_out_of_scope(disk):
    x = disk.nearest_interior([0.0, 0.0])
    y = disk.nearest_interior([0.7, 0.0])
    result = check_small_scale(disk, x, y, lambda0=0.5, c0=1.1)
    assert result.status == CheckStatus.OUT_OF_SCOPE
    assert result.k is None


def test_halfline_geodesic_is_monotone(halfline):
    one, three = halfline.nearest_interior([1.0]), halfline.nearest_interior([3.0])
    path = qh_geodesic(halfline, one, three)
    positions = halfline.ambient.coords[path.vertices, 0]
    assert np.all(np.diff(positions) > 0)
    assert positions[0] == pytest.approx(1.0) and positions[-1] == pytest.approx(3.0)


@pytest.mark.parametrize("mode", [QhWeightMode.UPPER, QhWeightMode.TRAPEZOID])
def test_disk_geodesic_stays_near_the_centre(disk, mode):
    x, y = disk.nearest_interior([-0.5, 0.0]), disk.nearest_interior([0.5, 0.0])
    path = qh_geodesic(disk, x, y, mode)
    radii = np.linalg.norm(disk.ambient.coords[path.vertices], axis=1)
    assert np.all(radii <= 0.5 + 2 * 0.1)
    assert radii.min() <= 0.1 + 1e-9
