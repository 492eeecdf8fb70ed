import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qhkit.enums import CheckStatus
from qhkit.errors import CorrespondenceError, DomainError
from qhkit.generators import map_domain, plane_inversion, similarity
from qhkit.moebius import (EtaEnvelope, check_correspondence, composition_dominated,
                           cross_ratio, fit_envelope, grid_fit, identity_correspondence,
                           inverse_envelope, j_affine_fit, qi_fit, qi_local_check, qi_scale,
                           qm_scan, qs_scan, r_distortion_check, transform_correspondence)
from qhkit.spaces import DomainSpace, FiniteMetricSpace
from qhkit.transforms import invert, sphericalize

from .conftest import FAST_SAMPLING


@pytest.fixture(scope="module")
def cloud():
    rng = np.random.default_rng(11)
    return rng.uniform(-1, 1, size=(14, 2))


def test_cross_ratio_on_the_line():
    space = FiniteMetricSpace.euclidean([[0.0], [1.0], [2.0], [3.0]])
    # d(0, 2) d(1, 3) / (d(0, 3) d(1, 2))
    assert cross_ratio(space, [0, 1, 2, 3]) == pytest.approx(4 / 3)


def test_cross_ratio_needs_distinct_points():
    space = FiniteMetricSpace.euclidean([[0.0], [1.0], [2.0], [3.0]])
    with pytest.raises(DomainError):
        cross_ratio(space, [0, 1, 1, 3])


def test_identity_scan_fits_identity_envelope(cloud):
    space = FiniteMetricSpace.euclidean(cloud)
    scan = qm_scan(space, space)
    assert scan.exhaustive
    assert scan.envelope.C == 1.0
    assert scan.envelope.alpha == 1.0
    assert scan.sound()


def test_snowflake_scan_recovers_exponent(cloud):
    plain = FiniteMetricSpace.euclidean(cloud)
    snow = FiniteMetricSpace.snowflake(cloud, 0.5)
    scan = qm_scan(plain, snow)
    assert scan.envelope.alpha == 0.5
    assert scan.envelope.C == pytest.approx(1.0, abs=1e-9)
    assert scan.table[1.0] > 1.0


def test_quasisymmetric_scan_of_similarity(cloud):
    scan = qs_scan(FiniteMetricSpace.euclidean(cloud), FiniteMetricSpace.euclidean(3 * cloud + 1))
    assert scan.envelope.alpha == 1.0
    assert scan.envelope.C == pytest.approx(1.0, abs=1e-9)


def test_transform_scan_stays_within_16(cloud):
    space = FiniteMetricSpace.euclidean(cloud)
    for ts in (sphericalize(space, 0), invert(space, 0)):
        scan = qm_scan(space, ts.as_space(), transform_correspondence(ts))
        assert scan.ratio_violations(16.0) == 0
    assert 0 not in scan.ids


def test_transform_correspondence_skips_base_point(cloud):
    ts = invert(FiniteMetricSpace.euclidean(cloud), 3)
    image = transform_correspondence(ts)
    assert image[3] == -1
    assert image[0] == 0 and image[4] == 3


def test_correspondence_must_be_injective():
    with pytest.raises(CorrespondenceError):
        check_correspondence(3, 3, [0, 1, 1])
    with pytest.raises(CorrespondenceError):
        check_correspondence(3, 3, [0, 1])
    with pytest.raises(CorrespondenceError):
        check_correspondence(3, 3, [0, 1, 3])
    assert check_correspondence(3, 4, [0, -1, 3]).tolist() == [0, -1, 3]


def test_envelope_inverse():
    eta = EtaEnvelope(2.0, 0.5)
    t = np.geomspace(1e-3, 1e3, 25)
    assert_allclose(eta.inverse(eta(t)), t)


def test_inverse_map_envelope_dominates():
    eta = EtaEnvelope(3.0, 0.5)
    t = np.geomspace(1e-3, 1e3, 50)
    assert np.all(inverse_envelope(eta)(t) <= eta.inverse_map()(t) * (1 + 1e-12))


def test_fit_envelope_breaks_ties_towards_larger_alpha():
    t = np.geomspace(0.1, 10, 9)
    envelope, table = fit_envelope(t, t)
    assert envelope.alpha == 1.0
    assert all(C == 1.0 for C in table.values())


def test_composition_dominated(cloud):
    space = FiniteMetricSpace.euclidean(cloud)
    scan = qm_scan(space, FiniteMetricSpace.snowflake(cloud, 0.5))
    assert composition_dominated(scan, EtaEnvelope(1.0, 1.0), EtaEnvelope(1.0, 0.5))


def test_grid_fit_prefers_smaller_value_on_ties():
    fit = grid_fit("c", "cprime", np.array([[0, 1], [0, 2]]), np.array([1.0, 2.0]), np.array([1.5, 2.0]))
    assert_allclose(fit.values, [1.0, 1.25, 1.5])
    assert_allclose(fit.offsets, [0.5, 0.25, 0.0])
    assert fit.best == (1.0, 0.5)
    assert fit.witness(1.0) == (0, 1)
    assert fit.at(1.5) == 0.0


def test_qi_fit_of_identity(disk):
    fit = qi_fit(disk, disk, identity_correspondence(disk.ambient.size), sampling=FAST_SAMPLING)
    assert fit.best == (1.0, 0.0)


def test_qi_fit_under_plane_inversion():
    coords = np.linspace(1.0, 2.0, 201).reshape(-1, 1)
    interval = DomainSpace(FiniteMetricSpace.euclidean(coords), interior=np.arange(1, 200), boundary=[0, 200], name="interval")
    image = map_domain(interval, plane_inversion)
    fit = qi_fit(interval, image, identity_correspondence(interval.ambient.size), sampling=FAST_SAMPLING)
    L, A = fit.best
    assert fit.pairs.shape[0] > 0
    assert math.isfinite(A)
    # moebius maps distort k by at most a factor 2
    assert L + A <= 3.0


def test_j_affine_fit_of_similarity(disk):
    image = map_domain(disk, similarity(2.0, (1.0, -3.0)))
    fit = j_affine_fit(disk, image, identity_correspondence(disk.ambient.size), sampling=FAST_SAMPLING)
    a, b = fit.best
    assert a == 1.0
    assert b < 1e-9


def test_r_distortion_of_identity(disk):
    check = r_distortion_check(disk, disk, identity_correspondence(disk.ambient.size), EtaEnvelope(1.0, 1.0), sampling=FAST_SAMPLING)
    assert check.status == CheckStatus.PASS
    assert check.violations == 0


def test_qi_scale():
    eta = EtaEnvelope(1.0, 1.0)
    assert qi_scale(eta, 0.5, 1.0) == pytest.approx(math.log1p(0.25))


def test_qi_local_check_of_identity(disk):
    check = qi_local_check(disk, disk, identity_correspondence(disk.ambient.size), EtaEnvelope(1.0, 1.0), 0.5, 1.0, sampling=FAST_SAMPLING)
    assert check.status in (CheckStatus.PASS, CheckStatus.VACUOUS)
    assert check.violations == 0
