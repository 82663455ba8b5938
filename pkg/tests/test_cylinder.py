import math

import numpy as np
import pytest

from chainlab.bounds import cylinder_conjectured_bound, cylinder_fk_check, cylinder_lemma_bound
from chainlab.cylinder import band, geodesic_disc, periodic_strip, star_region, wavy_band
from chainlab.errors import GeometryError
from chainlab.special import j0_zero

J2 = j0_zero() ** 2


def test_band_geometry():
    r = band(1.0, 0.5, 0.05)
    assert r.periodic and r.area == pytest.approx(0.5)
    assert r.height() == pytest.approx(0.5)
    # seam nodes sit at equal heights on x = P and x = 0
    assert np.all(r.ring[r.seam[:, 0], 0] == 1.0)
    assert np.all(r.ring[r.seam[:, 1], 0] == 0.0)


def test_band_eigenvalue():
    # sin(pi y / H) with H = A / P: lambda = pi^2 P^2 / A^2
    lam, _ = band(1.0, 0.5, 0.02).first_eigenvalue(0.02)
    assert lam == pytest.approx(math.pi**2 / 0.25, rel=2e-3)


def test_lemma_bound_band_example():
    lam = math.pi**2 / 0.25
    assert cylinder_lemma_bound(1.0, lam) == pytest.approx(math.sqrt(J2) / (2 * math.pi), rel=1e-12)
    assert cylinder_lemma_bound(1.0, lam) == pytest.approx(0.3827, abs=1e-4)
    assert cylinder_conjectured_bound(1.0, lam) == pytest.approx(math.pi * J2 / lam)


def test_band_fk_report():
    rep = cylinder_fk_check(band(1.0, 0.5, 0.02), 0.02)
    assert rep.satisfied
    assert rep.log["band_value"] == pytest.approx(0.5, rel=1e-3)


def test_disc_fk_report():
    r = geodesic_disc(1.0, 0.2, 0.01)
    rep = cylinder_fk_check(r, 0.01)
    assert rep.satisfied
    assert rep.log["disc_value"] == pytest.approx(math.pi * 0.04, rel=1e-2)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_star_regions_satisfy_lemma(seed):
    r = star_region(1.0, seed, 0.02)
    assert r.ring[:, 0].min() > 0 and r.ring[:, 0].max() < 1.0
    assert cylinder_fk_check(r, 0.02).satisfied


def test_wavy_band():
    r = wavy_band(1.0, 0.5, 0.1, 0.03)
    rep = cylinder_fk_check(r, 0.03)
    assert rep.satisfied
    assert r.area == pytest.approx(0.5, rel=1e-3)


def test_invalid_regions():
    with pytest.raises(GeometryError):
        geodesic_disc(1.0, 0.6, 0.05)
    with pytest.raises(GeometryError):
        periodic_strip(1.0, lambda x: np.zeros_like(x), lambda x: np.full_like(x, -1.0), 0.1)
    with pytest.raises(GeometryError):
        periodic_strip(1.0, lambda x: x * 0.1, lambda x: np.full_like(x, 1.0), 0.1)
