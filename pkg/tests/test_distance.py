import numpy as np
import pytest

from interface_lab.distance import fast_sweep, grid_signed_distance, polyline_distance
from interface_lab.patterns import Disk, Lamellar
from interface_lab.torus import GridSpec


def test_disk_distance_close_to_exact():
    g = GridSpec(128)
    disk = Disk((0.1, -0.2), 0.25)
    sd = grid_signed_distance(disk.rasterize(g))
    exact = disk.signed_distance(g.points())
    h = g.spacing
    assert np.max(np.abs(sd.values - exact)) < 1.5 * h
    band = np.abs(exact) < 2 * h
    assert np.max(np.abs(sd.values - exact)[band]) < 0.2 * h


def test_lamellar_distance_is_periodic_tent():
    g = GridSpec(64)
    lam = Lamellar(0.0, 0.25, 1)
    sd = grid_signed_distance(lam.rasterize(g))
    assert np.max(np.abs(sd.values - lam.signed_distance(g.points()))) < 1e-10


def test_polyline_distance_to_square_loop():
    g = GridSpec(32)
    from interface_lab.contour import chain_from_unrolled

    sq = chain_from_unrolled(np.array([[-0.1, -0.1], [0.1, -0.1], [0.1, 0.1], [-0.1, 0.1]]))
    d = polyline_distance(np.array([[0.0, 0.0], [0.3, 0.0], [0.2, 0.2]]), [sq])
    assert np.allclose(d, [0.1, 0.2, np.sqrt(0.02)])
    del g


def test_fast_sweep_from_a_single_source_is_bounded_by_euclidean():
    n = 32
    h = 1.0 / n
    init = np.full((n, n), np.inf)
    init[0, 0] = 0.0
    d = fast_sweep(init, h)
    i = np.minimum(np.arange(n), n - np.arange(n)) * h
    exact = np.hypot(i[:, None], i[None, :])
    assert np.all(d >= exact - 1e-12)
    assert np.max(d - exact) < 0.1
    assert d[0, 5] == pytest.approx(5 * h)
