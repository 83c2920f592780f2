import math

import numpy as np
import pytest
from shapely.geometry import Point

from interface_lab.errors import InfeasibleGeometryError
from interface_lab.patterns import (
    BandAid,
    ConcaveConvexStrip,
    Disk,
    GridIndicator,
    Lamellar,
    pattern_from_dict,
    pattern_polygon,
    polygon_disk_overlap,
    solve_strip_junction,
)
from interface_lab.sharp import junction_tangent_mismatch, strip_feasibility
from interface_lab.torus import GridSpec

FINE = GridSpec(1024)


def _cell_count_area(p):
    return float(np.count_nonzero(p.contains(FINE.points()))) * FINE.cell_volume


def _strip():
    R1, R2 = strip_feasibility(2.0, 0.45).midpoint()
    return ConcaveConvexStrip(R1, R2, 0.45)


PATTERNS = [
    Lamellar(0.1, 0.22, 1),
    Lamellar(-0.2, 0.3, 2),
    Disk((0.3, -0.4), 0.25),
    BandAid(-0.1, 0.12, 0.35, 0.1, 2),
    BandAid(0.0, 0.2, 0.3, -0.2, 1),
]


@pytest.mark.parametrize("p", PATTERNS + [_strip()], ids=lambda p: p.kind)
def test_area_matches_cell_counting(p):
    assert p.area() == pytest.approx(_cell_count_area(p), abs=3e-3)


@pytest.mark.parametrize("p", PATTERNS + [_strip()], ids=lambda p: p.kind)
def test_perimeter_matches_sampled_boundary(p):
    sampled = sum(np.sum(c.segment_lengths()) for c in p.boundary_chains(1e-4))
    assert p.perimeter() == pytest.approx(sampled, rel=1e-6)


@pytest.mark.parametrize("p", PATTERNS[2:], ids=lambda p: p.kind)
def test_signed_distance_sign_and_eikonal(p, rng):
    pts = rng.uniform(-0.5, 0.5, size=(400, 2))
    d = p.signed_distance(pts)
    assert np.all((d < 0) == p.contains(pts))
    # 1-Lipschitz in the periodic metric
    q = pts + rng.normal(scale=1e-3, size=pts.shape)
    assert np.all(np.abs(p.signed_distance(q) - d) <= np.hypot(*(q - pts).T) + 1e-12)


def test_disk_signed_distance_closed_form():
    d = Disk((0.0, 0.0), 0.2).signed_distance(np.array([[0.3, 0.0], [0.0, 0.0], [0.5, 0.5]]))
    assert np.allclose(d, [0.1, -0.2, math.sqrt(0.5) - 0.2])


def test_band_aid_area_matches_polygon_route():
    b = BandAid(-0.1, 0.12, 0.35, 0.1, 2)
    assert pattern_polygon(b).area == pytest.approx(b.area(), rel=1e-6)


@pytest.mark.parametrize("p", [PATTERNS[0], PATTERNS[2], PATTERNS[3]], ids=lambda p: p.kind)
def test_disk_overlap_closed_form_against_polygon_clipping(p):
    for center, radius in [((0.0, 0.0), 0.45), ((0.2, 0.1), 0.3)]:
        assert p.overlap_with_disk(center, radius) == pytest.approx(
            polygon_disk_overlap(p, center, radius), abs=2e-6
        )


def test_polygon_route_agrees_with_shapely_disk():
    d = Disk((0.0, 0.0), 0.2)
    assert pattern_polygon(d).intersection(Point(0.1, 0).buffer(0.15, 256)).area == pytest.approx(
        d.overlap_with_disk((0.1, 0.0), 0.15), rel=1e-4
    )


def test_band_aid_rejects_overlapping_caps():
    with pytest.raises(InfeasibleGeometryError):
        BandAid(-0.2, 0.2, 0.15)


def test_strip_junction_is_tangent_continuous_on_the_disk_boundary():
    s = _strip()
    px, py = s.geometry.junction
    assert math.hypot(px, py) == pytest.approx(0.45, abs=1e-12)
    assert junction_tangent_mismatch(s) < 1e-9
    geo = solve_strip_junction(s.R1, s.R2, 0.45)
    assert geo.junction == s.geometry.junction


@pytest.mark.parametrize("shift", [-0.2, 0.1], ids=["pinch", "overlap"])
def test_strip_rejects_degenerate_shifts(shift):
    with pytest.raises(InfeasibleGeometryError):
        ConcaveConvexStrip(0.1 if shift < 0 else 0.5, 0.46 if shift < 0 else 0.2, 0.45, shift)


def test_strip_rejects_missing_tangency():
    with pytest.raises(InfeasibleGeometryError):
        ConcaveConvexStrip(0.05, 0.2, 0.45)


@pytest.mark.parametrize("p", PATTERNS + [_strip()], ids=lambda p: p.kind)
def test_dict_round_trip(p):
    q = pattern_from_dict(p.to_dict())
    assert q.area() == pytest.approx(p.area(), abs=1e-14)
    assert q.perimeter() == pytest.approx(p.perimeter(), abs=1e-14)


def test_grid_indicator_recovers_disk_geometry():
    g = GridSpec(256)
    disk = Disk((0.0, 0.0), 0.3)
    gi = GridIndicator(disk.rasterize(g))
    assert gi.perimeter() == pytest.approx(disk.perimeter(), rel=1e-3)
    assert gi.area() == pytest.approx(disk.area(), abs=2 * g.spacing * disk.perimeter())
