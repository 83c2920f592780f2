import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from interface_lab.errors import InvalidArgumentError, PackingError, ResolutionError
from interface_lab.measures import (
    BallSet,
    CubeUnionSet,
    DensitySpec,
    MollifierSpec,
    ParticleSet,
    ScheduleEntry,
    StripeSet,
    WholeTorus,
    allocate,
    bl_estimate,
    build_dyadic_partition,
    default_entry,
    default_mollifier,
    mollified_density,
    place_particles,
    rate_schedule,
    rect_disk_area,
    weak_star_gap,
)
from interface_lab.torus import GridSpec, field_integral


def chord_area(x0, x1, y0, y1, R):
    """Area of [x0,x1]x[y0,y1] inside the disk of radius R at the origin by 1-D quadrature."""
    def chord(x):
        if abs(x) >= R:
            return 0.0
        c = math.sqrt(R * R - x * x)
        return max(0.0, min(y1, c) - max(y0, -c))

    lo, hi = max(x0, -R), min(x1, R)
    if hi <= lo:
        return 0.0
    kinks = [s * math.sqrt(R * R - y * y) for y in (y0, y1) if abs(y) < R for s in (-1, 1)]
    val, _ = integrate.quad(chord, lo, hi, limit=200, epsabs=1e-14, epsrel=1e-12,
                            points=[p for p in kinks if lo < p < hi] or None)
    return val


side = st.floats(-0.6, 0.6, allow_nan=False)


@given(side, side, side, side, st.floats(0.05, 0.5))
@settings(max_examples=150, deadline=None)
def test_rect_disk_area_matches_chord_quadrature(a, b, c, d, R):
    x0, x1 = sorted((a, b))
    y0, y1 = sorted((c, d))
    assert rect_disk_area(x0, x1, y0, y1, R) == pytest.approx(chord_area(x0, x1, y0, y1, R),
                                                              abs=1e-10)


@pytest.mark.parametrize("center", [(0.0, 0.0), (0.41, -0.37)])
def test_uniform_disk_cube_masses_sum_to_one(center):
    rho = DensitySpec.uniform_disk(center, 0.45)
    for k in range(5):
        assert rho.cube_masses(k).sum() == pytest.approx(1.0, abs=1e-12)


def test_uniform_disk_cube_masses_match_quadrature():
    rho = DensitySpec.uniform_disk((0.0, 0.0), 0.45)
    k = 3
    n = 2**k
    got = rho.cube_masses(k)
    edges = -0.5 + np.arange(n + 1) / n
    for i in range(n):
        for j in range(n):
            area = chord_area(edges[i], edges[i + 1], edges[j], edges[j + 1], 0.45)
            assert got[i, j] == pytest.approx(area / (math.pi * 0.45**2), abs=1e-11)


def test_cell_average_field_has_unit_mass():
    rho = DensitySpec.uniform_disk((0.1, 0.2), 0.3)
    assert field_integral(rho.cell_average_field(GridSpec(64))) == pytest.approx(1.0, abs=1e-12)


def test_clamp_renormalizes_to_unit_mass():
    rho = DensitySpec.uniform_disk((0.0, 0.0), 0.45, clamp=(0.2, 1.2))
    assert rho.inside > rho.outside > 0
    assert rho.cube_masses(2).sum() == pytest.approx(1.0, abs=1e-12)


def test_mass_in_test_sets_against_fine_grid():
    rho = DensitySpec.uniform_disk((0.0, 0.0), 0.45)
    g = GridSpec(2048)
    w = rho.cell_average_field(g).values
    pts = g.points()
    for t in [BallSet((0.3, -0.2), 0.15), StripeSet(0.25, 0.1, 2), CubeUnionSet(2, (0, 5, 10))]:
        approx = float(np.sum(w * t.indicator(pts))) * g.cell_volume
        assert rho.mass_in(t) == pytest.approx(approx, abs=2e-3)
    assert rho.mass_in(WholeTorus()) == 1.0


def test_density_fourier_coefficient_against_quadrature():
    rho = DensitySpec.uniform_disk((0.1, 0.0), 0.3)
    k = np.array([2.0, 1.0])
    kn = math.hypot(*k)
    radial, _ = integrate.quad(lambda s: s * special.j0(2 * math.pi * kn * s), 0, 0.3)
    expect = rho.inside * 2 * math.pi * radial * np.exp(2j * math.pi * k @ np.array([0.1, 0.0]))
    assert rho.fourier(k) == pytest.approx(expect, abs=1e-12)


# -- mollifier ---------------------------------------------------------------


@pytest.mark.parametrize("r", [1.0, 0.3, 0.01, 1e-4])
def test_mollifier_analytic_mass(r):
    V = default_mollifier(r)
    assert V.analytic_mass() == pytest.approx(1.0, abs=1e-12)
    num, _ = integrate.quad(lambda s: 2 * math.pi * s * V(s), 0, r, epsabs=1e-14)
    assert num == pytest.approx(1.0, abs=1e-10)


def test_mollifier_derivative_matches_difference_quotient():
    V = MollifierSpec(0.7)
    s = np.linspace(0.01, 0.69, 20)
    fd = (V(s + 1e-6) - V(s - 1e-6)) / 2e-6
    assert np.allclose(V.derivative(s), fd, rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("kn", [0.0, 0.3, 1.0, 2.5, 7.0])
def test_mollifier_fourier_matches_hankel_quadrature(kn):
    V = MollifierSpec(0.2)
    val, _ = integrate.quad(lambda s: 2 * math.pi * s * V(s) * special.j0(2 * math.pi * kn * s),
                            0, 0.2, epsabs=1e-14)
    assert V.fourier(kn) == pytest.approx(val, abs=1e-10)


def test_mollifier_rejects_bad_radius():
    with pytest.raises(InvalidArgumentError):
        default_mollifier(0.7)
    with pytest.raises(InvalidArgumentError):
        MollifierSpec(0.2).rescaled(0.1)


def _single(center, radius):
    return ParticleSet(np.array([center]), radius, 0, np.array([1]), 0, 1, np.array([0]))


@pytest.mark.parametrize("cells", [4, 5, 8])
def test_grid_quadrature_of_one_particle(cells):
    g = GridSpec(256)
    r = cells * g.spacing
    f = mollified_density(_single((0.0123, -0.4987), r), default_mollifier(1.0), g)
    assert field_integral(f) == pytest.approx(1.0, abs=1e-4)


def test_mollified_density_rejects_coarse_grids():
    with pytest.raises(ResolutionError):
        mollified_density(_single((0.0, 0.0), 3 * GridSpec(256).spacing), default_mollifier(), GridSpec(256))


# -- partitions, schedules, placement ----------------------------------------


def test_dyadic_children_tile_parent():
    p = build_dyadic_partition(2)
    kids = p.children(5)
    assert len(kids) == 4
    child = build_dyadic_partition(3)
    corners = child.lower_corners()[kids]
    parent = p.lower_corners()[5]
    assert np.all(corners >= parent - 1e-15) and np.all(corners < parent + p.side)
    pts = corners + 0.5 * child.side
    assert np.all(p.cube_of(pts) == 5)


def test_default_entry_and_separations():
    e = default_entry(0.05)
    assert (e.level, e.count) == (4, 400)
    assert e.radius == pytest.approx(0.05 / 20)
    entries = rate_schedule([0.1, 0.05, 0.025])
    assert [x.count for x in entries] == [100, 400, 1600]
    with pytest.raises(InvalidArgumentError):
        rate_schedule([0.05, 0.1])


@pytest.mark.parametrize("rho", [DensitySpec.uniform(), DensitySpec.uniform_disk((0, 0), 0.45)],
                         ids=["uniform", "uniform_disk"])
def test_allocation_is_floor_of_cube_masses(rho):
    N = 1600
    counts = allocate(rho, 5, N)
    assert np.array_equal(counts, np.floor(N * rho.cube_masses(5).reshape(-1) + 1e-9).astype(int))


def test_placement_respects_cubes_and_spacing():
    rho = DensitySpec.uniform_disk((0.0, 0.0), 0.45)
    e = default_entry(0.05)
    ps = place_particles(rho, e, seed=3)
    assert ps.total == int(allocate(rho, e.level, e.count).sum())
    part = build_dyadic_partition(e.level)
    assert np.array_equal(part.cube_of(ps.centers), ps.cube_index)
    assert ps.min_pair_distance() > 2 * e.radius
    assert np.all(np.hypot(*ps.centers.T) < 0.45 + e.radius + part.side * math.sqrt(2))


def test_placement_is_seed_deterministic():
    rho = DensitySpec.uniform()
    e = default_entry(0.1)
    a, b = place_particles(rho, e, 7), place_particles(rho, e, 7)
    assert np.array_equal(a.centers, b.centers)
    assert not np.array_equal(a.centers, place_particles(rho, e, 8).centers)


def test_packing_error_names_the_cube():
    with pytest.raises(PackingError) as info:
        place_particles(DensitySpec.uniform(), ScheduleEntry(0.1, 1, 4000, 0.01), seed=0)
    assert info.value.cube_index == 0


def test_particle_json_round_trip(tmp_path):
    ps = place_particles(DensitySpec.uniform(), default_entry(0.1), seed=1)
    path = ps.to_json(tmp_path / "p.json")
    back = ParticleSet.from_dict(json.loads(path.read_text()))
    assert np.array_equal(back.centers, ps.centers) and back.radius == ps.radius


def test_weak_star_gaps_small_and_whole_torus_exact():
    rho = DensitySpec.uniform_disk((0.0, 0.0), 0.45)
    ps = place_particles(rho, default_entry(0.05), seed=0)
    rep = weak_star_gap(ps, default_mollifier(), rho)
    assert rep["sets"][0]["gap"] == 0.0
    assert max(abs(s["gap"]) for s in rep["sets"]) < 0.05
    assert rep["bl_estimate"] == bl_estimate(ps, default_mollifier(), rho)["bl_estimate"]
