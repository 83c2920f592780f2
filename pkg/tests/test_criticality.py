import math

import numpy as np
import pytest

from interface_lab.contour import chain_from_unrolled
from interface_lab.criticality import (
    audit_conventions,
    curvature_profile,
    first_variation_residual,
    second_variation_disk,
)
from interface_lab.errors import EmptyAuditError, InvalidArgumentError, UnsupportedConfigurationError
from interface_lab.measures import DensitySpec
from interface_lab.patterns import Disk
from interface_lab.sharp import (
    best_lamellar,
    build_band_aid,
    build_concave_convex_strip,
    disk_radius,
    strip_feasibility,
)

R_PEN = 0.45


def circle_chain(R, n, center=(0.1, -0.2), clockwise=False):
    t = 2 * np.pi * np.arange(n) / n
    if clockwise:
        t = -t
    return chain_from_unrolled(np.c_[center[0] + R * np.cos(t), center[1] + R * np.sin(t)])


def ellipse_error(n, a=0.3, b=0.2, window=8):
    t = 2 * np.pi * np.arange(n) / n
    chain = chain_from_unrolled(np.c_[a * np.cos(t), b * np.sin(t)])
    exact = a * b / (a * a * np.sin(t) ** 2 + b * b * np.cos(t) ** 2) ** 1.5
    return np.max(np.abs(curvature_profile(chain, window).curvature - exact))


def test_circle_curvature():
    cp = curvature_profile(circle_chain(0.25, 1024))
    assert np.allclose(cp.curvature, 4.0, rtol=1e-2)


def test_orientation_flips_sign():
    cp = curvature_profile(circle_chain(0.25, 512, clockwise=True))
    assert np.allclose(cp.curvature, -4.0, rtol=1e-2)


def test_straight_line_is_flat():
    x = np.linspace(-0.5, 0.5, 400, endpoint=False)
    chain = chain_from_unrolled(np.c_[x, 0.1 + 0 * x])
    assert chain.wrap_class == (1, 0)
    assert np.max(np.abs(curvature_profile(chain).curvature)) < 1e-6


def test_wrapping_circle_across_seam():
    cp = curvature_profile(circle_chain(0.2, 800, center=(0.45, 0.45)))
    assert np.allclose(cp.curvature, 5.0, rtol=1e-2)


def test_estimator_is_second_order():
    # a fixed vertex window spans half the arc when n doubles
    errs = [ellipse_error(n) for n in (256, 512, 1024, 2048)]
    ratios = [e0 / e1 for e0, e1 in zip(errs, errs[1:])]
    for q in ratios:
        assert 4 * 0.8 <= q <= 4 * 1.2


def test_subsampling_invariance():
    t = 2 * np.pi * np.arange(2048) / 2048
    chain = chain_from_unrolled(np.c_[0.3 * np.cos(t), 0.2 * np.sin(t)])
    rho = DensitySpec.uniform()
    full = first_variation_residual(curvature_profile(chain, 8), rho, 0.0)
    half = first_variation_residual(curvature_profile(chain.subsample(2), 4), rho, 0.0)
    assert abs(half.rms_residual / full.rms_residual - 1) < 0.10


def test_short_chain_rejected():
    with pytest.raises(InvalidArgumentError):
        curvature_profile(circle_chain(0.2, 10), window=8)


def test_analytic_disk_audit():
    rho = DensitySpec.uniform_disk((0, 0), R_PEN)
    R = disk_radius(0.0)
    cp = [curvature_profile(c) for c in Disk((0, 0), R).boundary_chains(2e-3)]
    rep = first_variation_residual(cp, rho, 1.0)
    assert rep.rms_residual < 0.05 / R
    assert rep.passed
    assert rep.lambda_hat == pytest.approx(1 / R - 4 / (math.pi * R_PEN**2), abs=1e-6)
    assert rep.n_masked == 0


def test_lamellar_through_disk_fails():
    rho = DensitySpec.uniform_disk((0, 0), R_PEN)
    cp = [curvature_profile(c) for c in best_lamellar(0.0, R_PEN).boundary_chains(2e-3)]
    rep = first_variation_residual(cp, rho, 1.0)
    assert not rep.passed
    assert rep.sup_residual > 2 / (math.pi * R_PEN**2)
    assert set(rep.lambda_by_region) == {"inside", "outside"}
    assert rep.n_masked > 0


@pytest.mark.parametrize("sigma", [1.5, 2.0, 3.0])
def test_critical_band_aid_matches_half_multiplier(sigma):
    rho = DensitySpec.uniform_disk((0, 0), R_PEN)
    b = build_band_aid(0.0, R_PEN, sigma, mode="critical", convention="curv2d")
    cp = [curvature_profile(c) for c in b.boundary_chains(2e-3)]
    out = audit_conventions(cp, rho, sigma)
    assert out["matching_convention"] == "curv2d"
    assert abs(out["reports"]["curv2d"]["lambda_hat"]) < 1e-3
    assert not out["reports"]["firstvar"]["pass"]
    assert "2 sigma/(pi r^2)" in out["factor_discrepancy"]


def test_strip_midpoint_has_constant_multiplier():
    rho = DensitySpec.uniform_disk((0, 0), R_PEN)
    R1, R2 = strip_feasibility(2.0, R_PEN).midpoint()
    s = build_concave_convex_strip(R1, R2, R_PEN, 0.0)
    cp = [curvature_profile(c) for c in s.boundary_chains(2e-3)]
    out = audit_conventions(cp, rho, 2.0)
    assert out["matching_convention"] == "curv2d"
    # outer arcs carry curvature -1/R1 where rho vanishes
    assert out["reports"]["curv2d"]["lambda_hat"] == pytest.approx(-1 / R1, abs=1e-3)


def test_region_multipliers_agree_for_critical_shape():
    rho = DensitySpec.uniform_disk((0, 0), R_PEN)
    b = build_band_aid(0.0, R_PEN, 2.0, mode="critical", convention="curv2d")
    cp = [curvature_profile(c) for c in b.boundary_chains(2e-3)]
    regions = first_variation_residual(cp, rho, 2.0, convention="curv2d").lambda_by_region
    assert regions["inside"] == pytest.approx(regions["outside"], abs=1e-3)


def test_everything_excluded():
    rho = DensitySpec.uniform_disk((0, 0), 0.2)
    cp = curvature_profile(circle_chain(0.2, 400, center=(0, 0)))
    with pytest.raises(EmptyAuditError):
        first_variation_residual(cp, rho, 1.0, exclusion_radius=0.01)


def test_second_variation_ladder():
    rho = DensitySpec.uniform_disk((0, 0), R_PEN)
    R = disk_radius(0.0)
    assert abs(second_variation_disk(R, 1.0, rho, 1)) < 1e-12
    for k in range(2, 9):
        val = second_variation_disk(R, 1.0, rho, k)
        assert val == pytest.approx(math.pi * (k * k - 1) / R, abs=1e-10)
        assert val >= 0


def test_second_variation_unsupported():
    rho = DensitySpec.uniform_disk((0, 0), R_PEN)
    with pytest.raises(UnsupportedConfigurationError):
        second_variation_disk(0.3, 1.0, rho, 2, center=(0.2, 0.0))
    with pytest.raises(InvalidArgumentError):
        second_variation_disk(0.3, 1.0, rho, 0)
