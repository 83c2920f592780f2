"""Sharp-interface energetics: Per(A) + 4 sigma * integral of rho over A^c.

Closed forms cover the lamellar/disk menu against a uniform disk density;
composite shapes fall back to polygon clipping, everything else to grid
quadrature.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq

from .contour import extract_interface, total_length
from .errors import InfeasibleGeometryError, InvalidArgumentError, NoInterfaceError
from .measures import DensitySpec
from .patterns import (
    Arc,
    BandAid,
    ConcaveConvexStrip,
    Disk,
    GridIndicator,
    Lamellar,
    Pattern,
    lamellar_disk_overlap,
)
from .torus import GridSpec, field_integral


@dataclass(frozen=True)
class SharpEnergyReport:
    perimeter: float
    penal: float
    total: float
    area: float
    overlap: float | None = None

    def to_dict(self):
        return asdict(self)


def disk_radius(m: float) -> float:
    """Radius of the disk of area (1 + m) / 2."""
    return math.sqrt((1.0 + m) / (2.0 * math.pi))


def pattern_area(p: Pattern) -> float:
    return p.area()


def pattern_perimeter(p: Pattern) -> float:
    return p.perimeter()


def _complement_mass(p: Pattern, rho: DensitySpec):
    """(integral of rho over A^c, overlap |A cap B| or None)."""
    if rho.kind == "uniform":
        return 1.0 - p.area(), None
    if rho.kind == "uniform_disk" and not isinstance(p, GridIndicator):
        disk = math.pi * rho.radius**2
        overlap = p.overlap_with_disk(rho.center, rho.radius)
        comp = rho.inside * (disk - overlap) + rho.outside * ((1.0 - p.area()) - (disk - overlap))
        return comp, overlap
    grid = p.field.spec if isinstance(p, GridIndicator) else GridSpec(1024)
    return _quadrature_complement(p, rho, grid), None


def _quadrature_complement(p: Pattern, rho: DensitySpec, grid: GridSpec) -> float:
    u = p.rasterize(grid).values
    w = rho.cell_average_field(grid).values
    return float(np.sum(0.5 * (1.0 - u) * w) * grid.cell_volume)


def sharp_energy(p: Pattern, rho: DensitySpec, sigma: float) -> SharpEnergyReport:
    if sigma < 0:
        raise InvalidArgumentError("sigma must be nonnegative")
    per = p.perimeter()
    comp, overlap = _complement_mass(p, rho)
    penal = 4.0 * sigma * comp
    return SharpEnergyReport(per, penal, per + penal, p.area(), overlap)


def grid_sharp_energy(p: Pattern, rho: DensitySpec, sigma: float, resolution: int = 512):
    """Same energy by rasterization: contour length plus cell quadrature."""
    grid = GridSpec(resolution)
    f = p.rasterize(grid)
    try:
        per = total_length(extract_interface(f))
    except NoInterfaceError:
        per = 0.0
    comp = _quadrature_complement(p, rho, grid)
    area = float(field_integral(f.with_values(0.5 * (1.0 + f.values))))
    return SharpEnergyReport(per, 4 * sigma * comp, per + 4 * sigma * comp, area)


# -- the lamellar / disk menu -------------------------------------------------


def _check_window(m, r, need_mass_window=True):
    if not -1.0 < m < 1.0:
        raise InvalidArgumentError(f"mass m = {m} must lie in (-1, 1)")
    if need_mass_window and not 0.0 <= m < 1.0 - 2.0 / math.pi:
        raise InvalidArgumentError(f"mass m = {m} must lie in [0, 1 - 2/pi)")
    R = disk_radius(m)
    if not R < r < 0.5:
        raise InvalidArgumentError(
            f"penalization radius r = {r} must satisfy sqrt((1+m)/(2 pi)) = {R:.5f} < r < 1/2"
        )
    return R


def best_lamellar(m: float, r: float, center=(0.0, 0.0), axis: int = 1) -> Lamellar:
    """Stripe of area (1 + m)/2 centred on the penalization disk."""
    return Lamellar(center=float(center[axis - 1]), half_width=(1.0 + m) / 4.0, axis=axis)


def interior_disk(m: float, center=(0.0, 0.0)) -> Disk:
    return Disk(center=tuple(center), radius=disk_radius(m))


def menu_lines(m, r):
    """(intercept, slope) of the affine-in-sigma energies of the two menu families."""
    R = _check_window(m, r)
    disk_area = math.pi * r * r
    overlap = lamellar_disk_overlap(0.0, (1.0 + m) / 4.0, r)
    lam = (2.0, 4.0 * (1.0 - overlap / disk_area))
    dsk = (2.0 * math.pi * R, 4.0 * (1.0 - R * R / (r * r)))
    return {"lamellar": lam, "disk": dsk, "lamellar_overlap": overlap}


def sigma_crossover(m: float, r: float) -> float:
    """Crossing of the lamellar and interior-disk energies, both affine in sigma."""
    lines = menu_lines(m, r)
    (a_l, s_l), (a_d, s_d) = lines["lamellar"], lines["disk"]
    if not s_l > s_d:
        raise InvalidArgumentError("lamellar slope must exceed the disk slope")
    return (a_d - a_l) / (s_l - s_d)


def sigma1_bound(r: float, m: float = 0.0) -> float:
    """Threshold above which inner arcs have radius below beta r / 2, beta = R^2 / (4 r^2)."""
    if not 0 < r < 0.5:
        raise InvalidArgumentError("r must lie in (0, 1/2)")
    beta = disk_radius(m) ** 2 / (4.0 * r * r)
    return math.pi * r * r * (1.0 / (1.0 - 2.0 * r) + 1.0 / (beta * r))


def sigma0_bound(m: float, r: float, sigma1: float) -> float:
    R = disk_radius(m)
    return max(sigma1, (r * r) / (R * R) * (math.pi * R - 1.0))


# -- strips ---------------------------------------------------------------------


@dataclass(frozen=True)
class StripFeasibility:
    feasible: bool
    sigma_bound: float
    R1_min: float
    R1_max: float
    curvature_sum: float

    def R2_from_R1(self, R1: float) -> float:
        """Inner radius from 1/R1 + 1/R2 = 2 sigma / (pi r^2)."""
        q = self.curvature_sum - 1.0 / R1
        if q <= 0:
            raise InfeasibleGeometryError(f"R1 = {R1} leaves no positive inner radius")
        return 1.0 / q

    def midpoint(self) -> tuple[float, float]:
        """Pair whose 1/R1 sits midway through the admissible interval."""
        if not self.feasible:
            raise InfeasibleGeometryError("no admissible strip radii")
        lo = 0.0 if math.isinf(self.R1_max) else 1.0 / self.R1_max
        inv = 0.5 * (lo + 1.0 / self.R1_min)
        R1 = 1.0 / inv
        return R1, self.R2_from_R1(R1)

    def samples(self, count: int) -> list[tuple[float, float]]:
        lo = 0.0 if math.isinf(self.R1_max) else 1.0 / self.R1_max
        hi = 1.0 / self.R1_min
        invs = lo + (hi - lo) * (np.arange(count) + 0.5) / count
        out = []
        for inv in invs:
            if inv > 0:
                out.append((1.0 / inv, self.R2_from_R1(1.0 / inv)))
        return out


def strip_feasibility(sigma: float, r: float) -> StripFeasibility:
    """Admissible (R1, R2) for concave/convex strips at this sigma.

    Conditions: 1/R1 + 1/R2 = 2 sigma / (pi r^2), R1 > 1/2 - r and R2 > r.
    """
    if not 0 < r < 0.5:
        raise InvalidArgumentError("r must lie in (0, 1/2)")
    bound = math.pi * r / (2.0 * (1.0 - 2.0 * r))
    q = 2.0 * sigma / (math.pi * r * r)
    lo = max(0.0, q - 1.0 / r)  # 1/R1 above this keeps R2 > r
    hi = min(q, 1.0 / (0.5 - r))  # and below this keeps R1 > 1/2 - r, R2 > 0
    feasible = sigma > 0 and sigma < bound and hi > lo
    R1_min = 1.0 / hi if hi > 0 else math.inf
    R1_max = math.inf if lo == 0 else 1.0 / lo
    return StripFeasibility(bool(feasible), bound, R1_min, R1_max, q)


def build_concave_convex_strip(R1: float, R2: float, r: float, m: float,
                               axis: int = 2) -> ConcaveConvexStrip:
    """Strip with junctions on the circle |x| = r, then translated to area (1 + m)/2."""
    if not R1 > 0.5 - r:
        raise InfeasibleGeometryError(f"R1 = {R1} must exceed 1/2 - r = {0.5 - r}")
    if not R2 > r:
        raise InfeasibleGeometryError(f"R2 = {R2} must exceed r = {r}")
    base = ConcaveConvexStrip(R1, R2, r, 0.0, axis)
    shift = ((1.0 + m) / 2.0 - base.area()) / 2.0
    return ConcaveConvexStrip(R1, R2, r, shift, axis)


def junction_tangent_mismatch(p: Pattern) -> float:
    """Largest angle between consecutive primitive tangents at their junctions."""
    worst = 0.0
    for loop in p.loops():
        for a, b in zip(loop, loop[1:] + loop[:1]):
            ta, tb = _end_tangent(a), _start_tangent(b)
            cross = ta[0] * tb[1] - ta[1] * tb[0]
            dot = ta[0] * tb[0] + ta[1] * tb[1]
            worst = max(worst, abs(math.atan2(cross, dot)))
    return worst


def _start_tangent(p):
    if isinstance(p, Arc):
        th = p.theta0
        s = math.copysign(1.0, p.sweep)
        return (-s * math.sin(th), s * math.cos(th))
    d = np.subtract(p.end, p.start)
    return tuple(d / np.hypot(*d))


def _end_tangent(p):
    if isinstance(p, Arc):
        th = p.theta0 + p.sweep
        s = math.copysign(1.0, p.sweep)
        return (-s * math.sin(th), s * math.cos(th))
    return _start_tangent(p)


# -- band-aids ------------------------------------------------------------------


def critical_cap_radius(sigma: float, r: float, convention: str = "curv2d") -> float:
    """Cap radius making a lambda = 0 band-aid stationary: pi r^2 / (c sigma)."""
    if sigma <= 0:
        raise InvalidArgumentError("sigma must be positive")
    c = {"curv2d": 2.0, "firstvar": 4.0}[convention]
    return math.pi * r * r / (c * sigma)


def band_aid_area(cap_radius: float, inset: float) -> float:
    return 2.0 * cap_radius * (1.0 - 2.0 * inset) + math.pi * cap_radius**2


def build_band_aid(m: float, r: float, sigma: float, mode: str = "area",
                   convention: str = "curv2d", center=(0.0, 0.0), axis: int = 2) -> BandAid:
    """Band-aid whose semicircular caps sit inside B(center, r) with the cap
    junctions on its boundary (inset = sqrt(r^2 - cap^2)).

    ``mode="area"`` picks the cap radius so that the area is (1 + m)/2; the
    criticality of the result is left to the audit. ``mode="critical"`` uses
    the stationary cap radius for ``sigma`` and ignores the area.
    """
    if not 0 < r < 0.5:
        raise InvalidArgumentError("r must lie in (0, 1/2)")
    target = (1.0 + m) / 2.0
    if mode == "critical":
        rho = critical_cap_radius(sigma, r, convention)
    elif mode == "area":
        def resid(c):
            return band_aid_area(c, math.sqrt(r * r - c * c)) - target

        # caps must not overlap: inset > cap, i.e. cap < r / sqrt(2)
        top = r / math.sqrt(2.0) * (1 - 1e-12)
        if resid(1e-12) * resid(top) > 0:
            raise InfeasibleGeometryError(
                f"no cap radius in (0, r/sqrt 2) gives area {target:.4g} for r = {r}"
            )
        rho = brentq(resid, 1e-12, top, xtol=1e-15, rtol=1e-15)
    else:
        raise InvalidArgumentError(f"unknown band-aid mode {mode!r}")
    if not rho < r:
        raise InfeasibleGeometryError(f"cap radius {rho:.5g} does not fit inside B(0, {r})")
    inset = math.sqrt(r * r - rho * rho)
    if not inset > rho:
        raise InfeasibleGeometryError(
            f"caps of radius {rho:.5g} overlap (inset {inset:.5g}); need cap < r / sqrt(2)"
        )
    # local frame: v is the band normal, u runs along it
    mid, gap = (center[1], center[0]) if axis == 2 else (center[0], -center[1])
    return BandAid(lo=mid - rho, hi=mid + rho, inset=inset, gap_center=gap, axis=axis)


def band_aid_for_inset(inset: float, m: float, offset: float = 0.0, gap_center: float = 0.0,
                       axis: int = 2) -> BandAid:
    """Band-aid of area (1 + m)/2 with a prescribed inset (cap radius from the quadratic)."""
    A = (1.0 + m) / 2.0
    b = 2.0 * (1.0 - 2.0 * inset)
    rho = (-b + math.sqrt(b * b + 4 * math.pi * A)) / (2 * math.pi)
    return BandAid(lo=offset - rho, hi=offset + rho, inset=inset, gap_center=gap_center, axis=axis)


# -- battery ----------------------------------------------------------------------


def band_aid_battery(m: float, r: float, count: int = 10) -> list[BandAid]:
    """Area-matched band-aids spanning insets, offsets and orientations."""
    out = [build_band_aid(m, r, 1.0, mode="area")]
    insets = np.linspace(0.30, 0.48, count - 1)
    for j, a in enumerate(insets):
        offset = [0.0, 0.1, -0.2, 0.3][j % 4]
        gap = [0.0, 0.25, -0.4][j % 3]
        axis = 1 + (j % 2)
        out.append(band_aid_for_inset(float(a), m, offset, gap, axis))
    return out[:count]


def strip_battery(m: float, r: float, sigma: float, count: int = 10,
                  max_candidates: int = 200) -> list[ConcaveConvexStrip]:
    """Area-matched concave/convex strips with radii admissible at ``sigma``."""
    feas = strip_feasibility(sigma, r)
    if not feas.feasible:
        return []
    out = []
    for R1, R2 in feas.samples(max_candidates):
        try:
            out.append(build_concave_convex_strip(R1, R2, r, m))
        except InfeasibleGeometryError:
            continue
    if len(out) <= count:
        return out
    idx = np.linspace(0, len(out) - 1, count).round().astype(int)
    return [out[i] for i in idx]


def large_sigma_comparison(m: float, r: float, sigma: float, battery_sigma: float | None = None,
                           rho: DensitySpec | None = None) -> dict:
    """Energy margin of the interior disk over every battery pattern at ``sigma``."""
    _check_window(m, r)
    rho = rho or DensitySpec.uniform_disk((0.0, 0.0), r)
    disk = sharp_energy(interior_disk(m), rho, sigma).total
    battery = [("lamellar", best_lamellar(m, r))]
    battery += [("band_aid", b) for b in band_aid_battery(m, r)]
    battery += [("strip", s) for s in strip_battery(m, r, battery_sigma or sigma)]
    rows = []
    for family, p in battery:
        e = sharp_energy(p, rho, sigma).total
        rows.append({"family": family, "pattern": p.params(), "total": e, "margin": e - disk})
    return {
        "sigma": sigma,
        "disk_total": disk,
        "rows": rows,
        "min_margin": min(r_["margin"] for r_ in rows),
        "disk_wins": all(r_["margin"] > 0 for r_ in rows),
    }


def phase_diagram(m: float, r: float, sigmas, include_informational: bool = True) -> list[dict]:
    """Rows (m, r, sigma, family, perimeter, penal, total, is_argmin, feasible, sigma0_bound).

    The argmin is taken over the lamellar/disk menu; band-aid and strip rows
    are informational.
    """
    _check_window(m, r)
    rho = DensitySpec.uniform_disk((0.0, 0.0), r)
    s1 = sigma1_bound(r, m)
    s0 = sigma0_bound(m, r, s1)
    lam, dsk = best_lamellar(m, r), interior_disk(m)
    band = build_band_aid(m, r, 1.0, mode="area") if include_informational else None
    rep_l = sharp_energy(lam, rho, 1.0)
    rep_d = sharp_energy(dsk, rho, 1.0)
    rep_b = sharp_energy(band, rho, 1.0) if band is not None else None
    rows = []
    for sigma in sigmas:
        sigma = float(sigma)
        e_l = rep_l.perimeter + sigma * rep_l.penal
        e_d = rep_d.perimeter + sigma * rep_d.penal
        arg = "lamellar" if e_l <= e_d else "disk"
        for fam, rep, feasible in (("lamellar", rep_l, True), ("disk", rep_d, True)):
            pen = sigma * rep.penal
            rows.append(dict(m=m, r=r, sigma=sigma, family=fam, perimeter=rep.perimeter,
                             penal=pen, total=rep.perimeter + pen, is_argmin=fam == arg,
                             feasible=feasible, sigma0_bound=s0))
        if include_informational:
            pen = sigma * rep_b.penal
            rows.append(dict(m=m, r=r, sigma=sigma, family="band_aid", perimeter=rep_b.perimeter,
                             penal=pen, total=rep_b.perimeter + pen, is_argmin=False,
                             feasible=True, sigma0_bound=s0))
            feas = strip_feasibility(sigma, r)
            per = pen = tot = float("nan")
            if feas.feasible:
                try:
                    s = build_concave_convex_strip(*feas.midpoint(), r, m)
                    rep = sharp_energy(s, rho, sigma)
                    per, pen, tot = rep.perimeter, rep.penal, rep.total
                except InfeasibleGeometryError:
                    pass
            rows.append(dict(m=m, r=r, sigma=sigma, family="strip", perimeter=per, penal=pen,
                             total=tot, is_argmin=False,
                             feasible=feas.feasible and not math.isnan(tot),
                             sigma0_bound=s0))
    return rows


def argmin_switch(rows) -> float | None:
    """First scanned sigma at which the menu argmin is the disk."""
    for row in rows:
        if row["family"] == "disk" and row["is_argmin"]:
            return row["sigma"]
    return None


def interpolated_switch(rows) -> float | None:
    """Sigma where lamellar and disk totals cross, interpolated between scan points.

    Both totals are affine in sigma, so linear interpolation of their
    difference between the bracketing samples is exact.
    """
    diffs = {}
    for row in rows:
        if row["family"] in ("lamellar", "disk"):
            sign = 1.0 if row["family"] == "lamellar" else -1.0
            diffs[row["sigma"]] = diffs.get(row["sigma"], 0.0) + sign * row["total"]
    s = sorted(diffs)
    for a, b in zip(s, s[1:]):
        da, db = diffs[a], diffs[b]
        if da < 0 <= db or da <= 0 < db:
            return a + (b - a) * (-da) / (db - da)
    return None
