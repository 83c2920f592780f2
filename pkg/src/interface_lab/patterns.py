"""Sharp-interface sets A on the flat 2-torus.

Every parametric pattern describes its boundary as closed loops of line
segments and circular arcs in lifted (unwrapped) coordinates, traversed with A
on the left. That single description drives the perimeter, the exact signed
distance, boundary sampling and the JSON geometry export.

Straight-run patterns (lamellar, band-aid, strip) are built in a local frame
``(u, v)`` where ``u`` runs along the pattern and ``v`` is the bounded normal
coordinate. ``axis`` names the global coordinate the normal maps to:
``axis=2`` is the identity frame; ``axis=1`` maps ``(u, v) -> (v, -u)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .contour import InterfaceChain, chain_from_unrolled, extract_interface, total_length
from .errors import InfeasibleGeometryError, InvalidArgumentError, NoInterfaceError
from .torus import GridSpec, ScalarField, as_torus_point, reduce_coords

TWO_PI = 2.0 * math.pi


# -- boundary primitives ---------------------------------------------------


@dataclass(frozen=True)
class Segment:
    start: tuple[float, float]
    end: tuple[float, float]

    @property
    def length(self) -> float:
        return math.dist(self.start, self.end)

    curvature = 0.0

    def sample(self, count: int) -> np.ndarray:
        t = np.arange(count) / count
        a, b = np.asarray(self.start), np.asarray(self.end)
        return a + t[:, None] * (b - a)

    def distance(self, p: np.ndarray) -> np.ndarray:
        a, b = np.asarray(self.start), np.asarray(self.end)
        ab = b - a
        t = np.clip(((p - a) @ ab) / (ab @ ab), 0.0, 1.0)
        closest = a + t[..., None] * ab
        return np.sqrt(np.sum((p - closest) ** 2, axis=-1))

    def transformed(self, fn) -> "Segment":
        return Segment(tuple(fn(self.start)), tuple(fn(self.end)))

    def to_dict(self):
        return {"type": "line", "start": list(self.start), "end": list(self.end)}

    def bbox(self):
        xs, ys = zip(self.start, self.end)
        return min(xs), max(xs), min(ys), max(ys)


@dataclass(frozen=True)
class Arc:
    """Circular arc from angle ``theta0`` sweeping ``sweep`` radians (CCW > 0).

    With A on the left, a CCW arc bounds A from outside (curvature +1/R) and a
    CW arc has A exterior to its circle (curvature -1/R).
    """

    center: tuple[float, float]
    radius: float
    theta0: float
    sweep: float

    @property
    def length(self) -> float:
        return self.radius * abs(self.sweep)

    @property
    def curvature(self) -> float:
        return math.copysign(1.0 / self.radius, self.sweep)

    def point(self, theta):
        cx, cy = self.center
        return np.stack(
            [cx + self.radius * np.cos(theta), cy + self.radius * np.sin(theta)], axis=-1
        )

    @property
    def start(self):
        return tuple(self.point(self.theta0))

    @property
    def end(self):
        return tuple(self.point(self.theta0 + self.sweep))

    def sample(self, count: int) -> np.ndarray:
        th = self.theta0 + self.sweep * np.arange(count) / count
        return self.point(th)

    def distance(self, p: np.ndarray) -> np.ndarray:
        c = np.asarray(self.center)
        rel = p - c
        rad = np.sqrt(np.sum(rel**2, axis=-1))
        radial = np.abs(rad - self.radius)
        if abs(self.sweep) >= TWO_PI - 1e-15:
            return radial
        phi = np.arctan2(rel[..., 1], rel[..., 0])
        if self.sweep > 0:
            offset = np.mod(phi - self.theta0, TWO_PI)
        else:
            offset = np.mod(self.theta0 - phi, TWO_PI)
        inside = offset <= abs(self.sweep)
        s, e = np.asarray(self.start), np.asarray(self.end)
        ends = np.minimum(
            np.sqrt(np.sum((p - s) ** 2, axis=-1)), np.sqrt(np.sum((p - e) ** 2, axis=-1))
        )
        return np.where(inside, radial, ends)

    def transformed(self, rotation: int, mirror=False) -> "Arc":
        """Apply a quarter-turn ``rotation`` (0 or -1) to the arc."""
        cx, cy = self.center
        if rotation == 0:
            return self
        # (u, v) -> (v, -u) is a rotation by -pi/2
        return Arc((cy, -cx), self.radius, self.theta0 - math.pi / 2, self.sweep)

    def reversed(self) -> "Arc":
        return Arc(self.center, self.radius, self.theta0 + self.sweep, -self.sweep)

    def mirrored_v(self) -> "Arc":
        """Reflect across the line v = 0 (keeps the parameter direction)."""
        cx, cy = self.center
        return Arc((cx, -cy), self.radius, -self.theta0, -self.sweep)

    def to_dict(self):
        return {
            "type": "arc",
            "center": list(self.center),
            "radius": self.radius,
            "theta0": self.theta0,
            "sweep": self.sweep,
            "curvature": self.curvature,
        }

    def bbox(self):
        cx, cy = self.center
        r = self.radius
        return cx - r, cx + r, cy - r, cy + r


def _rotate_point(p, rotation):
    if rotation == 0:
        return tuple(p)
    u, v = p
    return (v, -u)


def _transform(prim, rotation):
    if rotation == 0:
        return prim
    if isinstance(prim, Segment):
        return prim.transformed(lambda q: _rotate_point(q, rotation))
    return prim.transformed(rotation)


def _check_axis(axis):
    if axis not in (1, 2):
        raise InvalidArgumentError("axis must be 1 or 2")
    return 0 if axis == 2 else -1


def _to_local(points, rotation):
    """Global -> local coordinates (inverse of the frame rotation)."""
    if rotation == 0:
        return points[..., 0], points[..., 1]
    # global (x1, x2) = (v, -u)  =>  u = -x2, v = x1
    return -points[..., 1], points[..., 0]


# -- patterns --------------------------------------------------------------


class Pattern:
    """Base class: subclasses supply ``loops``, ``contains`` and ``area``."""

    kind = "pattern"

    def loops(self) -> list[list]:
        raise NotImplementedError

    def contains(self, points) -> np.ndarray:
        raise NotImplementedError

    def area(self) -> float:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def primitives(self):
        return [p for loop in self.loops() for p in loop]

    def perimeter(self) -> float:
        return float(sum(p.length for p in self.primitives()))

    def unsigned_distance(self, points) -> np.ndarray:
        pts = reduce_coords(np.asarray(points, dtype=float))
        best = np.full(pts.shape[:-1], np.inf)
        for prim in self.primitives():
            x0, x1, y0, y1 = prim.bbox()
            # integer shifts that can bring the primitive within reach of the domain
            sx = range(math.floor(-1.0 - x1), math.ceil(1.0 - x0) + 1)
            sy = range(math.floor(-1.0 - y1), math.ceil(1.0 - y0) + 1)
            for i in sx:
                for j in sy:
                    best = np.minimum(best, prim.distance(pts - np.array([i, j], float)))
        return best

    def signed_distance(self, points) -> np.ndarray | float:
        pts = np.asarray(points, dtype=float)
        d = self.unsigned_distance(pts)
        out = np.where(self.contains(pts), -d, d)
        return float(out) if out.ndim == 0 else out

    def boundary_chains(self, max_step: float = 1e-3) -> list[InterfaceChain]:
        """Sample every boundary loop with vertex spacing at most ``max_step``."""
        return [c for c, _ in self._sampled_loops(max_step)]

    def boundary_curvature(self, max_step: float = 1e-3) -> list[np.ndarray]:
        """Exact signed curvature at the vertices of :meth:`boundary_chains`."""
        return [k for _, k in self._sampled_loops(max_step)]

    def _sampled_loops(self, max_step):
        out = []
        for loop in self.loops():
            pts, curv = [], []
            for prim in loop:
                count = max(2, math.ceil(prim.length / max_step))
                pts.append(prim.sample(count))
                curv.append(np.full(count, prim.curvature))
            out.append((chain_from_unrolled(np.vstack(pts)), np.concatenate(curv)))
        return out

    def rasterize(self, grid: GridSpec, width: float = 1.0) -> ScalarField:
        """Sharp indicator (+1 on A, -1 off A) with a linear ramp across the interface.

        Values are ``clip(-d / (width * h), -1, 1)`` with ``d`` the signed
        distance, so nodes farther than ``width`` cells from the interface are
        exactly +-1 and the zero level sits on the true boundary to O(h^2).
        """
        d = self.signed_distance(grid.points())
        return ScalarField(grid, np.clip(-d / (width * grid.spacing), -1.0, 1.0))

    def overlap_with_disk(self, center, radius) -> float:
        """Area of A intersected with the (periodic) disk B(center, radius)."""
        return polygon_disk_overlap(self, center, radius)

    @property
    def contractible(self) -> bool:
        return all(c.contractible for c in self.boundary_chains(1e-2))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            **self.params(),
            "area": self.area(),
            "perimeter": self.perimeter(),
            "primitives": [p.to_dict() for p in self.primitives()],
        }


@dataclass(frozen=True)
class Lamellar(Pattern):
    """Straight stripe ``|x_axis - center| < half_width`` wrapping the torus."""

    center: float = 0.0
    half_width: float = 0.25
    axis: int = 1
    kind = "lamellar"

    def __post_init__(self):
        _check_axis(self.axis)
        if not 0.0 < self.half_width < 0.5:
            raise InvalidArgumentError("half_width must lie in (0, 1/2)")

    def loops(self):
        rot = _check_axis(self.axis)
        c, w = self.center, self.half_width
        # in local coordinates the stripe is |v - c| < w; rot=-1 maps v to x1
        if rot == 0:
            top = Segment((0.5, c + w), (-0.5, c + w))
            bottom = Segment((-0.5, c - w), (0.5, c - w))
            return [[top], [bottom]]
        right = Segment((c + w, -0.5), (c + w, 0.5))
        left = Segment((c - w, 0.5), (c - w, -0.5))
        return [[right], [left]]

    def contains(self, points):
        pts = np.asarray(points, dtype=float)
        x = pts[..., self.axis - 1]
        return np.abs(reduce_coords(x - self.center)) < self.half_width

    def signed_distance(self, points):
        pts = np.asarray(points, dtype=float)
        delta = np.abs(reduce_coords(pts[..., self.axis - 1] - self.center))
        out = delta - self.half_width
        return float(out) if out.ndim == 0 else out

    def area(self):
        return 2.0 * self.half_width

    def perimeter(self):
        return 2.0

    def overlap_with_disk(self, center, radius):
        c = as_torus_point(center)
        offset = float(reduce_coords(self.center - c[self.axis - 1]))
        return lamellar_disk_overlap(offset, self.half_width, radius)

    @property
    def contractible(self):
        return False

    def params(self):
        return {"center": self.center, "half_width": self.half_width, "axis": self.axis}


@dataclass(frozen=True)
class Disk(Pattern):
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 0.25
    kind = "disk"

    def __post_init__(self):
        if not 0.0 < self.radius < 0.5:
            raise InvalidArgumentError("disk radius must lie in (0, 1/2)")
        object.__setattr__(self, "center", tuple(float(x) for x in as_torus_point(self.center)))

    def loops(self):
        return [[Arc(self.center, self.radius, 0.0, TWO_PI)]]

    def contains(self, points):
        pts = np.asarray(points, dtype=float)
        return np.sum(reduce_coords(pts - np.asarray(self.center)) ** 2, axis=-1) < self.radius**2

    def signed_distance(self, points):
        pts = np.asarray(points, dtype=float)
        rel = reduce_coords(pts - np.asarray(self.center))
        out = np.sqrt(np.sum(rel**2, axis=-1)) - self.radius
        return float(out) if out.ndim == 0 else out

    def area(self):
        return math.pi * self.radius**2

    def perimeter(self):
        return TWO_PI * self.radius

    def overlap_with_disk(self, center, radius):
        return disk_disk_overlap(self.center, self.radius, center, radius)

    @property
    def contractible(self):
        return True

    def params(self):
        return {"center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class BandAid(Pattern):
    """Contractible stadium wrapping most of the way around the torus.

    In the local frame the band is ``lo < v < hi``. It is interrupted by a gap
    centred at ``u = gap_center``: the two semicircular caps (radius
    ``(hi - lo) / 2``) have their circle centres at ``gap_center +- inset`` and
    bulge towards the gap, so the straight parts have length ``1 - 2 inset``.
    """

    lo: float
    hi: float
    inset: float
    gap_center: float = 0.0
    axis: int = 2
    kind = "band_aid"

    def __post_init__(self):
        _check_axis(self.axis)
        rho = self.cap_radius
        if rho <= 0 or 2 * rho >= 1.0:
            raise InfeasibleGeometryError("band separation must lie in (0, 1)")
        if not rho < self.inset <= 0.5:
            raise InfeasibleGeometryError(
                f"caps overlap or band too long: need cap radius {rho:.4g} < inset"
                f" {self.inset:.4g} <= 1/2"
            )

    @property
    def cap_radius(self) -> float:
        return 0.5 * (self.hi - self.lo)

    @property
    def mid(self) -> float:
        return 0.5 * (self.hi + self.lo)

    def cap_centers(self):
        rot = _check_axis(self.axis)
        return [
            _rotate_point((self.gap_center + s * self.inset, self.mid), rot) for s in (1, -1)
        ]

    def loops(self):
        rot = _check_axis(self.axis)
        rho, m, a, g = self.cap_radius, self.mid, self.inset, self.gap_center
        xl, xr = g + a, g + 1.0 - a
        loop = [
            Segment((xl, m - rho), (xr, m - rho)),
            Arc((xr, m), rho, -math.pi / 2, math.pi),
            Segment((xr, m + rho), (xl, m + rho)),
            Arc((xl, m), rho, math.pi / 2, math.pi),
        ]
        return [[_transform(p, rot) for p in loop]]

    def contains(self, points):
        pts = np.asarray(points, dtype=float)
        u, v = _to_local(pts, _check_axis(self.axis))
        dv = reduce_coords(v - self.mid)
        du = np.abs(reduce_coords(u - self.gap_center))
        rho = self.cap_radius
        in_band = np.abs(dv) < rho
        in_cap = (self.inset - du) ** 2 + dv**2 < rho**2
        return in_band & ((du >= self.inset) | in_cap)

    def area(self):
        rho = self.cap_radius
        return 2 * rho * (1.0 - 2 * self.inset) + math.pi * rho**2

    @property
    def contractible(self):
        return True

    def params(self):
        return {
            "lo": self.lo,
            "hi": self.hi,
            "inset": self.inset,
            "gap_center": self.gap_center,
            "axis": self.axis,
            "cap_radius": self.cap_radius,
        }


@dataclass(frozen=True)
class StripGeometry:
    """Solved junction geometry of one boundary of a concave/convex strip.

    All quantities refer to the upper boundary in the local frame with the
    penalization disk at the origin; the lower boundary is its mirror image.
    """

    junction: tuple[float, float]
    inner_center_height: float
    outer_center_height: float
    junction_angle: float


def solve_strip_junction(R1: float, R2: float, r: float) -> StripGeometry:
    """Tangency of the inner arc (radius R2, centred on u = 0) and the outer
    arc (radius R1, centred on u = 1/2) at a point of the circle |x| = r.

    External tangency puts the outer centre on the ray from the inner centre
    through the junction; demanding that it sits on u = 1/2 fixes the junction
    abscissa to ``R2 / (2 (R1 + R2))``.
    """
    if R1 <= 0 or R2 <= 0 or r <= 0:
        raise InvalidArgumentError("radii must be positive")
    px = R2 / (2.0 * (R1 + R2))
    if px >= r or px >= R2:
        raise InfeasibleGeometryError(
            f"no tangency on the circle of radius {r}: junction abscissa {px:.6g}"
            f" exceeds min(r, R2) = {min(r, R2):.6g}"
        )
    py = math.sqrt(r * r - px * px)
    c2 = py - math.sqrt(R2 * R2 - px * px)
    c1 = py + R1 * (py - c2) / R2
    if 0.5 - px > R1:
        raise InfeasibleGeometryError("outer arc too small to reach the period boundary")
    return StripGeometry((px, py), c2, c1, math.atan2(py, px))


def _circle_primitive(x, R):
    """Antiderivative of sqrt(R^2 - x^2)."""
    x = np.clip(x, -R, R)
    return 0.5 * (x * np.sqrt(R * R - x * x) + R * R * np.arcsin(x / R))


@dataclass(frozen=True)
class ConcaveConvexStrip(Pattern):
    """Wrapping stripe bounded by alternating convex (inside B(0, r)) and
    concave (outside) circular arcs, mirror-symmetric about ``v = 0``.

    ``shift`` moves the upper boundary up and the lower boundary down by the
    same amount (area matching); with ``shift = 0`` the arc junctions lie on
    the circle of radius ``r``.
    """

    R1: float
    R2: float
    r: float
    shift: float = 0.0
    axis: int = 2
    kind = "strip"
    geometry: StripGeometry = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_axis(self.axis)
        geo = solve_strip_junction(self.R1, self.R2, self.r)
        object.__setattr__(self, "geometry", geo)
        lo_pt = geo.outer_center_height - self.R1 + self.shift
        hi_pt = geo.inner_center_height + self.R2 + self.shift
        if lo_pt <= 0:
            raise InfeasibleGeometryError("strip pinches off at the period boundary")
        if hi_pt >= 0.5:
            raise InfeasibleGeometryError("strip overlaps its periodic image")

    def upper(self, u) -> np.ndarray:
        """Height of the upper boundary over u in [-1/2, 1/2]."""
        geo = self.geometry
        u = np.abs(np.asarray(u, dtype=float))
        px = geo.junction[0]
        inner = geo.inner_center_height + np.sqrt(np.clip(self.R2**2 - u**2, 0, None))
        outer = geo.outer_center_height - np.sqrt(
            np.clip(self.R1**2 - (u - 0.5) ** 2, 0, None)
        )
        return np.where(u <= px, inner, outer) + self.shift

    def loops(self):
        rot = _check_axis(self.axis)
        geo = self.geometry
        px, py = geo.junction
        t = self.shift
        c1, c2 = geo.outer_center_height + t, geo.inner_center_height + t
        a_out = math.atan2(py - geo.outer_center_height, px - 0.5)  # in (-pi, -pi/2)
        a_in = math.atan2(py - geo.inner_center_height, px)  # in (0, pi/2)
        upper = [
            Arc((0.5, c1), self.R1, -math.pi / 2, a_out + math.pi / 2),
            Arc((0.0, c2), self.R2, a_in, math.pi - 2 * a_in),
            Arc((-0.5, c1), self.R1, -math.pi - a_out, a_out + math.pi / 2),
        ]
        lower = [p.mirrored_v().reversed() for p in reversed(upper)]
        return [[_transform(p, rot) for p in upper], [_transform(p, rot) for p in lower]]

    def contains(self, points):
        pts = np.asarray(points, dtype=float)
        u, v = _to_local(pts, _check_axis(self.axis))
        return np.abs(reduce_coords(v)) < self.upper(reduce_coords(u))

    def area(self):
        geo = self.geometry
        px = geo.junction[0]
        t = self.shift
        inner = 2 * px * (geo.inner_center_height + t) + (
            _circle_primitive(px, self.R2) - _circle_primitive(-px, self.R2)
        )
        outer = 2 * (
            (0.5 - px) * (geo.outer_center_height + t)
            - (_circle_primitive(0.0, self.R1) - _circle_primitive(px - 0.5, self.R1))
        )
        return float(2.0 * (inner + outer))

    @property
    def contractible(self):
        return False

    def params(self):
        geo = self.geometry
        return {
            "R1": self.R1,
            "R2": self.R2,
            "r": self.r,
            "shift": self.shift,
            "axis": self.axis,
            "junction": list(geo.junction),
            "junction_angle": geo.junction_angle,
            "inner_center_height": geo.inner_center_height,
            "outer_center_height": geo.outer_center_height,
        }


class GridIndicator(Pattern):
    """Set ``{f > 0}`` of a gridded field (2-D)."""

    kind = "grid"

    def __init__(self, field: ScalarField):
        if field.spec.dimension != 2:
            raise InvalidArgumentError("grid patterns are 2-D")
        self.field = field
        self._sdf = None

    def _interp(self, values, points):
        pts = reduce_coords(np.asarray(points, dtype=float))
        h = self.field.spec.spacing
        idx = (pts + 0.5) / h - 0.5
        flat = idx.reshape(-1, 2).T
        out = ndimage.map_coordinates(values, flat, order=1, mode="grid-wrap")
        return out.reshape(pts.shape[:-1])

    def contains(self, points):
        return self._interp(self.field.values, points) > 0.0

    def distance_field(self) -> ScalarField:
        if self._sdf is None:
            from .distance import grid_signed_distance

            self._sdf = grid_signed_distance(self.field)
        return self._sdf

    def signed_distance(self, points):
        if not np.any(self.field.values > 0) or np.all(self.field.values > 0):
            raise NoInterfaceError("grid pattern is empty or full")
        out = self._interp(self.distance_field().values, points)
        return float(out) if np.ndim(out) == 0 else out

    def unsigned_distance(self, points):
        return np.abs(self.signed_distance(points))

    def chains(self):
        return extract_interface(self.field, 0.0)

    def loops(self):
        raise NotImplementedError("grid patterns have no parametric boundary")

    def boundary_chains(self, max_step=None):
        return self.chains()

    def area(self):
        return float(np.count_nonzero(self.field.values > 0) * self.field.spec.cell_volume)

    def perimeter(self):
        try:
            return total_length(self.chains())
        except NoInterfaceError:
            return 0.0

    def rasterize(self, grid, width=1.0):
        if grid == self.field.spec:
            return self.field
        raise InvalidArgumentError("grid pattern lives on its own grid")

    def overlap_with_disk(self, center, radius):
        from .measures import DensitySpec

        rho = DensitySpec.uniform_disk(center, radius).cell_average_field(self.field.spec)
        w = 0.5 * (1.0 + self.field.values)
        return float(np.sum(w * rho.values) * self.field.spec.cell_volume * math.pi * radius**2)

    @property
    def contractible(self):
        return all(c.contractible for c in self.chains())

    def params(self):
        return {"resolution": self.field.spec.resolution}

    def to_dict(self):
        return {"kind": self.kind, **self.params(), "area": self.area(), "perimeter": self.perimeter()}


# -- overlaps with the penalization disk ------------------------------------


def _slab_disk_area(y0, y1, r):
    """Area of {y0 < y < y1} within the disk of radius r centred at the origin."""
    a, b = max(y0, -r), min(y1, r)
    if b <= a:
        return 0.0
    return float(2.0 * (_circle_primitive(b, r) - _circle_primitive(a, r)))


def lamellar_disk_overlap(offset: float, half_width: float, r: float) -> float:
    """Overlap of the stripe |y - offset| < w (periodic) with B(0, r), r < 1/2."""
    return sum(
        _slab_disk_area(offset + k - half_width, offset + k + half_width, r) for k in (-1, 0, 1)
    )


def _lens_area(d, R, r):
    if d >= R + r:
        return 0.0
    if d <= abs(R - r):
        return math.pi * min(R, r) ** 2
    a = (d * d + R * R - r * r) / (2 * d * R)
    b = (d * d + r * r - R * R) / (2 * d * r)
    k = math.sqrt(max((-d + R + r) * (d + R - r) * (d - R + r) * (d + R + r), 0.0))
    return R * R * math.acos(max(-1.0, min(1.0, a))) + r * r * math.acos(max(-1.0, min(1.0, b))) - 0.5 * k


def disk_disk_overlap(c1, R, c2, r) -> float:
    """Periodic overlap of two disks with radii below 1/2."""
    d = reduce_coords(np.asarray(c1, float) - np.asarray(c2, float))
    total = 0.0
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            total += _lens_area(math.hypot(d[0] + i, d[1] + j), R, r)
    return total


def _equal_area_circle(center, radius, count=4096):
    """Polygon with the exact area of the disk (vertex radius inflated)."""
    from shapely.geometry import Polygon

    th = TWO_PI * np.arange(count) / count
    scale = math.sqrt(TWO_PI / (count * math.sin(TWO_PI / count)))
    rr = radius * scale
    return Polygon(np.c_[center[0] + rr * np.cos(th), center[1] + rr * np.sin(th)])


def pattern_polygon(pattern: Pattern, max_step: float = 2e-4):
    """One lifted copy of A as a shapely polygon (fundamental period for wrapping sets)."""
    from shapely.geometry import Polygon

    loops = pattern.loops()
    if pattern.contractible:
        (loop,) = loops
        pts = np.vstack([p.sample(max(4, math.ceil(p.length / max_step))) for p in loop])
        return Polygon(pts)
    # wrapping set: two boundary loops, each spanning one period; stitch them
    # into one period cell bounded by the cut lines of the fundamental domain
    a, b = (
        np.vstack([p.sample(max(4, math.ceil(p.length / max_step))) for p in loop])
        for loop in loops
    )
    b_end = np.asarray(loops[1][-1].end)
    a_end = np.asarray(loops[0][-1].end)
    ring = np.vstack([a, a_end[None], b, b_end[None]])
    return Polygon(ring)


def polygon_disk_overlap(pattern: Pattern, center, radius) -> float:
    poly = pattern_polygon(pattern)
    if not poly.is_valid:
        raise InfeasibleGeometryError("pattern polygon is self-intersecting")
    c = as_torus_point(center)
    minx, miny, maxx, maxy = poly.bounds
    total = 0.0
    for i in range(math.floor(minx - c[0] - radius), math.ceil(maxx - c[0] + radius) + 1):
        for j in range(math.floor(miny - c[1] - radius), math.ceil(maxy - c[1] + radius) + 1):
            disk = _equal_area_circle((c[0] + i, c[1] + j), radius)
            if disk.intersects(poly):
                total += poly.intersection(disk).area
    return float(total)


# -- (de)serialization -----------------------------------------------------


def pattern_from_dict(d: dict) -> Pattern:
    d = dict(d)
    kind = d.pop("kind")
    for k in ("area", "perimeter", "primitives", "cap_radius", "junction",
              "junction_angle", "inner_center_height", "outer_center_height"):
        d.pop(k, None)
    if kind == "lamellar":
        return Lamellar(**d)
    if kind == "disk":
        return Disk(center=tuple(d.get("center", (0.0, 0.0))), radius=d["radius"])
    if kind == "band_aid":
        return BandAid(**d)
    if kind == "strip":
        return ConcaveConvexStrip(**d)
    raise InvalidArgumentError(f"unknown pattern kind {kind!r}")
