"""Target densities, the radial mollifier, dyadic particle placement, the
mollified empirical measure and weak-* convergence diagnostics (n = 2).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate, special
from scipy.spatial import cKDTree

from .errors import InvalidArgumentError, PackingError, ResolutionError
from .torus import GridSpec, ScalarField, as_torus_point, reduce_coords

_SHIFTS = [(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)]


# -- exact disk / rectangle geometry ----------------------------------------


def _sqrt_primitive(x, R):
    """Antiderivative of sqrt(R^2 - x^2), vectorized."""
    x = np.clip(x, -R, R)
    return 0.5 * (x * np.sqrt(np.maximum(R * R - x * x, 0.0)) + R * R * np.arcsin(x / R))


def rect_disk_area(x0, x1, y0, y1, R):
    """Exact area of [x0,x1] x [y0,y1] inside the disk |x| < R (vectorized).

    The chord-length integrand is piecewise one of ``y1 - y0``, ``w - y0``,
    ``y1 + w`` or ``2w`` with ``w = sqrt(R^2 - x^2)``; splitting at the
    abscissae where the rectangle edges meet the circle makes each piece an
    elementary integral.
    """
    x0, x1, y0, y1 = (np.asarray(a, dtype=float) for a in np.broadcast_arrays(x0, x1, y0, y1))
    bps = [x0, x1]
    for y in (y0, y1):
        c = np.sqrt(np.maximum(R * R - y * y, 0.0))
        bps += [-c, c]
    bps += [np.full_like(x0, -R), np.full_like(x0, R)]
    b = np.sort(np.clip(np.stack(bps, axis=-1), x0[..., None], x1[..., None]), axis=-1)
    lo, hi = b[..., :-1], b[..., 1:]
    mid = 0.5 * (lo + hi)
    w = np.sqrt(np.maximum(R * R - mid * mid, 0.0))
    yy0, yy1 = y0[..., None], y1[..., None]
    upper_is_w = w < yy1
    lower_is_w = -w > yy0
    Gw = _sqrt_primitive(hi, R) - _sqrt_primitive(lo, R)
    dx = hi - lo
    up = np.where(upper_is_w, Gw, yy1 * dx)
    down = np.where(lower_is_w, -Gw, yy0 * dx)
    seg = up - down
    valid = (np.abs(mid) < R) & (np.minimum(w, yy1) > np.maximum(-w, yy0)) & (dx > 0)
    return np.sum(np.where(valid, seg, 0.0), axis=-1)


def periodic_rect_disk_area(x0, x1, y0, y1, center, R):
    """Area of axis-aligned rectangles (inside one period) within the periodic disk."""
    c = as_torus_point(center)
    x0, x1, y0, y1 = (np.asarray(a, dtype=float) for a in np.broadcast_arrays(x0, x1, y0, y1))
    total = np.zeros(x0.shape)
    for i, j in _SHIFTS:
        ax0, ax1, ay0, ay1 = x0 - (c[0] + i), x1 - (c[0] + i), y0 - (c[1] + j), y1 - (c[1] + j)
        # only rectangles cut by the circle need the exact formula
        near = np.hypot(np.maximum(0.0, np.maximum(ax0, -ax1)), np.maximum(0.0, np.maximum(ay0, -ay1)))
        far = np.hypot(np.maximum(np.abs(ax0), np.abs(ax1)), np.maximum(np.abs(ay0), np.abs(ay1)))
        full = far <= R
        total[full] += ((ax1 - ax0) * (ay1 - ay0))[full]
        cut = (near < R) & ~full
        if np.any(cut):
            total[cut] += rect_disk_area(ax0[cut], ax1[cut], ay0[cut], ay1[cut], R)
    return total if total.ndim else float(total)


def _lens(d, R, r):
    d = np.asarray(d, dtype=float)
    small = np.minimum(R, r)
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.clip((d * d + R * R - r * r) / (2 * d * R), -1, 1)
        b = np.clip((d * d + r * r - R * R) / (2 * d * r), -1, 1)
        k = np.sqrt(np.maximum((-d + R + r) * (d + R - r) * (d - R + r) * (d + R + r), 0.0))
        part = R * R * np.arccos(a) + r * r * np.arccos(b) - 0.5 * k
    return np.where(d >= R + r, 0.0, np.where(d <= abs(R - r), math.pi * small**2, part))


def _slab_disk(y0, y1, R):
    a, b = np.maximum(y0, -R), np.minimum(y1, R)
    return np.where(b > a, 2.0 * (_sqrt_primitive(b, R) - _sqrt_primitive(a, R)), 0.0)


# -- test sets for weak-* diagnostics ----------------------------------------


@dataclass(frozen=True)
class BallSet:
    center: tuple
    radius: float

    def indicator(self, pts):
        rel = reduce_coords(pts - np.asarray(self.center))
        return np.sum(rel**2, axis=-1) <= self.radius**2

    def describe(self):
        return {"type": "ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class StripeSet:
    center: float
    half_width: float
    axis: int = 1

    def indicator(self, pts):
        return np.abs(reduce_coords(pts[..., self.axis - 1] - self.center)) <= self.half_width

    def describe(self):
        return {"type": "stripe", "center": self.center, "half_width": self.half_width,
                "axis": self.axis}


@dataclass(frozen=True)
class CubeUnionSet:
    level: int
    indices: tuple  # flat cube indices, i = a * 2^k + b

    def rects(self):
        s = 2.0 ** -self.level
        n = 2**self.level
        idx = np.asarray(self.indices, dtype=int)
        a, b = idx // n, idx % n
        return -0.5 + a * s, -0.5 + (a + 1) * s, -0.5 + b * s, -0.5 + (b + 1) * s

    def indicator(self, pts):
        n = 2**self.level
        p = reduce_coords(pts)
        ij = np.clip(np.floor((p + 0.5) * n).astype(int), 0, n - 1)
        flat = ij[..., 0] * n + ij[..., 1]
        return np.isin(flat, np.asarray(self.indices, dtype=int))

    def describe(self):
        return {"type": "cubes", "level": self.level, "indices": list(self.indices)}


@dataclass(frozen=True)
class WholeTorus:
    def indicator(self, pts):
        return np.ones(pts.shape[:-1], dtype=bool)

    def describe(self):
        return {"type": "torus"}


# -- densities ---------------------------------------------------------------


def _cell_coordinates_1d(n):
    s = 1.0 / n
    lo = -0.5 + np.arange(n) * s
    return lo, lo + s


class DensitySpec:
    """Probability density on the 2-torus that is piecewise constant over regions.

    Build with :meth:`uniform`, :meth:`uniform_disk`, :meth:`piecewise_cells`
    or :meth:`gridded`. When ``clamp = (lo, hi)`` is given the density is
    clipped to ``[lo, hi]`` and renormalized to unit mass.
    """

    def __init__(self, kind, *, center=None, radius=None, inside=None, outside=0.0,
                 cells=None, clamp=None):
        self.kind = kind
        self.center = None if center is None else tuple(float(c) for c in as_torus_point(center))
        self.radius = radius
        self.inside = inside
        self.outside = outside
        self.cells = None if cells is None else np.asarray(cells, dtype=float)
        self.clamp = clamp

    # construction
    @classmethod
    def uniform(cls):
        return cls("uniform")

    @classmethod
    def uniform_disk(cls, center=(0.0, 0.0), radius=0.45, clamp=None):
        if not 0.0 < radius < 0.5:
            raise InvalidArgumentError("disk radius must lie in (0, 1/2)")
        area = math.pi * radius**2
        inside, outside = 1.0 / area, 0.0
        if clamp is not None:
            lo, hi = _check_clamp(clamp)
            inside, outside = min(max(inside, lo), hi), min(max(outside, lo), hi)
            mass = inside * area + outside * (1.0 - area)
            inside, outside = inside / mass, outside / mass
        return cls("uniform_disk", center=center, radius=radius, inside=inside,
                   outside=outside, clamp=clamp)

    @classmethod
    def piecewise_cells(cls, level, weights, clamp=None):
        n = 2**level
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.size != n * n:
            raise InvalidArgumentError(f"level {level} needs {n * n} weights, got {w.size}")
        if np.any(w < 0) or not np.any(w > 0):
            raise InvalidArgumentError("weights must be nonnegative and not all zero")
        vals = _normalize_cells(w.reshape(n, n), clamp)
        return cls("piecewise_cells", cells=vals, clamp=clamp)

    @classmethod
    def gridded(cls, f: ScalarField, clamp=None):
        if f.spec.dimension != 2:
            raise InvalidArgumentError("densities are 2-D")
        if np.any(f.values < 0) or not np.any(f.values > 0):
            raise InvalidArgumentError("density values must be nonnegative and not all zero")
        return cls("gridded", cells=_normalize_cells(np.array(f.values), clamp), clamp=clamp)

    # evaluation
    def value(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if self.kind == "uniform":
            return np.ones(pts.shape[:-1])
        if self.kind == "uniform_disk":
            rel = reduce_coords(pts - np.asarray(self.center))
            inside = np.sum(rel**2, axis=-1) < self.radius**2
            return np.where(inside, self.inside, self.outside)
        n = self.cells.shape[0]
        p = reduce_coords(pts)
        ij = np.clip(np.floor((p + 0.5) * n).astype(int), 0, n - 1)
        return self.cells[ij[..., 0], ij[..., 1]]

    def cube_masses(self, k: int) -> np.ndarray:
        """mu(Q) for every level-``k`` dyadic cube, shape (2^k, 2^k)."""
        n = 2**k
        side = 1.0 / n
        if self.kind == "uniform":
            return np.full((n, n), side * side)
        if self.kind == "uniform_disk":
            lo, hi = _cell_coordinates_1d(n)
            x0, y0 = np.meshgrid(lo, lo, indexing="ij")
            x1, y1 = np.meshgrid(hi, hi, indexing="ij")
            inner = periodic_rect_disk_area(x0, x1, y0, y1, self.center, self.radius)
            return self.inside * inner + self.outside * (side * side - inner)
        return _aggregate_cells(self.cells, n)

    def cell_average_field(self, grid: GridSpec) -> ScalarField:
        """Cell averages of the density on the grid cells centred at the nodes."""
        n = grid.resolution
        h = grid.spacing
        if self.kind == "uniform":
            return ScalarField.constant(grid, 1.0)
        if self.kind == "uniform_disk":
            c = grid.coords()
            X, Y = np.meshgrid(c, c, indexing="ij")
            inner = periodic_rect_disk_area(X - h / 2, X + h / 2, Y - h / 2, Y + h / 2,
                                            self.center, self.radius) / (h * h)
            return ScalarField(grid, self.inside * inner + self.outside * (1.0 - inner))
        m = self.cells.shape[0]
        if n % m == 0:
            rep = n // m
            return ScalarField(grid, np.kron(self.cells, np.ones((rep, rep))))
        if m % n == 0:
            return ScalarField(grid, _aggregate_cells(self.cells, n) / (h * h))
        raise InvalidArgumentError("grid and density cells must nest")

    def mass_in(self, test) -> float:
        """mu(Omega) for a test set."""
        if isinstance(test, WholeTorus):
            return 1.0
        if self.kind == "uniform":
            if isinstance(test, BallSet):
                return math.pi * test.radius**2
            if isinstance(test, StripeSet):
                return 2.0 * test.half_width
            return len(test.indices) * 4.0 ** -test.level
        if self.kind == "uniform_disk":
            if isinstance(test, BallSet):
                inner = _periodic_lens(test.center, test.radius, self.center, self.radius)
                size = math.pi * test.radius**2
            elif isinstance(test, StripeSet):
                off = float(reduce_coords(test.center - self.center[test.axis - 1]))
                inner = float(sum(_slab_disk(off + k - test.half_width, off + k + test.half_width,
                                             self.radius) for k in (-1, 0, 1)))
                size = 2.0 * test.half_width
            else:
                x0, x1, y0, y1 = test.rects()
                inner = float(np.sum(periodic_rect_disk_area(x0, x1, y0, y1, self.center,
                                                             self.radius)))
                size = len(test.indices) * 4.0 ** -test.level
            return self.inside * inner + self.outside * (size - inner)
        if isinstance(test, CubeUnionSet) and 2**test.level <= self.cells.shape[0]:
            masses = self.cube_masses(test.level).reshape(-1)
            return float(np.sum(masses[np.asarray(test.indices, dtype=int)]))
        return _fine_quadrature(self, test.indicator)

    def fourier(self, k) -> complex:
        """Fourier coefficient integral of exp(2 pi i k.x) rho(x) dx for integer ``k``."""
        k = np.asarray(k, dtype=float)
        kn = float(np.hypot(*k))
        if kn == 0:
            return 1.0 + 0j
        if self.kind == "uniform":
            return 0j
        if self.kind == "uniform_disk":
            R = self.radius
            a = 2 * math.pi * kn * R
            ft = math.pi * R * R * 2.0 * special.j1(a) / a
            phase = np.exp(2j * math.pi * np.dot(k, self.center))
            return complex((self.inside - self.outside) * ft * phase)
        n = self.cells.shape[0]
        lo, hi = _cell_coordinates_1d(n)
        f1 = _interval_ft(lo, hi, k[0])
        f2 = _interval_ft(lo, hi, k[1])
        return complex(np.sum(self.cells * np.outer(f1, f2)))

    def hat_integral(self, center, a) -> float:
        """Integral of max(0, a - |x - center|) rho(x) dx."""
        base = math.pi * a**3 / 3.0
        if self.kind == "uniform":
            return base
        if self.kind == "uniform_disk":
            c = as_torus_point(center)
            d0 = reduce_coords(c - np.asarray(self.center))
            R = self.radius

            def covered_arc(s):
                # length of the circle |x - c| = s lying inside the periodic disk
                total = 0.0
                for i, j in _SHIFTS:
                    D = math.hypot(d0[0] + i, d0[1] + j)
                    if D + s <= R:
                        total += 2 * math.pi * s
                    elif s >= D + R or D >= s + R:
                        continue
                    else:
                        cosang = (s * s + D * D - R * R) / (2 * s * D)
                        total += 2 * s * math.acos(max(-1.0, min(1.0, cosang)))
                return total

            inner, _ = integrate.quad(lambda s: (a - s) * covered_arc(s), 0.0, a,
                                      limit=200, epsabs=1e-13, epsrel=1e-11)
            return self.inside * inner + self.outside * (base - inner)
        c = as_torus_point(center)
        return _fine_quadrature(
            self, lambda p: np.maximum(0.0, a - np.sqrt(np.sum(reduce_coords(p - c) ** 2, -1)))
        )

    def jump_distance(self, points) -> np.ndarray:
        """Distance to the set where the density jumps (inf where it is smooth)."""
        pts = np.asarray(points, dtype=float)
        if self.kind == "uniform" or (self.kind == "uniform_disk" and self.inside == self.outside):
            return np.full(pts.shape[:-1], np.inf)
        if self.kind == "uniform_disk":
            rel = reduce_coords(pts - np.asarray(self.center))
            return np.abs(np.sqrt(np.sum(rel**2, axis=-1)) - self.radius)
        n = self.cells.shape[0]
        p = reduce_coords(pts) + 0.5
        frac = p * n - np.floor(p * n)
        return np.min(np.minimum(frac, 1.0 - frac), axis=-1) / n

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "uniform_disk":
            d.update(center=list(self.center), radius=self.radius)
        if self.kind in ("piecewise_cells",):
            d.update(level=int(round(math.log2(self.cells.shape[0]))))
        if self.clamp is not None:
            d["clamp"] = list(self.clamp)
        return d

    def __repr__(self):
        return f"DensitySpec({self.to_dict()})"


def _check_clamp(clamp):
    lo, hi = (float(c) for c in clamp)
    if not 0 < lo <= 1 <= hi:
        raise InvalidArgumentError("clamp must satisfy 0 < lo <= 1 <= hi")
    return lo, hi


def _normalize_cells(vals, clamp):
    vals = vals / np.mean(vals)
    if clamp is not None:
        lo, hi = _check_clamp(clamp)
        vals = np.clip(vals, lo, hi)
        vals = vals / np.mean(vals)
    return vals


def _aggregate_cells(cells, n):
    """Sum cell masses of a fine (m x m) piecewise-constant density into n x n blocks."""
    m = cells.shape[0]
    if m % n == 0:
        rep = m // n
        return cells.reshape(n, rep, n, rep).sum(axis=(1, 3)) / (m * m)
    if n % m == 0:
        rep = n // m
        return np.kron(cells, np.ones((rep, rep))) / (n * n)
    raise InvalidArgumentError("cube level and density cells must nest")


def _interval_ft(lo, hi, k):
    if k == 0:
        return hi - lo
    w = 2j * math.pi * k
    return (np.exp(w * hi) - np.exp(w * lo)) / w


def _periodic_lens(c1, R1, c2, R2):
    d = reduce_coords(np.asarray(c1, float) - np.asarray(c2, float))
    return float(sum(_lens(math.hypot(d[0] + i, d[1] + j), R1, R2) for i, j in _SHIFTS))


def _fine_quadrature(rho: DensitySpec, func, resolution=1024):
    grid = GridSpec(resolution)
    w = rho.cell_average_field(grid).values
    vals = func(grid.points()).astype(float)
    return float(np.sum(w * vals) * grid.cell_volume)


# -- mollifier ---------------------------------------------------------------


@dataclass(frozen=True)
class MollifierSpec:
    """Radial bump ``V(s) = 3 / (pi r^2) * (1 - s^2 / r^2)^2`` on ``[0, r]``."""

    support_radius: float

    def profile(self, s):
        r = self.support_radius
        q = np.clip(1.0 - (np.asarray(s, dtype=float) / r) ** 2, 0.0, None)
        out = 3.0 / (math.pi * r * r) * q * q
        return float(out) if np.ndim(out) == 0 else out

    __call__ = profile

    def derivative(self, s):
        r = self.support_radius
        s = np.asarray(s, dtype=float)
        q = np.clip(1.0 - (s / r) ** 2, 0.0, None)
        out = 3.0 / (math.pi * r * r) * 2 * q * (-2 * s / (r * r))
        return float(out) if np.ndim(out) == 0 else out

    def analytic_mass(self) -> float:
        """2 pi * integral of V(s) s ds, evaluated in closed form."""
        r = self.support_radius
        return 3.0 / (math.pi * r * r) * 2.0 * math.pi * (r * r / 6.0)

    def rescaled(self, radius: float) -> "MollifierSpec":
        """``r_eps^{-n} V(|x| / r_eps)`` of a unit-support profile is the same family."""
        if self.support_radius != 1.0:
            raise InvalidArgumentError("rescaling expects a unit-support profile")
        return MollifierSpec(radius)

    def fourier(self, kn):
        """Hankel transform: 48 J3(a) / a^3 with ``a = 2 pi |k| r``."""
        a = 2 * np.pi * np.asarray(kn, dtype=float) * self.support_radius
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(a > 1e-3, 48.0 * special.jv(3, a) / a**3, 1.0 - a * a / 16.0)
        return float(out) if np.ndim(out) == 0 else out


def default_mollifier(r: float = 1.0) -> MollifierSpec:
    if not 0.0 < r:
        raise InvalidArgumentError("mollifier radius must be positive")
    if r != 1.0 and not r < 0.5:
        raise InvalidArgumentError("mollifier radius must lie in (0, 1/2) (or equal 1 for the unit profile)")
    return MollifierSpec(float(r))


# -- dyadic partition and schedules -----------------------------------------


@dataclass(frozen=True)
class DyadicPartition:
    level: int

    @property
    def side(self) -> float:
        return 2.0 ** -self.level

    @property
    def count(self) -> int:
        return 4**self.level

    def lower_corners(self) -> np.ndarray:
        """Cube lower-left corners in flat order ``i = a * 2^k + b``."""
        n = 2**self.level
        a, b = np.divmod(np.arange(n * n), n)
        return np.stack([-0.5 + a * self.side, -0.5 + b * self.side], axis=1)

    def cube_of(self, points) -> np.ndarray:
        n = 2**self.level
        p = reduce_coords(np.asarray(points, dtype=float)) + 0.5
        ij = np.clip(np.floor(p * n).astype(int), 0, n - 1)
        return ij[..., 0] * n + ij[..., 1]

    def children(self, i: int) -> list[int]:
        n = 2**self.level
        a, b = divmod(i, n)
        return [(2 * a + da) * 2 * n + 2 * b + db for da in (0, 1) for db in (0, 1)]


def build_dyadic_partition(k: int) -> DyadicPartition:
    if k < 0:
        raise InvalidArgumentError("level must be nonnegative")
    return DyadicPartition(int(k))


@dataclass(frozen=True)
class ScheduleEntry:
    epsilon: float
    level: int
    count: int
    radius: float

    @property
    def spacing(self) -> float:
        return 2.0 ** -self.level


def default_entry(eps: float) -> ScheduleEntry:
    """``k = min(floor(log2(1/eps)), 6)``, ``N = floor(eps^-2)``, ``r = 0.05 N^{-1/2}``."""
    if not 0 < eps < 1:
        raise InvalidArgumentError("epsilon must lie in (0, 1)")
    k = min(int(math.floor(math.log2(1.0 / eps) + 1e-12)), 6)
    N = int(math.floor(eps**-2 + 1e-9))
    return ScheduleEntry(eps, k, N, 0.05 / math.sqrt(N))


def check_entry(e: ScheduleEntry, dim: int = 2) -> None:
    """Enforce ``N r^n < 0.1`` and ``r < 0.1 N^{-1/n} < 0.1 d``."""
    spacing = e.count ** (-1.0 / dim)
    if not e.count * e.radius**dim < 0.1:
        raise InvalidArgumentError(f"N r^n = {e.count * e.radius ** dim:.4g} is not < 0.1")
    if not e.radius < 0.1 * spacing:
        raise InvalidArgumentError("particle radius must be below 0.1 N^(-1/n)")
    if not 0.1 * spacing < 0.1 * e.spacing:
        raise InvalidArgumentError("N^(-1/n) must be below the cube side 2^-k")


def rate_schedule(epsilons, dim: int = 2) -> list[ScheduleEntry]:
    eps = [float(e) for e in epsilons]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise InvalidArgumentError("epsilons must be strictly decreasing")
    entries = [default_entry(e) for e in eps]
    for e in entries:
        check_entry(e, dim)
    return entries


# -- particles ---------------------------------------------------------------


@dataclass
class ParticleSet:
    centers: np.ndarray
    radius: float
    level: int
    counts: np.ndarray
    seed: int | None = None
    target: int | None = None
    cube_index: np.ndarray = field(default=None, repr=False)

    @property
    def total(self) -> int:
        return int(np.sum(self.counts))

    def min_pair_distance(self) -> float:
        if len(self.centers) < 2:
            return math.inf
        tree = cKDTree(np.mod(self.centers, 1.0), boxsize=1.0)
        d, _ = tree.query(np.mod(self.centers, 1.0), k=2)
        return float(np.min(d[:, 1]))

    def to_dict(self):
        return {
            "level": self.level,
            "radius": self.radius,
            "centers": self.centers.tolist(),
            "counts": [int(c) for c in np.asarray(self.counts).reshape(-1)],
            "seed": self.seed,
        }

    def to_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=1))
        return path

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["centers"], dtype=float).reshape(-1, 2), float(d["radius"]),
                   int(d["level"]), np.asarray(d["counts"], dtype=int), d.get("seed"))


def allocate(rho: DensitySpec, level: int, count: int) -> np.ndarray:
    """Per-cube counts ``floor(N mu(Q_i))`` in flat cube order."""
    masses = rho.cube_masses(level).reshape(-1)
    # a relative guard keeps exact products such as 100 * 0.25 from rounding down
    return np.floor(count * masses * (1.0 + 1e-12)).astype(int)


def place_particles(rho: DensitySpec, entry: ScheduleEntry, seed: int = 0) -> ParticleSet:
    """Jittered sub-lattice placement inside every dyadic cube."""
    k, r = entry.level, entry.radius
    counts = allocate(rho, k, entry.count)
    part = build_dyadic_partition(k)
    corners = part.lower_corners()
    s = part.side
    rng = np.random.default_rng(seed)
    centers, owner = [], []
    for i, ni in enumerate(counts):
        if ni == 0:
            continue
        m = math.ceil(math.sqrt(ni) - 1e-12)
        step = (s - 2 * r) / m
        if step <= 0 or 0.8 * step <= 2 * r:
            raise PackingError(
                f"cube {i}: {ni} particles of radius {r:.4g} do not fit in side {s:.4g}",
                cube_index=i,
            )
        grid = (np.arange(m) + 0.5) * step
        sites = np.stack(np.meshgrid(grid, grid, indexing="ij"), axis=-1).reshape(-1, 2)
        if ni < m * m:
            sites = sites[(np.arange(ni) * (m * m)) // ni]
        jitter = rng.uniform(-0.1 * step, 0.1 * step, size=(ni, 2))
        centers.append(corners[i] + r + sites + jitter)
        owner.append(np.full(ni, i))
    if centers:
        pts = reduce_coords(np.vstack(centers))
        own = np.concatenate(owner)
    else:
        pts, own = np.zeros((0, 2)), np.zeros(0, dtype=int)
    return ParticleSet(pts, r, k, counts, seed, entry.count, own)


# -- mollified empirical measure ---------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(4)


def mollified_density(ps: ParticleSet, V: MollifierSpec, grid: GridSpec) -> ScalarField:
    """Cell-averaged density of ``mu_eps = (1/N) sum V_eps(x - x_i) dx`` on ``grid``.

    Each cell value is the 4x4 Gauss-Legendre average of the bump over the
    cell, so the grid mass is a quadrature of the exact unit mass.
    """
    if grid.dimension != 2:
        raise InvalidArgumentError("mollified densities are 2-D")
    r = ps.radius
    h = grid.spacing
    if r < 4 * h:
        raise ResolutionError(f"particle radius {r:.4g} needs at least 4 cells (spacing {h:.4g})")
    Veps = V.rescaled(r) if V.support_radius == 1.0 else V
    if not math.isclose(Veps.support_radius, r):
        raise InvalidArgumentError("mollifier support does not match the particle radius")
    n = grid.resolution
    out = np.zeros(grid.shape)
    N = ps.total
    if N == 0:
        raise InvalidArgumentError("empty particle set")
    reach = int(math.ceil(r / h)) + 1
    off = np.arange(-reach, reach + 1)
    sub = 0.5 * h * _GL_NODES
    wsub = 0.25 * np.outer(_GL_WEIGHTS, _GL_WEIGHTS)
    base = np.rint((ps.centers + 0.5) / h - 0.5).astype(int)
    node = -0.5 + (base + 0.5) * h  # nearest node coordinates
    for p in range(len(ps.centers)):
        dx = node[p, 0] + off * h - ps.centers[p, 0]
        dy = node[p, 1] + off * h - ps.centers[p, 1]
        sx = dx[:, None] + sub[None, :]
        sy = dy[:, None] + sub[None, :]
        rr = np.sqrt(sx[:, None, :, None] ** 2 + sy[None, :, None, :] ** 2)
        cell = np.einsum("abij,ij->ab", Veps.profile(rr), wsub)
        ii = (base[p, 0] + off) % n
        jj = (base[p, 1] + off) % n
        np.add.at(out, (ii[:, None], jj[None, :]), cell)
    return ScalarField(grid, out / N)


def _polar_rule(radial=12, angular=24):
    """Quadrature on the unit disk for the weight V_1 (weights sum to 1)."""
    x, w = np.polynomial.legendre.leggauss(radial)
    s = 0.5 * (x + 1.0)
    ws = 0.5 * w * 2 * np.pi * s * MollifierSpec(1.0).profile(s)
    th = 2 * np.pi * (np.arange(angular) + 0.5) / angular
    pts = np.stack([np.outer(s, np.cos(th)), np.outer(s, np.sin(th))], axis=-1).reshape(-1, 2)
    wts = np.repeat(ws / angular, angular)
    return pts, wts / wts.sum()


def particle_integral(ps: ParticleSet, func, radial=12, angular=24) -> float:
    """Integral of ``func`` against mu_eps, by a polar rule inside every particle."""
    N = ps.total
    if N == 0:
        raise InvalidArgumentError("empty particle set")
    ref, wts = _polar_rule(radial, angular)
    total = 0.0
    chunk = max(1, 200000 // len(wts))
    for start in range(0, len(ps.centers), chunk):
        c = ps.centers[start:start + chunk]
        pts = c[:, None, :] + ps.radius * ref[None, :, :]
        total += float(np.sum(func(pts) * wts[None, :]))
    return total / N


# -- weak-* diagnostics ------------------------------------------------------

HAT_RADIUS = 0.2
HAT_CENTERS = (
    (-0.25, -0.25), (0.25, -0.25), (-0.25, 0.25), (0.25, 0.25),
    (0.0, 0.0), (-0.5, 0.0), (0.0, -0.5), (-0.5, -0.5),
)


def bl_dictionary_modes(kmax: int = 4):
    """Integer frequencies of the trigonometric dictionary (one per +-k pair)."""
    modes = []
    for a in range(-kmax, kmax + 1):
        for b in range(-kmax, kmax + 1):
            if (a, b) > (0, 0):
                modes.append((a, b))
    return modes


def bl_estimate(ps: ParticleSet, V: MollifierSpec, rho: DensitySpec) -> dict:
    """Lower estimate of the bounded-Lipschitz distance between mu_eps and mu."""
    Veps = V.rescaled(ps.radius) if V.support_radius == 1.0 else V
    c = ps.centers
    N = ps.total
    best, arg = 0.0, None
    for k in bl_dictionary_modes():
        kv = np.asarray(k, dtype=float)
        kn = float(np.hypot(*kv))
        emp = np.sum(np.exp(2j * np.pi * (c @ kv))) / N * Veps.fourier(kn)
        diff = (emp - rho.fourier(kv)) / (2 * np.pi * kn)
        for part, val in (("cos", diff.real), ("sin", diff.imag)):
            if abs(val) > best:
                best, arg = abs(val), f"{part}{k}"
    for center in HAT_CENTERS:
        cc = np.asarray(center)
        val = particle_integral(
            ps, lambda p: np.maximum(0.0, HAT_RADIUS - np.sqrt(np.sum(reduce_coords(p - cc) ** 2, -1)))
        ) - rho.hat_integral(center, HAT_RADIUS)
        if abs(val) > best:
            best, arg = abs(val), f"hat{center}"
    return {"bl_estimate": float(best), "argmax": arg}


def default_test_sets(level: int) -> list:
    return [
        WholeTorus(),
        BallSet((0.0, 0.0), 0.3),
        BallSet((0.3, -0.2), 0.15),
        StripeSet(0.0, 0.2, 1),
        StripeSet(0.25, 0.1, 2),
        CubeUnionSet(level, (0,)),
        CubeUnionSet(min(level, 2), tuple(range(0, 4 ** min(level, 2), 3))),
    ]


def weak_star_gap(ps: ParticleSet, V: MollifierSpec, rho: DensitySpec, tests=None) -> dict:
    """Per-set gaps mu_eps(Omega) - mu(Omega) plus the bounded-Lipschitz estimate."""
    tests = default_test_sets(ps.level) if tests is None else tests
    rows = []
    for t in tests:
        if isinstance(t, WholeTorus):
            emp = 1.0
        else:
            emp = particle_integral(ps, lambda p, t=t: t.indicator(p).astype(float))
        exact = rho.mass_in(t)
        rows.append({"set": t.describe(), "mu_eps": emp, "mu": exact, "gap": emp - exact})
    return {"sets": rows, **bl_estimate(ps, V, rho)}
