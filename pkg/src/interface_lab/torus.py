"""Periodic geometry and gridded scalar fields on the flat torus.

The torus is identified with the cube [-1/2, 1/2)^n. Grid nodes sit at cell
centres, ``x_j = -1/2 + (j + 1/2) h`` with ``h = 1 / resolution``, so the
periodic midpoint rule is just ``h^n * sum(values)``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError

_HEADER = struct.Struct("<IIQ")  # dimension, resolution, reserved


def reduce_coords(x):
    """Reduce coordinates (any shape) to the fundamental domain [-1/2, 1/2)."""
    x = np.asarray(x, dtype=float)
    r = x - np.floor(x + 0.5)
    # floor() can land one ulp on the wrong side of +-1/2
    r = np.where(r >= 0.5, r - 1.0, r)
    r = np.where(r < -0.5, r + 1.0, r)
    return r


def as_torus_point(coords) -> np.ndarray:
    """Return ``coords`` as a reduced 1-D torus point."""
    p = np.atleast_1d(np.asarray(coords, dtype=float))
    if p.ndim != 1:
        raise InvalidArgumentError("a torus point is a 1-D coordinate sequence")
    return reduce_coords(p)


def min_image(delta):
    """Shortest periodic representative of a displacement (last axis = coordinates)."""
    return reduce_coords(delta)


def wrap_distance(p, q) -> float | np.ndarray:
    """Periodic Euclidean distance between torus points.

    Broadcasts over leading axes; the last axis holds coordinates.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape[-1] != q.shape[-1]:
        raise InvalidArgumentError(
            f"dimension mismatch: {p.shape[-1]} vs {q.shape[-1]}"
        )
    d = np.sqrt(np.sum(min_image(p - q) ** 2, axis=-1))
    return float(d) if np.ndim(d) == 0 else d


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on the unit torus."""

    resolution: int
    dimension: int = 2

    def __post_init__(self):
        n = self.resolution
        if self.dimension not in (2, 3):
            raise InvalidArgumentError("dimension must be 2 or 3")
        if n < 16 or n & (n - 1):
            raise InvalidArgumentError("resolution must be a power of two >= 16")

    @property
    def spacing(self) -> float:
        return 1.0 / self.resolution

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.resolution,) * self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    def coords(self) -> np.ndarray:
        """Node coordinates along one axis."""
        return -0.5 + (np.arange(self.resolution) + 0.5) * self.spacing

    def mesh(self) -> tuple[np.ndarray, ...]:
        c = self.coords()
        return np.meshgrid(*([c] * self.dimension), indexing="ij")

    def points(self) -> np.ndarray:
        """All nodes as an array of shape ``shape + (dimension,)``."""
        return np.stack(self.mesh(), axis=-1)


class ScalarField:
    """Immutable real values on a :class:`GridSpec` (C order, periodic)."""

    __slots__ = ("spec", "_values")

    def __init__(self, spec: GridSpec, values):
        arr = np.array(values, dtype=float)
        if arr.size != spec.resolution**spec.dimension:
            raise InvalidArgumentError(
                f"expected {spec.resolution ** spec.dimension} values, got {arr.size}"
            )
        arr = arr.reshape(spec.shape)
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("field values must be finite")
        arr.flags.writeable = False
        self.spec = spec
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def flat(self) -> np.ndarray:
        return self._values.reshape(-1)

    @classmethod
    def constant(cls, spec: GridSpec, value: float) -> "ScalarField":
        return cls(spec, np.full(spec.shape, float(value)))

    @classmethod
    def from_function(cls, spec: GridSpec, func) -> "ScalarField":
        """Sample ``func(points)`` where points has shape ``spec.shape + (dim,)``."""
        return cls(spec, func(spec.points()))

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.spec, values)

    def __repr__(self):
        v = self._values
        return (
            f"ScalarField(resolution={self.spec.resolution}, dim={self.spec.dimension},"
            f" min={v.min():.4g}, max={v.max():.4g})"
        )


def field_integral(f: ScalarField) -> float:
    """Periodic midpoint-rule integral over the torus."""
    return float(f.spec.cell_volume * np.sum(f.values))


def signed_distance(pattern, p) -> float | np.ndarray:
    """Signed periodic distance from ``p`` to the boundary of ``pattern``.

    Negative inside the set A, positive on its complement. Works on a single
    point or on an array of points (last axis = coordinates).
    """
    return pattern.signed_distance(np.asarray(p, dtype=float))


# -- serialization ---------------------------------------------------------


def field_to_bytes(f: ScalarField) -> bytes:
    header = _HEADER.pack(f.spec.dimension, f.spec.resolution, 0)
    return header + np.ascontiguousarray(f.values, dtype="<f8").tobytes()


def field_from_bytes(data: bytes) -> ScalarField:
    if len(data) < _HEADER.size:
        raise InvalidArgumentError("truncated field header")
    dim, res, _ = _HEADER.unpack_from(data)
    spec = GridSpec(resolution=res, dimension=dim)
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    return ScalarField(spec, body)


def save_field(f: ScalarField, path) -> Path:
    path = Path(path)
    path.write_bytes(field_to_bytes(f))
    return path


def load_field(path) -> ScalarField:
    return field_from_bytes(Path(path).read_bytes())


def pgm_bytes(f: ScalarField) -> bytes:
    """Binary graymap (P5) with values mapped affinely from [-1, 1] to [0, 255].

    Rows of the image run along the second axis so that the picture has x1
    horizontal and x2 pointing up.
    """
    if f.spec.dimension != 2:
        raise InvalidArgumentError("PGM export needs a 2-D field")
    gray = np.clip(np.rint((f.values + 1.0) * 127.5), 0, 255).astype(np.uint8)
    img = gray.T[::-1]
    n = f.spec.resolution
    return f"P5\n{n} {n}\n255\n".encode("ascii") + img.tobytes()


def save_pgm(f: ScalarField, path) -> Path:
    path = Path(path)
    path.write_bytes(pgm_bytes(f))
    return path


def read_pgm(path) -> np.ndarray:
    """Read back a P5 graymap written by :func:`save_pgm` (image orientation)."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise InvalidArgumentError("not a binary PGM file")
    w, h = (int(t) for t in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)
