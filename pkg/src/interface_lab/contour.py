"""Periodic marching squares and closed interface chains.

Chains are oriented so that the super-level set ``{f > level}`` lies on the
left of the direction of travel. Saddle cells are resolved by comparing the
cell-centre average with the level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NoInterfaceError
from .torus import ScalarField, min_image, reduce_coords

# local cell geometry: corners 0=(0,0) 1=(1,0) 2=(1,1) 3=(0,1)
_CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
# edges 0=bottom(0-1) 1=right(1-2) 2=top(3-2) 3=left(0-3)
_EDGE_CORNERS = ((0, 1), (1, 2), (3, 2), (0, 3))
_EDGE_MID = np.array([[0.5, 0.0], [1.0, 0.5], [0.5, 1.0], [0.0, 0.5]])


@dataclass(frozen=True)
class InterfaceChain:
    """Closed polyline on the torus.

    ``vertices`` are reduced torus points; consecutive vertices (including the
    last-to-first closing segment) are joined by their shortest periodic
    displacement. ``wrap_class`` counts how many times the unrolled chain
    winds around each axis.
    """

    vertices: np.ndarray
    wrap_class: tuple[int, ...]

    def __len__(self):
        return len(self.vertices)

    @property
    def contractible(self) -> bool:
        return all(w == 0 for w in self.wrap_class)

    def unrolled(self) -> np.ndarray:
        """Vertices lifted to R^n by accumulating periodic displacements."""
        v = self.vertices
        steps = min_image(np.diff(v, axis=0))
        return np.vstack([v[:1], v[0] + np.cumsum(steps, axis=0)])

    def segment_lengths(self) -> np.ndarray:
        v = self.vertices
        d = min_image(np.roll(v, -1, axis=0) - v)
        return np.sqrt(np.sum(d * d, axis=1))

    def subsample(self, step: int) -> "InterfaceChain":
        return InterfaceChain(self.vertices[::step].copy(), self.wrap_class)


def chain_from_unrolled(points) -> InterfaceChain:
    """Build a chain from an unrolled (lifted) vertex sequence.

    The closing displacement from the last point back to the first is taken
    as-is, which fixes the wrap class of torus-wrapping curves.
    """
    pts = np.asarray(points, dtype=float)
    total = (pts[-1] - pts[0]) + min_image(pts[0] - pts[-1])
    winding = np.rint(total).astype(int)
    return InterfaceChain(reduce_coords(pts), tuple(int(w) for w in winding))


def chain_length(c: InterfaceChain) -> float:
    """Total periodic length including the closing segment."""
    if len(c.vertices) < 2:
        raise InvalidArgumentError("a chain needs at least two vertices")
    return float(np.sum(c.segment_lengths()))


def _segment_table():
    """Oriented segment table indexed by (case, saddle_flag).

    ``case = sum(above[k] << k)`` over the four corners; ``saddle_flag`` is 1
    when the centre average is above the level. Each entry is a list of
    ``(from_edge, to_edge)`` pairs with the above-level side on the left.
    """
    table = {}
    for case in range(16):
        above = [(case >> k) & 1 for k in range(4)]
        crossed = [e for e, (a, b) in enumerate(_EDGE_CORNERS) if above[a] != above[b]]
        for flag in (0, 1):
            if not crossed:
                table[case, flag] = []
                continue
            if len(crossed) == 2:
                groups = [(tuple(crossed), [k for k in range(4) if above[k]])]
            else:
                # saddle: isolate the corners whose state differs from the centre
                iso_state = 0 if flag else 1
                groups = []
                for k in range(4):
                    if above[k] != iso_state:
                        continue
                    es = tuple(e for e in range(4) if k in _EDGE_CORNERS[e])
                    groups.append((es, [k]))
            segs = []
            for (ea, eb), corners in groups:
                p, q = _EDGE_MID[ea], _EDGE_MID[eb]
                ref = corners[0]
                want_left = bool(above[ref])
                g = _CORNERS[ref] - p
                t = q - p
                left = t[0] * g[1] - t[1] * g[0] > 0
                segs.append((ea, eb) if left == want_left else (eb, ea))
            table[case, flag] = segs
    return table


_TABLE = _segment_table()


def extract_interface(f: ScalarField, level: float = 0.0) -> list[InterfaceChain]:
    """Extract the ``level`` contour of a 2-D periodic field as closed chains."""
    if f.spec.dimension != 2:
        raise InvalidArgumentError("interface extraction is implemented for 2-D fields")
    v = f.values
    lo, hi = float(v.min()), float(v.max())
    if not (lo <= level < hi):
        raise NoInterfaceError(
            f"level {level} outside the open range of the field [{lo}, {hi}]"
        )
    n = f.spec.resolution
    h = f.spec.spacing
    above = v > level

    # crossing positions on horizontal edges (i,j)-(i+1,j) and vertical (i,j)-(i,j+1)
    vx = np.roll(v, -1, axis=0)
    vy = np.roll(v, -1, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = np.where(above != (vx > level), (level - v) / (vx - v), np.nan)
        ty = np.where(above != (vy > level), (level - v) / (vy - v), np.nan)

    a = above.astype(np.int64)
    a1 = np.roll(a, -1, axis=0)
    a2 = np.roll(a1, -1, axis=1)
    a3 = np.roll(a, -1, axis=1)
    case = a + 2 * a1 + 4 * a2 + 8 * a3
    centre = 0.25 * (v + vx + vy + np.roll(vx, -1, axis=1))
    flag = (centre > level).astype(np.int64)

    # edge ids: horizontal (i,j) -> i*n+j ; vertical (i,j) -> n*n + i*n+j
    idx = np.arange(n * n).reshape(n, n)
    ip1 = np.roll(idx, -1, axis=0)
    jp1 = np.roll(idx, -1, axis=1)
    edge_ids = np.stack([idx, n * n + ip1, jp1, n * n + idx], axis=-1)

    nxt = np.full(2 * n * n, -1, dtype=np.int64)
    active = (case != 0) & (case != 15)
    cells = np.nonzero(active)
    cc, ff = case[cells], flag[cells]
    eids = edge_ids[cells]
    for (c, fl), segs in _TABLE.items():
        if not segs:
            continue
        sel = (cc == c) & (ff == fl)
        if not np.any(sel):
            continue
        rows = eids[sel]
        for ea, eb in segs:
            nxt[rows[:, ea]] = rows[:, eb]

    # vertex coordinates for every crossed edge
    coords = np.zeros((2 * n * n, 2))
    base = -0.5 + 0.5 * h
    gi, gj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    hx = np.nan_to_num(tx).reshape(-1)
    hy = np.nan_to_num(ty).reshape(-1)
    coords[: n * n, 0] = base + (gi.reshape(-1) + hx) * h
    coords[: n * n, 1] = base + gj.reshape(-1) * h
    coords[n * n :, 0] = base + gi.reshape(-1) * h
    coords[n * n :, 1] = base + (gj.reshape(-1) + hy) * h

    chains = []
    visited = np.zeros(2 * n * n, dtype=bool)
    starts = np.nonzero(nxt >= 0)[0]
    for s in starts:
        if visited[s]:
            continue
        loop = []
        e = s
        while not visited[e]:
            visited[e] = True
            loop.append(e)
            e = nxt[e]
            if e < 0:
                raise RuntimeError("broken contour graph")
        pts = coords[loop]
        steps = min_image(np.diff(np.vstack([pts, pts[:1]]), axis=0))
        seglen = np.sqrt(np.sum(steps**2, axis=1))
        keep = seglen > 1e-12 * h
        if not np.all(keep):
            # drop vertices that coincide with their successor
            pts = pts[keep]
            if len(pts) < 2:
                continue
            steps = min_image(np.diff(np.vstack([pts, pts[:1]]), axis=0))
        winding = np.rint(steps.sum(axis=0)).astype(int)
        chains.append(
            InterfaceChain(reduce_coords(pts), tuple(int(w) for w in winding))
        )
    if not chains:
        raise NoInterfaceError("no interface found")
    return chains


def total_length(chains) -> float:
    return float(sum(chain_length(c) for c in chains))
