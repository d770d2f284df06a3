"""Shared geometric primitives.

Projections, interval unions, polygon areas, swept-region measurement and
piecewise rigid motions in the plane.  Everything is plain floating point;
raster-based quantities carry an explicit error bound so that downstream
certificates stay one-sided.
"""

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


class GeometryError(ValueError):
    """Raised on invalid geometric input."""


# ---------------------------------------------------------------------------
# intervals


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] on the line."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise GeometryError("interval endpoints must be finite")
        if self.lo > self.hi:
            raise GeometryError(f"interval with lo > hi: [{self.lo}, {self.hi}]")

    @property
    def length(self):
        return self.hi - self.lo

    def intersect(self, other):
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        return Interval(lo, hi) if lo <= hi else None


def _as_lohi(intervals):
    """Normalize an interval collection to two float arrays (lo, hi)."""
    if isinstance(intervals, np.ndarray):
        arr = np.asarray(intervals, dtype=float)
        if arr.size == 0:
            return np.empty(0), np.empty(0)
        return arr[:, 0], arr[:, 1]
    lo = np.array([iv.lo for iv in intervals], dtype=float)
    hi = np.array([iv.hi for iv in intervals], dtype=float)
    return lo, hi


def union_measure(intervals):
    """Lebesgue measure of a union of intervals (sort + sweep, exact up to
    floating rounding).  Accepts a list of Interval or an (n, 2) array."""
    lo, hi = _as_lohi(intervals)
    if lo.size == 0:
        return 0.0
    order = np.argsort(lo, kind="stable")
    lo, hi = lo[order], hi[order]
    cmax = np.maximum.accumulate(hi)
    prev = np.concatenate(([-np.inf], cmax[:-1]))
    return float(np.clip(hi - np.maximum(lo, prev), 0.0, None).sum())


def union_measure_rows(lo, hi):
    """Row-wise union measure: lo, hi of shape (rows, k) -> (rows,).

    Vectorized variant of :func:`union_measure` used for slab slice
    certification where many columns are processed at once.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.size == 0:
        return np.zeros(lo.shape[0])
    order = np.argsort(lo, axis=1, kind="stable")
    lo = np.take_along_axis(lo, order, axis=1)
    hi = np.take_along_axis(hi, order, axis=1)
    cmax = np.maximum.accumulate(hi, axis=1)
    prev = np.concatenate(
        [np.full((lo.shape[0], 1), -np.inf), cmax[:, :-1]], axis=1
    )
    return np.clip(hi - np.maximum(lo, prev), 0.0, None).sum(axis=1)


def merge_intervals(intervals):
    """Canonical IntervalSet: pairwise disjoint Interval list sorted by lo."""
    lo, hi = _as_lohi(intervals)
    if lo.size == 0:
        return []
    order = np.argsort(lo, kind="stable")
    lo, hi = lo[order], hi[order]
    out = []
    cur_lo, cur_hi = lo[0], hi[0]
    for l, h in zip(lo[1:], hi[1:]):
        if l <= cur_hi:
            cur_hi = max(cur_hi, h)
        else:
            out.append(Interval(float(cur_lo), float(cur_hi)))
            cur_lo, cur_hi = l, h
    out.append(Interval(float(cur_lo), float(cur_hi)))
    return out


# ---------------------------------------------------------------------------
# planar shapes


@dataclass(frozen=True)
class AxisRect:
    """Axis-aligned rectangle [a0,a1] x [b0,b1] in the (a, b) plane."""

    a0: float
    a1: float
    b0: float
    b1: float

    def __post_init__(self):
        if not (self.a0 < self.a1 and self.b0 < self.b1):
            raise GeometryError(
                f"degenerate AxisRect [{self.a0},{self.a1}]x[{self.b0},{self.b1}]"
            )

    @property
    def width(self):
        return self.a1 - self.a0

    @property
    def height(self):
        return self.b1 - self.b0

    @property
    def center(self):
        return np.array([0.5 * (self.a0 + self.a1), 0.5 * (self.b0 + self.b1)])

    def vertices(self):
        return np.array(
            [
                [self.a0, self.b0],
                [self.a1, self.b0],
                [self.a1, self.b1],
                [self.a0, self.b1],
            ]
        )

    def as_parallelogram(self):
        return Parallelogram(
            anchor=(self.a0, self.b0),
            edge_u=(self.a1 - self.a0, 0.0),
            edge_v=(0.0, self.b1 - self.b0),
        )


class Parallelogram:
    """Parallelogram anchor + {0, u, u+v, v}.

    Degenerate (zero area) parallelograms are rejected at construction.
    """

    __slots__ = ("anchor", "edge_u", "edge_v")

    def __init__(self, anchor, edge_u, edge_v):
        self.anchor = np.asarray(anchor, dtype=float)
        self.edge_u = np.asarray(edge_u, dtype=float)
        self.edge_v = np.asarray(edge_v, dtype=float)
        if self._det() == 0.0:
            raise GeometryError("degenerate parallelogram (edges linearly dependent)")

    def _det(self):
        u, v = self.edge_u, self.edge_v
        return float(u[0] * v[1] - u[1] * v[0])

    @property
    def area(self):
        return abs(self._det())

    def vertices(self):
        a, u, v = self.anchor, self.edge_u, self.edge_v
        return np.array([a, a + u, a + u + v, a + v])

    def contains(self, point, tol=1e-12):
        """Barycentric containment test with tolerance."""
        d = np.asarray(point, dtype=float) - self.anchor
        det = self._det()
        u, v = self.edge_u, self.edge_v
        s = float(d[0] * v[1] - d[1] * v[0]) / det
        t = float(u[0] * d[1] - u[1] * d[0]) / det
        return -tol <= s <= 1 + tol and -tol <= t <= 1 + tol

    def contains_parallelogram(self, other, tol=1e-9):
        return all(self.contains(p, tol) for p in other.vertices())

    def __repr__(self):
        return (
            f"Parallelogram(anchor={tuple(self.anchor)}, "
            f"edge_u={tuple(self.edge_u)}, edge_v={tuple(self.edge_v)})"
        )


def _shape_vertices(shape):
    if isinstance(shape, AxisRect):
        return shape.vertices()
    if isinstance(shape, Parallelogram):
        return shape.vertices()
    pts = np.asarray(shape, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise GeometryError("empty input")
    return pts


def project_set(v, shape):
    """Orthogonal projection p_v of a convex shape: the interval of dot
    products {x . v}.  For convex input the range is attained at vertices."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise GeometryError("projection direction must be finite")
    pts = _shape_vertices(shape)
    dots = pts @ v
    return Interval(float(dots.min()), float(dots.max()))


def _proper_intersection(p1, p2, p3, p4):
    """True if open segments (p1,p2) and (p3,p4) cross at an interior point."""
    d1 = p2 - p1
    d2 = p4 - p3
    denom = float(d1[0] * d2[1] - d1[1] * d2[0])
    if denom == 0.0:
        return False
    w = p3 - p1
    t = float(w[0] * d2[1] - w[1] * d2[0]) / denom
    u = float(w[0] * d1[1] - w[1] * d1[0]) / denom
    eps = 1e-12
    return eps < t < 1 - eps and eps < u < 1 - eps


def polygon_area(vertices):
    """Unsigned shoelace area of a simple polygon.

    Self-intersecting input raises GeometryError; collinear (degenerate)
    input returns 0.
    """
    pts = np.asarray(vertices, dtype=float)
    n = pts.shape[0]
    if n < 3:
        return 0.0
    for i in range(n):
        a1, a2 = pts[i], pts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b1, b2 = pts[j], pts[(j + 1) % n]
            if _proper_intersection(a1, a2, b1, b2):
                raise GeometryError("self-intersecting polygon")
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


# ---------------------------------------------------------------------------
# rigid motions


def unit(theta):
    return np.array([np.cos(theta), np.sin(theta)])


def rot(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Pose:
    """Pose of a planar figure: world position of its anchor + orientation."""

    point: tuple
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "point", (float(self.point[0]), float(self.point[1])))

    @property
    def p(self):
        return np.asarray(self.point)

    def world(self, s, h):
        """Material coordinates (s along the reference side, h across) to
        world coordinates."""
        u = unit(self.angle)
        n = np.array([-u[1], u[0]])
        return self.p + s * u + h * n

    def close_to(self, other, tol=1e-9):
        return (
            abs(self.point[0] - other.point[0]) <= tol
            and abs(self.point[1] - other.point[1]) <= tol
            and abs(self.angle - other.angle) <= tol
        )


@dataclass(frozen=True)
class Translate:
    """Translation by length along a fixed unit direction."""

    start: Pose
    direction: tuple
    length: float

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        nrm = float(np.hypot(d[0], d[1]))
        if nrm == 0.0:
            raise GeometryError("translation direction must be nonzero")
        object.__setattr__(self, "direction", (float(d[0] / nrm), float(d[1] / nrm)))

    @property
    def end(self):
        d = np.asarray(self.direction)
        p = self.start.p + self.length * d
        return Pose((p[0], p[1]), self.start.angle)


@dataclass(frozen=True)
class Rotate:
    """Rotation about a fixed world point by a signed angle."""

    start: Pose
    center: tuple
    angle: float

    @property
    def end(self):
        c = np.asarray(self.center, dtype=float)
        p = c + rot(self.angle) @ (self.start.p - c)
        return Pose((p[0], p[1]), self.start.angle + self.angle)


@dataclass
class MotionPath:
    """Piecewise rigid motion: consecutive pieces must chain continuously."""

    pieces: list = field(default_factory=list)

    @property
    def start(self):
        return self.pieces[0].start if self.pieces else None

    @property
    def end(self):
        return self.pieces[-1].end if self.pieces else None

    @property
    def net_rotation(self):
        if not self.pieces:
            return 0.0
        return self.end.angle - self.start.angle

    def __len__(self):
        return len(self.pieces)

    def extend(self, other):
        self.pieces.extend(other.pieces)
        return self


@dataclass(frozen=True)
class MotionReport:
    ok: bool
    violation_index: int = -1
    message: str = ""


def validate_motion(path, tol=1e-9):
    """Check pose continuity at every junction; report the first violation."""
    for k in range(len(path.pieces) - 1):
        a, b = path.pieces[k].end, path.pieces[k + 1].start
        if not a.close_to(b, tol):
            return MotionReport(
                False, k + 1, f"pose mismatch at junction {k + 1}: {a} vs {b}"
            )
    for k, piece in enumerate(path.pieces):
        vals = [piece.start.point[0], piece.start.point[1], piece.start.angle]
        if isinstance(piece, Translate):
            vals.append(piece.length)
        else:
            vals += [piece.center[0], piece.center[1], piece.angle]
        if not all(np.isfinite(v) for v in vals):
            return MotionReport(False, k, f"non-finite parameters in piece {k}")
    return MotionReport(True)


# ---------------------------------------------------------------------------
# swept-region measurement (raster)


class CellSet:
    """Sparse set of covered raster cells keyed by 64-bit integers.

    Cells are unit/resolution squares on a global grid, so far-apart
    regions (e.g. sweeps at the end of a long translation) cost only what
    they cover.
    """

    _OFF = 1 << 30

    def __init__(self, resolution):
        if resolution is None or resolution <= 0:
            raise GeometryError("resolution must be positive")
        self.resolution = float(resolution)
        self.cell = 1.0 / float(resolution)
        self._chunks = []
        self._pending = 0

    def add_keys(self, ix, iz):
        if ix.size == 0:
            return
        keys = (ix.astype(np.int64) + self._OFF) << 32 | (
            iz.astype(np.int64) + self._OFF
        )
        self._chunks.append(keys)
        self._pending += keys.size
        if self._pending > 20_000_000:
            self.compact()

    def compact(self):
        if len(self._chunks) > 1 or self._pending > 0:
            merged = np.unique(np.concatenate(self._chunks)) if self._chunks else np.empty(0, np.int64)
            self._chunks = [merged]
            self._pending = 0

    def keys(self):
        self.compact()
        return self._chunks[0] if self._chunks else np.empty(0, np.int64)

    def count(self):
        return int(self.keys().size)

    def area(self):
        return self.count() * self.cell * self.cell

    def cell_centers(self):
        keys = self.keys()
        ix = (keys >> 32) - self._OFF
        iz = (keys & 0xFFFFFFFF) - self._OFF
        return (ix + 0.5) * self.cell, (iz + 0.5) * self.cell

    def add_triangle(self, p0, p1, p2):
        """Mark cells whose center lies inside triangle (p0, p1, p2).

        Column scanline: per x-column the triangle's z-section is one
        interval, so the cost is proportional to the number of covered
        cells rather than the bounding box (thin diagonal slivers stay
        cheap).
        """
        pts = np.array([p0, p1, p2], dtype=float)
        u, v = pts[1] - pts[0], pts[2] - pts[0]
        if u[0] * v[1] - u[1] * v[0] == 0.0:
            return
        cell = self.cell
        i0 = int(np.floor(pts[:, 0].min() / cell))
        i1 = int(np.floor(pts[:, 0].max() / cell))
        if i1 - i0 + 1 > 50_000_000:
            raise GeometryError("raster extent too large; refine the motion")
        xs = (np.arange(i0, i1 + 1) + 0.5) * cell
        zmin = np.full(xs.shape, np.inf)
        zmax = np.full(xs.shape, -np.inf)
        for k in range(3):
            a, b = pts[k], pts[(k + 1) % 3]
            if a[0] > b[0]:
                a, b = b, a
            if b[0] - a[0] <= 0.0:
                continue
            sel = (xs >= a[0]) & (xs <= b[0])
            if not sel.any():
                continue
            z = a[1] + (xs[sel] - a[0]) * (b[1] - a[1]) / (b[0] - a[0])
            zmin[sel] = np.minimum(zmin[sel], z)
            zmax[sel] = np.maximum(zmax[sel], z)
        # cell centers strictly inside the column interval
        finite = np.isfinite(zmin)
        zmin[~finite] = 0.0
        zmax[~finite] = -1.0
        jlo = np.ceil(zmin / cell - 0.5).astype(np.int64)
        jhi = np.floor(zmax / cell - 0.5).astype(np.int64)
        counts = np.clip(jhi - jlo + 1, 0, None)
        valid = finite & (counts > 0)
        counts = counts[valid]
        if counts.size == 0:
            return
        total = int(counts.sum())
        if total > 200_000_000:
            raise GeometryError("raster region too large; refine the motion")
        ii = np.repeat(np.arange(i0, i1 + 1)[valid], counts)
        starts = jlo[valid]
        offs = np.arange(total) - np.repeat(
            np.cumsum(counts) - counts, counts
        )
        jj = np.repeat(starts, counts) + offs
        self.add_keys(ii, jj)

    def add_quad(self, p0, q0, p1, q1):
        """Cover the region between segment (p0,q0) and segment (p1,q1)."""
        self.add_triangle(p0, q0, q1)
        self.add_triangle(p0, q1, p1)


def swept_region_area(segment_poses, resolution, return_cells=False):
    """Area of the union over time of a moving segment.

    segment_poses is a time-sampled list of (endpoint, endpoint) pairs with
    consecutive poses closer than one raster cell.  Each inter-sample
    quadrilateral is rasterized into a sparse bitmask (a cell counts when
    its center is covered) and cells are counted.

    Returns (area, error_bound); the bound is perimeter-based
    (~ 4 * perimeter * cell) so certificates can be made conservative.
    """
    if resolution is None or resolution <= 0:
        raise GeometryError("resolution must be positive")
    if resolution < 256:
        raise GeometryError("resolution must be at least 256 cells per unit")
    poses = [
        (np.asarray(p, dtype=float), np.asarray(q, dtype=float))
        for p, q in segment_poses
    ]
    if len(poses) == 0:
        raise GeometryError("empty input")
    cells = CellSet(resolution)
    travel = 0.0
    seg_len = float(np.linalg.norm(poses[0][1] - poses[0][0]))
    for (p0, q0), (p1, q1) in zip(poses[:-1], poses[1:]):
        travel += float(np.linalg.norm(p1 - p0) + np.linalg.norm(q1 - q0))
        cells.add_quad(p0, q0, p1, q1)
    area = cells.area()
    perimeter_est = travel + 2.0 * seg_len
    err = 4.0 * (perimeter_est + 4.0 * cells.cell) * cells.cell
    if return_cells:
        return area, err, cells
    return area, err


def rotation_sweep_area(p, q, center, angle):
    """First-order exact area swept by segment (p, q) rotating about center.

    The swept set of a measure-zero segment over a small angle gamma has
    area gamma * integral of n(rho) * rho d rho, where n(rho) is the number
    of intersections of the segment with the circle of radius rho.  Returns
    (area, correction) where correction bounds the omitted O(gamma^2)
    endpoint caps (and any self-overlap for large angles).
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    c = np.asarray(center, dtype=float)
    gamma = abs(float(angle))
    d = q - p
    L2 = float(d @ d)
    if L2 == 0.0:
        return 0.0, 0.0
    t = float(np.clip((c - p) @ d / L2, 0.0, 1.0))
    foot = p + t * d
    r_foot = float(np.linalg.norm(foot - c))
    r1 = float(np.linalg.norm(p - c))
    r2 = float(np.linalg.norm(q - c))
    r_lo, r_hi = min(r1, r2), max(r1, r2)
    if 0.0 < t < 1.0:
        # circle radii in (r_foot, r_lo) meet the segment twice
        area = gamma * ((r_lo**2 - r_foot**2) + 0.5 * (r_hi**2 - r_lo**2))
    else:
        area = gamma * 0.5 * (r_hi**2 - r_lo**2)
    correction = 0.5 * gamma**2 * r_hi**2
    return area, correction


def sample_rotation(p, q, center, angle, max_step):
    """Time samples of segment (p,q) rotating about center; consecutive
    endpoint movement stays below max_step."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    c = np.asarray(center, dtype=float)
    r = max(np.linalg.norm(p - c), np.linalg.norm(q - c))
    n = max(2, int(np.ceil(abs(angle) * r / max_step)) + 1)
    out = []
    for a in np.linspace(0.0, angle, n):
        R = rot(a)
        out.append((c + R @ (p - c), c + R @ (q - c)))
    return out
