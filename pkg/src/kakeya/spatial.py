"""Cylinderlike solids, swept volumes and the two-needle sphere planner.

A compact solid is cylinderlike (from the x-direction) when almost every
slice {x=t} is covered by a bounded number of vertical lines; driving its
(y, z)-shadow with a small-sweep square motion then sweeps a volume of at
most n * eps per unit of x-extent, by Fubini.  The sphere planner rotates
a ball about two embedded needles to reach any prescribed needle
configuration in O(1/t) steps.
"""

import json
from dataclasses import dataclass

import numpy as np

from .geometry import Interval, Translate, rotation_sweep_area


class SpatialError(ValueError):
    pass


# ---------------------------------------------------------------------------
# sliced solids


@dataclass
class SlicedSolid:
    """Uniform x-slices, each a list of vertical columns in the (y, z)
    plane.

    columns[i] is a (k_i, 3) array of (y, z_lo, z_hi): slice i is covered
    by the k_i vertical segments {y} x [z_lo, z_hi].
    """

    x_range: Interval
    columns: list

    def __post_init__(self):
        self.columns = [np.asarray(c, dtype=float).reshape(-1, 3)
                        for c in self.columns]
        if not self.columns:
            raise SpatialError("solid needs at least one slice")

    @property
    def n_slices(self):
        return len(self.columns)

    @property
    def dx(self):
        return self.x_range.length / self.n_slices

    def slice_x(self, i):
        return self.x_range.lo + (i + 0.5) * self.dx


def cylinder_surface(r=0.25, center=(0.5, 0.5), z_range=(0.0, 1.0),
                     n_slices=64):
    """Curved surface of a cylinder with axis along z: every x-slice is at
    most two points in y, so the surface is cylinderlike with n = 2."""
    cx, cy = center
    cols = []
    for i in range(n_slices):
        x = cx - r + (i + 0.5) * (2.0 * r / n_slices)
        d2 = r * r - (x - cx) ** 2
        if d2 <= 0:
            cols.append(np.empty((0, 3)))
            continue
        dy = np.sqrt(d2)
        cols.append(
            np.array(
                [
                    [cy - dy, z_range[0], z_range[1]],
                    [cy + dy, z_range[0], z_range[1]],
                ]
            )
        )
    return SlicedSolid(Interval(cx - r, cx + r), cols)


def solid_box(x_range=(0.0, 1.0), y_range=(0.0, 1.0), z_range=(0.0, 1.0),
              n_slices=32, y_columns=64):
    """Filled box discretized into y-columns (not cylinderlike for small n)."""
    ys = np.linspace(y_range[0], y_range[1], y_columns)
    col = np.column_stack([ys, np.full(y_columns, z_range[0]),
                           np.full(y_columns, z_range[1])])
    return SlicedSolid(Interval(*x_range), [col.copy() for _ in range(n_slices)])


def vertical_planes(y_offsets, x_range=(0.0, 1.0), n_slices=32,
                    z_range=(0.0, 1.0)):
    """Union of vertical plane pieces {y = y0} clipped to a box: every
    x-slice is covered by one vertical line per plane, the canonical
    finitely-many-planes cylinderlike example."""
    rows = np.array([[y0, z_range[0], z_range[1]] for y0 in y_offsets])
    return SlicedSolid(Interval(*x_range),
                       [rows.copy() for _ in range(n_slices)])


def slice_cover_profile(K, snap=1e-9):
    """Per slice, the number of vertical lines needed: distinct y values
    (snapped) among the slice's columns."""
    out = []
    for i, cols in enumerate(K.columns):
        if cols.shape[0] == 0:
            out.append((K.slice_x(i), 0))
            continue
        ys = np.unique(np.round(cols[:, 0] / max(snap, 1e-300)))
        out.append((K.slice_x(i), int(ys.size)))
    return out


def is_cylinderlike(K, n, tol=None):
    """True iff the x-measure of slices needing more than n vertical lines
    is below tol (default: one slice spacing)."""
    if tol is None:
        tol = K.dx
    bad = sum(1 for _, cnt in slice_cover_profile(K) if cnt > n)
    exception_measure = bad * K.dx
    return exception_measure <= tol + 1e-12, exception_measure


# ---------------------------------------------------------------------------
# swept volume


def _column_sweep(sched, y, z_lo, z_hi):
    """Sweep of the partial segment [z_lo, z_hi] at material height y under
    the planar schedule (per-piece bound; free translations are zero)."""
    total = 0.0
    for piece, kind in zip(sched.path.pieces, sched.kinds):
        if isinstance(piece, Translate):
            continue
        p = piece.start.world(z_lo, y)
        q = piece.start.world(z_hi, y)
        area, corr = rotation_sweep_area(p, q, piece.center, piece.angle)
        total += area + corr
    return total


def sweep_volume(K, sched, resolution=None):
    """Volume swept when the square motion drives every slice of the solid.

    The motion keeps x constant; slice i contributes (union of its column
    sweeps) * dx, summed per Fubini.  Points (y, z) ride the square as
    material coordinates (s, h) = (z, y), so each column is a sub-segment
    of an initially-vertical square segment.  Returns (volume, per-slice
    areas)."""
    areas = []
    for cols in K.columns:
        if np.any((cols[:, 0] < -1e-9) | (cols[:, 0] > 1 + 1e-9)
                  | (cols[:, 1] < -1e-9) | (cols[:, 2] > 1 + 1e-9)):
            raise SpatialError(
                "solid's (y, z) shadow does not fit the moved unit square"
            )
        area = 0.0
        for y, z_lo, z_hi in cols:
            if z_hi > z_lo:
                area += _column_sweep(sched, y, z_lo, z_hi)
        areas.append(area)
    volume = float(sum(areas) * K.dx)
    return volume, areas


def write_volume_csv(K, areas, path):
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "area"])
        for i, a in enumerate(areas):
            w.writerow([f"{K.slice_x(i):.17g}", f"{a:.17g}"])


# ---------------------------------------------------------------------------
# planar line counts


def line_count_profile(points, direction, resolution=256):
    """Max over lines perpendicular to the given direction of the number of
    connected occupied runs of the rasterized point set."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise SpatialError("empty point set")
    c, s = np.cos(direction), np.sin(direction)
    along = pts[:, 0] * c + pts[:, 1] * s
    perp = -pts[:, 0] * s + pts[:, 1] * c
    ia = np.floor(along * resolution).astype(np.int64)
    ip = np.floor(perp * resolution).astype(np.int64)
    best = 0
    for a in np.unique(ia):
        cols = np.unique(ip[ia == a])
        runs = 1 + int(np.count_nonzero(np.diff(cols) > 1))
        best = max(best, runs)
    return best


# ---------------------------------------------------------------------------
# sphere two-needle planner


@dataclass(frozen=True)
class SphereConfig:
    """Needles n1, n2 stuck in the unit sphere, targets p1, p2; the arcs
    (n1, n2) and (p1, p2) must agree (rigid motion exists)."""

    n1: tuple
    n2: tuple
    p1: tuple
    p2: tuple

    def __post_init__(self):
        for name in ("n1", "n2", "p1", "p2"):
            v = np.asarray(getattr(self, name), dtype=float)
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise SpatialError(f"{name} is not a unit vector")
            object.__setattr__(self, name, tuple(v))
        t1 = arc(self.n1, self.n2)
        t2 = arc(self.p1, self.p2)
        if abs(t1 - t2) > 1e-9:
            raise SpatialError("needle and target separations differ")
        if t1 < 1e-9 or t1 > np.pi - 1e-9:
            raise SpatialError("needles collinear")

    @property
    def t(self):
        return arc(self.n1, self.n2)


@dataclass(frozen=True)
class RotationStep:
    pivot: str  # "needle1" | "needle2"
    angle: float

    def __post_init__(self):
        if self.pivot not in ("needle1", "needle2"):
            raise SpatialError(f"unknown pivot {self.pivot!r}")
        if abs(self.angle) > np.pi + 1e-12:
            raise SpatialError("step angle exceeds pi")


def arc(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(np.arctan2(np.linalg.norm(np.cross(u, v)), float(u @ v)))


def rodrigues(v, axis, angle):
    """Rotate v about the unit axis by the given angle."""
    v = np.asarray(v, dtype=float)
    k = np.asarray(axis, dtype=float)
    return (
        v * np.cos(angle)
        + np.cross(k, v) * np.sin(angle)
        + k * (k @ v) * (1.0 - np.cos(angle))
    )


def _azimuth_align_angle(axis, v, target):
    """Signed rotation about axis taking v's azimuth to target's azimuth."""
    axis = np.asarray(axis, dtype=float)
    vp = np.asarray(v, dtype=float) - (axis @ v) * axis
    tp = np.asarray(target, dtype=float) - (axis @ target) * axis
    nv, nt = np.linalg.norm(vp), np.linalg.norm(tp)
    if nv < 1e-15 or nt < 1e-15:
        return 0.0
    vp /= nv
    tp /= nt
    return float(np.arctan2(axis @ np.cross(vp, tp), float(vp @ tp)))


def _perp_unit(v):
    """Some unit vector orthogonal to v."""
    v = np.asarray(v, dtype=float)
    w = np.zeros(3)
    w[int(np.argmin(np.abs(v)))] = 1.0
    w = w - (w @ v) * v
    return w / np.linalg.norm(w)


def _circle_intersection(c1, c2, t):
    """A unit vector at spherical distance t from both c1 and c2.

    The circles of radius t around c1 and c2 intersect exactly when the
    gap arc(c1, c2) is at most 2*min(t, pi - t).  Built in the orthonormal
    frame (midpoint, difference, normal) so that both distance constraints
    hold to machine precision even for nearly coincident centers.
    """
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    delta = c2 - c1
    nd = float(np.linalg.norm(delta))
    if nd < 1e-14:
        return np.cos(t) * c1 + np.sin(t) * _perp_unit(c1)
    ssum = c1 + c2
    ns = float(np.linalg.norm(ssum))
    if ns < 1e-14:
        raise SpatialError("circle centers antipodal")
    e1 = ssum / ns
    e2 = delta / nd
    # u = a e1 + c (e1 x e2) with u.c1 = u.c2 = a * cos(g/2) = cos t
    a = 2.0 * np.cos(t) / ns
    if abs(a) > 1.0 + 1e-9:
        raise SpatialError("circles do not intersect")
    a = float(np.clip(a, -1.0, 1.0))
    e3 = np.cross(e1, e2)
    u = a * e1 + np.sqrt(1.0 - a * a) * e3 / np.linalg.norm(e3)
    return u / np.linalg.norm(u)


def plan_needles(cfg, tol=1e-12):
    """Finite rotation plan bringing both needles onto their targets.

    While n1 is further than t from p1: rotate about n1 so that n2 lies on
    the great-circle arc from n1 toward p1, then rotate about n2 by pi,
    which carries n1 a distance 2t along that arc toward p1.  Once within
    t: rotate about n1 placing n2 on the circle of spherical radius t
    around p1, rotate about n2 carrying n1 to p1, and finish by rotating
    about n1 (= p1) carrying n2 to p2.  Every step preserves arc(n1, n2).

    A pi-rotation about n2 reflects n1 through the n2 axis, moving it 2t
    along the great circle through both needles.  For t > pi/2 that stride
    wraps around the sphere, so the effective per-iteration progress is
    2 * min(t, pi - t); aligning n2 *away* from p1 then makes the wrapped
    stride point toward p1.  The reduction loop stops as soon as the
    radius-t circles around n1 and p1 intersect (gap <= 2 min(t, pi - t)).
    """
    n1 = np.asarray(cfg.n1, dtype=float)
    n2 = np.asarray(cfg.n2, dtype=float)
    p1 = np.asarray(cfg.p1, dtype=float)
    p2 = np.asarray(cfg.p2, dtype=float)
    t = cfg.t
    t_eff = min(t, np.pi - t)
    exit_gap = min(t, 2.0 * t_eff)
    steps = []

    def fold(x):
        x = abs(x) % (2.0 * np.pi)
        return min(x, 2.0 * np.pi - x)

    def rotate_all(pivot_vec, pivot_name, angle):
        nonlocal n1, n2
        if abs(angle) < 1e-15:
            return
        angle = float(np.clip(angle, -np.pi, np.pi))
        axis = pivot_vec / np.linalg.norm(pivot_vec)
        n1 = rodrigues(n1, axis, angle)
        n2 = rodrigues(n2, axis, angle)
        steps.append(RotationStep(pivot_name, angle))

    guard = 0
    while arc(n1, p1) > exit_gap + 1e-12:
        guard += 1
        if guard > int(np.ceil(np.pi / (2.0 * t_eff))) + 2:
            raise SpatialError("case-1 loop failed to converge")
        g = arc(n1, p1)
        target = p1 if fold(g - 2.0 * t) <= fold(g + 2.0 * t) else -p1
        rotate_all(n1, "needle1", _azimuth_align_angle(n1, n2, target))
        rotate_all(n2, "needle2", np.pi)

    if arc(n1, p1) > tol:
        # n1 is within t of p1: park n2 on the radius-t circle around p1
        u = _circle_intersection(n1, p1, t)
        rotate_all(n1, "needle1", _azimuth_align_angle(n1, n2, u))
        rotate_all(n2, "needle2", _azimuth_align_angle(n2, n1, p1))
    if arc(n2, p2) > tol:
        rotate_all(n1, "needle1", _azimuth_align_angle(n1, n2, p2))
    return steps


def apply_steps(cfg, steps):
    """Replay a plan; returns final (n1, n2) and the worst per-step drift of
    the needle separation."""
    n1 = np.asarray(cfg.n1, dtype=float)
    n2 = np.asarray(cfg.n2, dtype=float)
    t0 = arc(n1, n2)
    drift = 0.0
    for st in steps:
        axis = n1 if st.pivot == "needle1" else n2
        axis = axis / np.linalg.norm(axis)
        n1 = rodrigues(n1, axis, st.angle)
        n2 = rodrigues(n2, axis, st.angle)
        drift = max(drift, abs(arc(n1, n2) - t0))
    return n1, n2, drift


def step_bound(t):
    """2 ceil(pi / 2t) + 3."""
    return 2 * int(np.ceil(np.pi / (2.0 * t))) + 3


def plan_to_dict(steps):
    return {
        "schema": "kakeya-needles/1",
        "steps": [{"pivot": s.pivot, "angle": float(s.angle)} for s in steps],
    }


def save_plan(steps, path):
    with open(path, "w") as fh:
        json.dump(plan_to_dict(steps), fh, indent=1)
        fh.write("\n")


# ---------------------------------------------------------------------------
# composite strong-Kakeya plans


@dataclass
class CompositePlan:
    """Needle plan lifted to physical rotations of a cylinderlike solid."""

    steps: list
    axes: list  # world axis (unit Vec3) per step at execution time
    final_error: float
    per_step_budget: list


def strong_kakeya_plan(K, d1, d2, target, n_lines=2, sweep_eps=None,
                       K_d2=None):
    """Plan reaching the rigid pose `target` (a 3x3 rotation) by rotating
    about the current images of the axes d1, d2.

    The solid must be cylinderlike from both directions; each rotation
    step is realizable with swept volume at most n_lines * eps * extent
    when driven by a small-sweep square schedule (budget reported per
    step, not re-planned here)."""
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    d1 = d1 / np.linalg.norm(d1)
    d2 = d2 / np.linalg.norm(d2)
    if abs(float(d1 @ d2)) > 1.0 - 1e-12:
        raise SpatialError("axes d1, d2 must be non-parallel")
    ok1, _ = is_cylinderlike(K, n_lines)
    if not ok1:
        raise SpatialError("solid is not cylinderlike from direction d1")
    if K_d2 is not None:
        ok2, _ = is_cylinderlike(K_d2, n_lines)
        if not ok2:
            raise SpatialError("solid is not cylinderlike from direction d2")
    R = np.asarray(target, dtype=float)
    cfg = SphereConfig(n1=tuple(d1), n2=tuple(d2), p1=tuple(R @ d1),
                       p2=tuple(R @ d2))
    steps = plan_needles(cfg)
    # replay to collect the world axes at execution time
    n1, n2 = d1.copy(), d2.copy()
    axes = []
    for st in steps:
        axis = (n1 if st.pivot == "needle1" else n2).copy()
        axes.append(axis)
        n1 = rodrigues(n1, axis, st.angle)
        n2 = rodrigues(n2, axis, st.angle)
    err = max(arc(n1, R @ d1), arc(n2, R @ d2))
    eps = sweep_eps if sweep_eps is not None else float("nan")
    budgets = [n_lines * eps * K.x_range.length for _ in steps]
    return CompositePlan(steps=steps, axes=axes, final_error=float(err),
                         per_step_budget=budgets)


# ---------------------------------------------------------------------------
# voxel ingestion


def save_voxels(occ, spacing, path):
    """Run-length-encoded occupancy: header line, then value/count pairs."""
    occ = np.asarray(occ, dtype=bool)
    flat = occ.ravel()
    with open(path, "w") as fh:
        fh.write(f"kakeya-voxel/1 {occ.shape[0]} {occ.shape[1]} "
                 f"{occ.shape[2]} {spacing:.17g}\n")
        if flat.size == 0:
            return
        change = np.flatnonzero(np.diff(flat.astype(np.int8))) + 1
        starts = np.concatenate(([0], change))
        ends = np.concatenate((change, [flat.size]))
        pairs = [f"{int(flat[s])} {e - s}" for s, e in zip(starts, ends)]
        fh.write(" ".join(pairs))
        fh.write("\n")


def load_voxels(path):
    with open(path) as fh:
        header = fh.readline().split()
        if not header or header[0] != "kakeya-voxel/1":
            raise SpatialError("not a voxel file")
        nx, ny, nz = (int(v) for v in header[1:4])
        spacing = float(header[4])
        body = fh.read().split()
    vals = np.array(body[0::2], dtype=np.int8)
    counts = np.array(body[1::2], dtype=np.int64)
    flat = np.repeat(vals.astype(bool), counts)
    if flat.size != nx * ny * nz:
        raise SpatialError("voxel run lengths do not match the declared dims")
    return flat.reshape(nx, ny, nz), spacing


def solid_from_voxels(occ, spacing, origin=(0.0, 0.0, 0.0)):
    """Columns from a voxel grid: one column per occupied (x, y) stack,
    spanning that stack's z-extent."""
    occ = np.asarray(occ, dtype=bool)
    nx = occ.shape[0]
    cols = []
    for i in range(nx):
        rows = []
        for j in range(occ.shape[1]):
            ks = np.flatnonzero(occ[i, j])
            if ks.size == 0:
                continue
            rows.append(
                [
                    origin[1] + (j + 0.5) * spacing,
                    origin[2] + ks.min() * spacing,
                    origin[2] + (ks.max() + 1) * spacing,
                ]
            )
        cols.append(np.array(rows).reshape(-1, 3))
    x_lo = origin[0]
    return SlicedSolid(Interval(x_lo, x_lo + nx * spacing), cols)
