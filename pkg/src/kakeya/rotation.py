"""Certified small-sweep full rotation of the unit square.

A stage yields a family of 45-degree slabs (thickened planes clipped to a
box) that contains an interesting rectangle -- sides 1 and sqrt(2), short
side in {y=0}, tilted 45 degrees into y >= 0 -- for an interval of
directions.  Rotating the rectangle inside the slabs and hopping between
stations with Pal joins produces a continuous full rotation whose
per-height sweep is budgeted by the slab slice certificate plus the join
angles; projecting to {y=0} turns this into a motion of the unit square.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    CellSet,
    GeometryError,
    MotionPath,
    Pose,
    Rotate,
    Translate,
    rot,
    rotation_sweep_area,
    sample_rotation,
    union_measure_rows,
    unit,
    validate_motion,
)


class PlanningError(ValueError):
    pass


# ---------------------------------------------------------------------------
# interesting rectangles


@dataclass(frozen=True)
class InterestingRect:
    """1 x sqrt(2) rectangle with its short side in {y=0}.

    base is the planar (x, z) foot of the short side, theta the direction
    of the short side; the material point (s, h) sits at planar position
    base + s*u(theta) + h*n(theta) and spatial height y = h, so every
    level set {y=h} is a unit segment and the long side has length
    sqrt(2), tilted 45 degrees out of {y=0}.
    """

    base: tuple
    theta: float

    def __post_init__(self):
        object.__setattr__(
            self, "base", (float(self.base[0]), float(self.base[1]))
        )

    @property
    def pose(self):
        return Pose(self.base, self.theta)

    def planar_point(self, s, h):
        u = unit(self.theta)
        n = np.array([-u[1], u[0]])
        return np.asarray(self.base) + s * u + h * n

    def segment_at(self, h):
        p = self.planar_point(0.0, h)
        return p, p + unit(self.theta)

    def plane_triple(self):
        """The 45-degree plane containing the rectangle, as (a, b, c)."""
        if not (-np.pi / 2 < self.theta < np.pi / 2):
            raise PlanningError("plane encoding needs |theta| < pi/2")
        b = np.tan(self.theta)
        c = 1.0 / np.cos(self.theta)
        a = self.base[1] - b * self.base[0]
        return a, b, c


# ---------------------------------------------------------------------------
# slab covers


@dataclass
class SlabCover:
    """Thickened 45-degree planes |z - a - bx - ch| <= delta (1 + b),
    clipped to [-n_box, n_box] x [0,1] x [-n_box, n_box].

    One slab per stage rectangle, centered at the lift of the rectangle's
    center; b in [0, 1] so the plane directions span a 45-degree arc.
    """

    a: np.ndarray
    b: np.ndarray
    delta: float
    n_box: float
    certified_eps: float = float("nan")
    h_grid: int = 0

    @property
    def c(self):
        return np.sqrt(1.0 + self.b * self.b)

    @property
    def half_width(self):
        return self.delta * (1.0 + self.b)

    @property
    def n_slabs(self):
        return self.a.size

    def subcover(self, indices):
        return SlabCover(
            a=self.a[indices].copy(),
            b=self.b[indices].copy(),
            delta=self.delta,
            n_box=self.n_box,
        )


def gap_rule_delta(S):
    """Minimal delta passing the gap rule: half the largest gap between
    consecutive slab b-centers."""
    b = np.sort((S.rects[:, 2] + S.rects[:, 3]) / 2.0)
    if b.size < 2:
        return 0.5
    return float(np.diff(b).max() / 2.0)


def build_slab_cover(S, delta, n_box=2.5):
    """One slab per stage rectangle, plane centered at the lifted center."""
    if delta <= 0:
        raise PlanningError("delta must be positive")
    rects = np.asarray(S.rects, dtype=float)
    a = (rects[:, 0] + rects[:, 1]) / 2.0
    b = (rects[:, 2] + rects[:, 3]) / 2.0
    if b.size >= 2:
        max_gap = float(np.diff(np.sort(b)).max())
        if delta < max_gap / 2.0 - 1e-12:
            raise PlanningError(
                f"delta {delta} too small to close direction gaps: "
                f"largest b-gap is {max_gap}"
            )
    return SlabCover(a=a, b=b, delta=delta, n_box=float(n_box))


def certify_slices(cover, h_grid=64, x_grid=32):
    """Certified bound on the area of cover ∩ {y=h} over all h in [0, 1].

    Slab i meets {y=h} in the strip |z - b_i x - (a_i + c_i h)| <= w_i;
    the slice area is integrated by midpoint quadrature over x-columns,
    with per-column interval unions.  Strip half-widths are inflated by
    c_i * dh / 2 so that the grid maximum dominates every intermediate h
    (the slice at h' is contained in the inflated slice at the nearest
    grid h, since centers move at rate c_i <= sqrt(2) in h).
    """
    if h_grid < 64:
        raise PlanningError("h_grid must be at least 64")
    a, b, c = cover.a, cover.b, cover.c
    n_box = cover.n_box
    dh = 1.0 / h_grid
    w = cover.half_width + c * (dh / 2.0)
    xs = (np.arange(x_grid) + 0.5) * (2.0 * n_box / x_grid) - n_box
    dx = 2.0 * n_box / x_grid
    bx = b[None, :] * xs[:, None] + a[None, :]  # (x_grid, n)
    worst = 0.0
    for j in range(h_grid + 1):
        h = j * dh
        ctr = bx + c[None, :] * h
        lo = np.clip(ctr - w[None, :], -n_box, n_box)
        hi = np.clip(ctr + w[None, :], -n_box, n_box)
        area = float(union_measure_rows(lo, hi).sum() * dx)
        worst = max(worst, area)
    cover.certified_eps = worst
    cover.h_grid = h_grid
    return worst


def rect_in_slab(rect, a, b, delta, tol=1e-9):
    """Whether an interesting rectangle lies in the slab of plane
    (a, b, sqrt(1+b^2)) with half-width delta (1 + b).

    The residual z - a - b x - c h is affine in the material coordinates,
    so checking the four corners is exact.
    """
    c = np.sqrt(1.0 + b * b)
    w = delta * (1.0 + abs(b))
    for s in (0.0, 1.0):
        for h in (0.0, 1.0):
            x, z = rect.planar_point(s, h)
            if abs(z - a - b * x - c * h) > w + tol:
                return False
    return True


# ---------------------------------------------------------------------------
# stations


@dataclass(frozen=True)
class Station:
    """An interesting rectangle that can rotate in place inside one slab."""

    rect: InterestingRect
    margin: float
    slab_index: int

    @property
    def theta(self):
        return self.rect.theta

    @property
    def lo(self):
        return self.theta - self.margin

    @property
    def hi(self):
        return self.theta + self.margin


def station_margin(delta, b):
    """In-place rotation range keeping the station rectangle in its slab.

    Rotating about the base point, the residual against the slab's plane
    grows at rate at most sqrt(2) * c (lever arm sqrt(2), plane gradient
    norm c), so the half-width delta (1+b) is not exhausted before
    delta (1+b) / (sqrt(2) c).
    """
    c = np.sqrt(1.0 + b * b)
    return delta * (1.0 + b) / (np.sqrt(2.0) * c)


def station_for_slab(cover, i):
    b = float(cover.b[i])
    theta = float(np.arctan(b))
    rect = InterestingRect(base=(0.0, float(cover.a[i])), theta=theta)
    return Station(rect=rect, margin=float(station_margin(cover.delta, b)),
                   slab_index=i)


def station_cover(cover):
    """Greedy finite subfamily of stations whose margin intervals cover the
    direction interval [0, pi/4] (slopes b in [0, 1])."""
    thetas = np.arctan(cover.b)
    margins = station_margin(cover.delta, cover.b)
    lo = thetas - margins
    hi = thetas + margins
    order = np.argsort(lo, kind="stable")
    target = np.pi / 4.0
    reach = 0.0
    chosen = []
    k = 0
    best, best_hi = -1, -np.inf
    while reach < target - 1e-15:
        while k < order.size and lo[order[k]] <= reach + 1e-15:
            i = order[k]
            if hi[i] > best_hi:
                best, best_hi = int(i), float(hi[i])
            k += 1
        if best < 0 or best_hi <= reach + 1e-15:
            raise PlanningError(
                f"directions not coverable: uncovered interval starts at "
                f"theta={reach}"
            )
        chosen.append(best)
        reach = best_hi
        best, best_hi = -1, -np.inf
    return [station_for_slab(cover, i) for i in chosen]


# ---------------------------------------------------------------------------
# Pal joins


def pal_join(frm, to, D):
    """N-shaped maneuver between parallel interesting rectangles.

    Translate distance D along the free direction (the short-side
    direction: every level segment is parallel to it, so the translation
    sweeps zero area at every height), rotate by the small angle gamma
    about the far base point, translate back along the new free direction
    to the target base, rotate by -gamma.  Returns (path, kinds, gamma).
    """
    if abs(frm.theta - to.theta) > 1e-12:
        raise PlanningError("Pal join requires parallel poses")
    if D <= 0:
        raise PlanningError("join distance must be positive")
    return _join_at_angle(frm.pose, to.base, frm.theta, D)


def join_budget(path, kinds, h_samples=33):
    """Upper bound on the per-height sweep of a join: the two rotation
    slivers maximized over a height grid, plus their second-order caps.
    Translations are along the free direction and sweep zero exactly."""
    total = 0.0
    for piece, kind in zip(path.pieces, kinds):
        if kind != "join_rotate":
            continue
        piece_worst = 0.0
        for h in np.linspace(0.0, 1.0, h_samples):
            p = piece.start.world(0.0, h)
            q = piece.start.world(1.0, h)
            area, corr = rotation_sweep_area(p, q, piece.center, piece.angle)
            piece_worst = max(piece_worst, area + corr)
        total += piece_worst
    return total


# ---------------------------------------------------------------------------
# the full rotation


@dataclass
class Ledger:
    """A-priori per-height sweep budget of a schedule."""

    certified_eps: float
    n_frames: int
    join_total: float

    @property
    def in_slab(self):
        return self.n_frames * self.certified_eps

    @property
    def total(self):
        return self.in_slab + self.join_total


@dataclass
class Schedule:
    """Continuous full rotation of the interesting rectangle."""

    path: MotionPath
    kinds: list
    stations: list
    ledger: Ledger
    D: float
    active_cover: SlabCover = None

    @property
    def net_rotation(self):
        return self.path.net_rotation


def _frame_station(st, k):
    """Station re-expressed in the frame rotated by k * pi/4."""
    R = rot(k * np.pi / 4.0)
    base = R @ np.asarray(st.rect.base)
    return Station(
        rect=InterestingRect(base=(base[0], base[1]),
                             theta=st.rect.theta + k * np.pi / 4.0),
        margin=st.margin,
        slab_index=st.slab_index,
    )


def plan_full_rotation(cover, target_eps=None, D=1000.0, h_grid=64,
                       x_grid=32):
    """Schedule a continuous 2 pi rotation of an interesting rectangle.

    Stations are chosen greedily over the cover's 45-degree direction
    interval and replayed in 8 frames rotated by multiples of pi/4 to
    extend coverage to the full circle.  In-slab rotations stay inside the
    union of visited slabs, so each frame charges the slice certificate of
    that active subcover once; Pal joins between consecutive stations (and
    between frames) charge their audited rotation bounds.
    """
    stations = station_cover(cover)
    active = cover.subcover(sorted({st.slab_index for st in stations}))
    eps = certify_slices(active, h_grid=h_grid, x_grid=x_grid)

    # handoff angle between consecutive stations: inside both margins,
    # nondecreasing along the tour
    all_st = [_frame_station(st, k) for k in range(8) for st in stations]
    pieces = []
    kinds = []
    join_total = 0.0
    angle = 0.0  # the first station's interval contains theta = 0
    current = Pose(all_st[0].rect.base, angle)
    if not (all_st[0].lo - 1e-12 <= angle <= all_st[0].hi + 1e-12):
        raise PlanningError("first station does not cover direction 0")
    for idx in range(len(all_st)):
        st = all_st[idx]
        if idx + 1 < len(all_st):
            nxt = all_st[idx + 1]
            handoff = min(st.hi, 0.5 * (max(st.lo, nxt.lo) + min(st.hi, nxt.hi)))
            if handoff < max(angle, nxt.lo) - 1e-12:
                handoff = min(st.hi, nxt.hi, max(angle, nxt.lo))
            if not (st.lo - 1e-9 <= handoff <= st.hi + 1e-9 and
                    nxt.lo - 1e-9 <= handoff <= nxt.hi + 1e-9):
                raise PlanningError(
                    f"no common handoff angle between stations {idx} and {idx+1}"
                )
        else:
            handoff = 2.0 * np.pi  # last station's interval contains 2 pi
            if handoff > st.hi + 1e-12:
                raise PlanningError("last station cannot reach a full turn")
        if handoff < angle - 1e-12:
            raise PlanningError("handoff angles are not monotone")
        if abs(handoff - angle) > 0:
            piece = Rotate(start=current, center=current.point,
                           angle=handoff - angle)
            pieces.append(piece)
            kinds.append("station_rotation")
            current = piece.end
            angle = handoff
        if idx + 1 < len(all_st):
            frm = InterestingRect(base=current.point, theta=angle)
            to = InterestingRect(base=all_st[idx + 1].rect.base, theta=angle)
            jp, jk, _ = pal_join(frm, to, D)
            join_total += join_budget(jp, jk)
            pieces.extend(jp.pieces)
            kinds.extend(jk)
            if jp.pieces:
                current = jp.end
    # close the loop: return to the start base at angle 2 pi
    jp, jk, _ = _join_at_angle(current, all_st[0].rect.base, angle, D)
    if jp.pieces:
        join_total += join_budget(jp, jk)
        pieces.extend(jp.pieces)
        kinds.extend(jk)
        current = jp.end

    path = MotionPath(pieces)
    ledger = Ledger(certified_eps=eps, n_frames=8, join_total=join_total)
    sched = Schedule(path=path, kinds=kinds, stations=all_st, ledger=ledger,
                     D=float(D), active_cover=active)
    report = validate_motion(path)
    if not report.ok:
        raise PlanningError(f"planner emitted a discontinuous path: {report.message}")
    if abs(path.net_rotation - 2.0 * np.pi) > 1e-9:
        raise PlanningError(
            f"net rotation {path.net_rotation} differs from 2 pi"
        )
    if target_eps is not None and ledger.total > target_eps:
        raise PlanningError(
            f"budget infeasible: achievable per-height sweep is "
            f"{ledger.total}, target {target_eps}"
        )
    return sched


def _join_at_angle(current, target_base, angle, D):
    """Pal join from the current pose to target_base at the same angle."""
    qa = np.asarray(current.point)
    qb = np.asarray(target_base)
    if float(np.hypot(*(qa - qb))) == 0.0:
        return MotionPath([]), [], 0.0
    u = unit(angle)
    w = qa - qb + D * u
    L = float(np.hypot(w[0], w[1]))
    gamma = float(np.arctan2(w[1], w[0]) - angle)
    gamma = (gamma + np.pi) % (2.0 * np.pi) - np.pi
    t1 = Translate(start=current, direction=(u[0], u[1]), length=D)
    r1 = Rotate(start=t1.end, center=t1.end.point, angle=gamma)
    u2 = unit(angle + gamma)
    t2 = Translate(start=r1.end, direction=(-u2[0], -u2[1]), length=L)
    r2 = Rotate(start=t2.end, center=t2.end.point, angle=-gamma)
    path = MotionPath([t1, r1, t2, r2])
    kinds = ["join_translate", "join_rotate", "join_translate", "join_rotate"]
    return path, kinds, gamma


def project_to_square(sched):
    """Planar motion of the unit square obtained by projecting the moving
    rectangle onto {y=0}.

    The projection is the identity on the path representation: the square
    has corner at the base point and sides along u(theta), n(theta), and
    its segment at distance h from the reference side traces exactly what
    the rectangle's level set at height h traces.
    """
    return sched.path


# ---------------------------------------------------------------------------
# audit


@dataclass(frozen=True)
class AuditRow:
    segment_index: int
    h: float
    area: float
    bound: float


@dataclass
class AuditReport:
    rows: list
    max_area: float
    argmax: int
    ledger_total: float
    raster_results: list = field(default_factory=list)

    @property
    def ok(self):
        if not all(r.area <= r.bound + 1e-12 for r in self.rows):
            return False
        for j, r_area, r_err in self.raster_results:
            if r_area > self.rows[j].area + r_err + 1e-12:
                return False
        return True


def _segment_analytic_sweep(sched, h):
    """Per-piece upper bound on the sweep of the level segment at height h.

    Free-direction translations sweep zero exactly; each rotation sliver
    is charged its exact first-order area plus the second-order cap bound,
    and the union is bounded by the sum."""
    total = 0.0
    for piece, kind in zip(sched.path.pieces, sched.kinds):
        if isinstance(piece, Translate):
            continue
        p = piece.start.world(0.0, h)
        q = piece.start.world(1.0, h)
        area, corr = rotation_sweep_area(p, q, piece.center, piece.angle)
        total += area + corr
    return total


def raster_segment_sweep(sched, h, resolution=2048):
    """Raster union of every rotation sliver for the segment at height h.

    Translations along the free direction cover no cells (the quads are
    degenerate); rotations are time-sampled to sub-cell steps.  Returns
    (area, error bound)."""
    cells = CellSet(resolution)
    travel = 0.0
    for piece, kind in zip(sched.path.pieces, sched.kinds):
        if isinstance(piece, Translate):
            continue
        p = piece.start.world(0.0, h)
        q = piece.start.world(1.0, h)
        poses = sample_rotation(p, q, piece.center, piece.angle,
                                max_step=0.9 / resolution)
        r = max(np.linalg.norm(p - np.asarray(piece.center)),
                np.linalg.norm(q - np.asarray(piece.center)))
        travel += 2.0 * abs(piece.angle) * r
        for (p0, q0), (p1, q1) in zip(poses[:-1], poses[1:]):
            cells.add_quad(p0, q0, p1, q1)
    err = 4.0 * (travel + 2.0 + 4.0 * cells.cell) * cells.cell
    return cells.area(), err


def audit_square_sweep(sched, n_segments=64, resolution=2048,
                       raster_checks=1):
    """A-posteriori sweep audit of the projected square motion.

    For each initially-vertical segment (material height h) the per-piece
    analytic sweep bound is compared against the plan's ledger; the
    raster_checks worst segments are additionally re-measured by full
    rasterization at the given resolution, which must come out no larger
    than the analytic bound (within the raster error)."""
    if resolution < 256:
        raise GeometryError("resolution must be at least 256 cells per unit")
    ledger_total = sched.ledger.total
    rows = []
    for i in range(n_segments):
        h = (i + 0.5) / n_segments
        area = _segment_analytic_sweep(sched, h)
        rows.append(AuditRow(i, h, area, ledger_total))
    order = sorted(range(len(rows)), key=lambda j: -rows[j].area)
    raster_results = []
    for j in order[:raster_checks]:
        r_area, r_err = raster_segment_sweep(sched, rows[j].h, resolution)
        raster_results.append((j, r_area, r_err))
    max_area = max(r.area for r in rows)
    return AuditReport(rows=rows, max_area=max_area, argmax=order[0],
                       ledger_total=ledger_total,
                       raster_results=raster_results)


def write_audit_csv(report, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["segment_index", "area", "bound"])
        for r in report.rows:
            w.writerow([r.segment_index, f"{r.area:.17g}", f"{r.bound:.17g}"])


def segment_sweep_area(sched, h):
    """Audited (per-piece analytic) sweep of the level segment at height h."""
    return _segment_analytic_sweep(sched, h)


# ---------------------------------------------------------------------------
# serialization


def schedule_to_dict(sched):
    pieces = []
    for piece, kind in zip(sched.path.pieces, sched.kinds):
        start = {
            "point": [float(piece.start.point[0]), float(piece.start.point[1])],
            "angle": float(piece.start.angle),
        }
        if isinstance(piece, Translate):
            pieces.append(
                {
                    "type": "translate",
                    "kind": kind,
                    "direction": [float(piece.direction[0]),
                                  float(piece.direction[1])],
                    "length": float(piece.length),
                    "start": start,
                }
            )
        else:
            pieces.append(
                {
                    "type": "rotate",
                    "kind": kind,
                    "center": [float(piece.center[0]), float(piece.center[1])],
                    "angle": float(piece.angle),
                    "start": start,
                }
            )
    return {
        "schema": "kakeya-schedule/1",
        "D": sched.D,
        "ledger": {
            "certified_eps": sched.ledger.certified_eps,
            "n_frames": sched.ledger.n_frames,
            "join_total": sched.ledger.join_total,
            "total": sched.ledger.total,
        },
        "stations": [
            {
                "base": [st.rect.base[0], st.rect.base[1]],
                "theta": st.rect.theta,
                "margin": st.margin,
                "slab_index": st.slab_index,
            }
            for st in sched.stations
        ],
        "pieces": pieces,
    }


def save_schedule(sched, path):
    with open(path, "w") as fh:
        json.dump(schedule_to_dict(sched), fh, indent=1)
        fh.write("\n")


def schedule_from_dict(data):
    if data.get("schema") != "kakeya-schedule/1":
        raise PlanningError("not a schedule document")
    pieces = []
    kinds = []
    for pd in data["pieces"]:
        start = Pose(tuple(pd["start"]["point"]), float(pd["start"]["angle"]))
        if pd["type"] == "translate":
            piece = Translate(start=start, direction=tuple(pd["direction"]),
                              length=float(pd["length"]))
        elif pd["type"] == "rotate":
            piece = Rotate(start=start, center=tuple(pd["center"]),
                           angle=float(pd["angle"]))
        else:
            raise PlanningError(f"unknown piece type {pd['type']!r}")
        pieces.append(piece)
        kinds.append(pd["kind"])
    led = data["ledger"]
    ledger = Ledger(certified_eps=float(led["certified_eps"]),
                    n_frames=int(led["n_frames"]),
                    join_total=float(led["join_total"]))
    stations = [
        Station(rect=InterestingRect(base=tuple(s["base"]),
                                     theta=float(s["theta"])),
                margin=float(s["margin"]), slab_index=int(s["slab_index"]))
        for s in data["stations"]
    ]
    return Schedule(path=MotionPath(pieces), kinds=kinds, stations=stations,
                    ledger=ledger, D=float(data["D"]))


def load_schedule(path):
    with open(path) as fh:
        return schedule_from_dict(json.load(fh))
