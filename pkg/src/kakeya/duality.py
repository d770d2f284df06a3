"""Point-plane duality: lifted stages and their projection measures.

A triple (a, b, c) encodes the plane {(x, y, z) : a + bx + cy = z}; the
lift f(a, b) = (a, b, sqrt(1 + b^2)) lands on the sheet H = {c^2 - b^2 = 1,
c > 0} of planes at 45 degrees to {y = 0}.  Projecting a lifted stage onto
the direction (1, x, y) reduces to ranging s(a, b) = a + x b + y sqrt(1 +
b^2) over each stage rectangle, so every measure here is an exact interval
sweep.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .geometry import AxisRect, Interval, union_measure
from .stages import StageSet, reflect_stage, schedule_params


@dataclass(frozen=True)
class PlaneTriple:
    """(a, b, c) with c^2 - b^2 = 1, c > 0: a plane a + bx + cy = z."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if self.c <= 0 or abs(self.c**2 - self.b**2 - 1.0) > 1e-9 * (1 + self.b**2):
            raise ValueError(
                f"triple ({self.a}, {self.b}, {self.c}) is not on the sheet "
                "c^2 - b^2 = 1, c > 0"
            )

    def height_at(self, x, y):
        return self.a + self.b * x + self.c * y


@dataclass(frozen=True)
class Direction2:
    """Projection direction (1, x, y), stored by its (x, y) part."""

    x: float
    y: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise ValueError("direction components must be finite")


@dataclass(frozen=True)
class HalfPlaneF:
    """Region where the tangent slope is >= 0: the whole (a, b)-plane, the
    empty set, or a half-plane bounded by a line parallel to the a-axis."""

    kind: str  # all | empty | b_at_least | b_at_most
    b_star: float = float("nan")

    def clip_b(self, b0, b1):
        """Intersect [b0, b1] with the half-plane's b-range; None if empty."""
        if self.kind == "all":
            return (b0, b1)
        if self.kind == "empty":
            return None
        if self.kind == "b_at_least":
            lo = max(b0, self.b_star)
            return (lo, b1) if lo < b1 else None
        lo, hi = b0, min(b1, self.b_star)
        return (lo, hi) if lo < hi else None


def lift_f(a, b):
    """Lift a point of the plane onto H."""
    return PlaneTriple(float(a), float(b), float(np.sqrt(1.0 + b * b)))


def curve_point(x, y, s, t):
    """Point of the dual curve C_{x,y,s} at parameter t."""
    return np.array([s - x * np.sinh(t) - y * np.cosh(t), np.sinh(t)])


def tangent_slope(d, b):
    """Signed tangent of the angle between the dual curve through ordinate b
    and the b-axis: tan(alpha_{x,y})(b) = -x - y b / sqrt(1 + b^2).

    Independent of the a-coordinate; obtained by differentiating the curve
    (s - x sinh t - y cosh t, sinh t) at the parameter with sinh t = b.
    """
    b = np.asarray(b, dtype=float)
    out = -d.x - d.y * b / np.sqrt(1.0 + b * b)
    return float(out) if out.ndim == 0 else out


def region_F(d):
    """The set where tangent_slope(d, .) is non-negative.

    Since b / sqrt(1 + b^2) is a strictly increasing bijection onto (-1, 1),
    the sign of the slope changes at most once in b.
    """
    x, y = d.x, d.y
    if y == 0.0:
        return HalfPlaneF("all" if x <= 0.0 else "empty")
    u = -x / y  # slope >= 0 iff b/sqrt(1+b^2) <= u (y > 0) or >= u (y < 0)
    if y > 0:
        if u >= 1.0:
            return HalfPlaneF("all")
        if u <= -1.0:
            return HalfPlaneF("empty")
        return HalfPlaneF("b_at_most", u / np.sqrt(1.0 - u * u))
    if u <= -1.0:
        return HalfPlaneF("all")
    if u >= 1.0:
        return HalfPlaneF("empty")
    return HalfPlaneF("b_at_least", u / np.sqrt(1.0 - u * u))


def _s_range_over_b(x, y, b0, b1):
    """Min/max of g(b) = x b + y sqrt(1 + b^2) over [b0, b1]."""
    cands = [b0, b1]
    # interior critical point: x + y b / sqrt(1+b^2) = 0
    if abs(y) > abs(x):
        bc = -x / np.sqrt(y * y - x * x) * np.sign(y)
        if b0 < bc < b1:
            cands.append(bc)
    vals = [x * b + y * np.sqrt(1.0 + b * b) for b in cands]
    return min(vals), max(vals)


def project_lifted_rect(r, d):
    """Range of s(a, b) = a + x b + y sqrt(1 + b^2) over an AxisRect: the
    projection of the lifted rectangle onto (1, x, y)."""
    glo, ghi = _s_range_over_b(d.x, d.y, r.b0, r.b1)
    return Interval(r.a0 + glo, r.a1 + ghi)


def rect_projection_intervals(rects, d, clip=None):
    """(n, 2) array of projection intervals for stage rectangles (rows
    (a0, a1, b0, b1)), optionally clipped to a half-plane first.

    Rows whose b-range is clipped away are dropped.
    """
    rects = np.asarray(rects, dtype=float)
    if clip is not None and clip.kind != "all":
        if clip.kind == "empty":
            return np.empty((0, 2))
        rects = rects.copy()
        if clip.kind == "b_at_least":
            rects[:, 2] = np.maximum(rects[:, 2], clip.b_star)
        else:
            rects[:, 3] = np.minimum(rects[:, 3], clip.b_star)
        rects = rects[rects[:, 2] < rects[:, 3]]
    if rects.shape[0] == 0:
        return np.empty((0, 2))
    x, y = d.x, d.y
    b0, b1 = rects[:, 2], rects[:, 3]
    g0 = x * b0 + y * np.sqrt(1.0 + b0 * b0)
    g1 = x * b1 + y * np.sqrt(1.0 + b1 * b1)
    glo = np.minimum(g0, g1)
    ghi = np.maximum(g0, g1)
    if abs(y) > abs(x):
        bc = -x / np.sqrt(y * y - x * x) * np.sign(y)
        inside = (b0 < bc) & (bc < b1)
        gc = x * bc + y * np.sqrt(1.0 + bc * bc)
        glo = np.where(inside, np.minimum(glo, gc), glo)
        ghi = np.where(inside, np.maximum(ghi, gc), ghi)
    return np.column_stack([rects[:, 0] + glo, rects[:, 1] + ghi])


def stage_projection_measure(S, d, clip=None):
    """lambda of the projection of the lifted stage onto (1, x, y), via an
    exact interval sweep; clip restricts the stage to a b-half-plane."""
    return union_measure(rect_projection_intervals(S.rects, d, clip=clip))


def mc_oracle(S, d, samples=100_000, rng=None):
    """Monte Carlo estimate of the lifted-stage projection measure.

    Two independent randomized checks share one sample budget.  First,
    points drawn area-uniformly in the stage rectangles are projected and
    must land inside the per-rectangle projection intervals (a coverage
    witness; a miss raises).  Second, abscissas drawn uniformly over the
    projection hull are classified by interval membership, giving an
    unbiased estimate of the union measure with a binomial standard error.
    Returns (estimate, ci) with ci one standard error.
    """
    if samples < 10_000:
        raise ValueError("mc_oracle needs at least 10^4 samples")
    rects = np.asarray(S.rects, dtype=float)
    widths = rects[:, 1] - rects[:, 0]
    heights = rects[:, 3] - rects[:, 2]
    areas = widths * heights
    total = areas.sum()
    if total <= 0:
        raise ValueError("zero-area stage")
    rng = np.random.default_rng(rng)
    idx = rng.choice(rects.shape[0], size=samples, p=areas / total)
    a = rects[idx, 0] + rng.random(samples) * widths[idx]
    b = rects[idx, 2] + rng.random(samples) * heights[idx]
    s = a + d.x * b + d.y * np.sqrt(1.0 + b * b)
    ivs = rect_projection_intervals(rects, d)
    # membership structure: sort by left endpoint, prefix-max the right
    # endpoints; x is covered iff some interval starts before it and the
    # deepest reach among those passes it
    order = np.argsort(ivs[:, 0], kind="stable")
    los = ivs[order, 0]
    reach = np.maximum.accumulate(ivs[order, 1])

    def _inside(x, slack=0.0):
        j = np.searchsorted(los, x, side="right")
        hit = j > 0
        hit[hit] &= reach[j[hit] - 1] >= x[hit] - slack
        return hit

    if not _inside(s, slack=1e-9).all():
        raise ValueError("projection intervals miss a sampled point")
    lo, hi = float(los[0]), float(reach[-1])
    if hi <= lo:
        return 0.0, 0.0
    u = rng.uniform(lo, hi, samples)
    p = _inside(u).mean()
    estimate = p * (hi - lo)
    ci = (hi - lo) * np.sqrt(p * (1.0 - p) / samples) + 1e-12
    return float(estimate), float(ci)


# ---------------------------------------------------------------------------
# the measure bound for even stages


def claim_bound(x, y, m):
    """3 sqrt(1 + x^2 + y^2) / (2 (m - 1))."""
    return 3.0 * np.sqrt(1.0 + x * x + y * y) / (2.0 * (m - 1))


def _covered_by_claim(d, eps_prev, k_prev):
    """Preconditions under which the measure bound applies to direction d.

    Needs |x|, |y| < m (implied by the caller's grid), the slope band over
    b in [0, 1] to fit one sprouting generation pair [n eps/2, (n+2) eps/2]
    of the previous stage, and that generation to exist (n + 2 <= k_prev).
    """
    slopes = tangent_slope(d, np.array([0.0, 1.0]))
    s_lo, s_hi = float(slopes.min()), float(slopes.max())
    if s_hi <= 0.0:
        # slope never positive: the clipped stage is empty, trivially covered
        return True
    s_lo = max(s_lo, 0.0)
    n = int(np.floor(s_lo / (eps_prev / 2.0)))
    return s_hi <= (n + 2) * eps_prev / 2.0 and n + 2 <= k_prev


@dataclass(frozen=True)
class ClaimRow:
    x: float
    y: float
    measured: float
    bound: float
    covered_by_claim: bool
    passed: bool


def claim_report(S, directions, prev_stage=None):
    """Per-direction measure report for an even stage.

    measured is the larger of the direct computation and the mirrored one
    (the stage reflected about b = 1/2), each clipped to the non-negative
    slope region F; bound is claim_bound.  Directions whose slope band does
    not match a single sprouting generation of the previous stage are
    flagged not covered (their inequality is reported but not asserted).
    """
    if S.m % 2 != 0:
        raise ValueError("claim_report requires an even stage index")
    if prev_stage is not None:
        eps_prev, m_prev = prev_stage.eps_m, prev_stage.m
    else:
        eps_prev, m_prev = _standard_prev_eps(S.m), S.m - 1
    k_prev = schedule_params(m_prev, eps_prev, 1).k_m
    mirrored = reflect_stage(S)
    rows = []
    for d in directions:
        F = region_F(d)
        direct = stage_projection_measure(S, d, clip=F)
        mirror = stage_projection_measure(mirrored, d, clip=F)
        measured = max(direct, mirror)
        bound = claim_bound(d.x, d.y, S.m)
        covered = (
            abs(d.x) < S.m
            and abs(d.y) < S.m
            and _covered_by_claim(d, eps_prev, k_prev)
        )
        rows.append(
            ClaimRow(d.x, d.y, measured, bound, covered, measured <= bound + 1e-12)
        )
    return rows


def _standard_prev_eps(m):
    """eps_{m-1} under the standard schedule (eps_1 = 1, then 1/(j+1))."""
    return 1.0 if m == 2 else 1.0 / m


def write_claim_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "measured", "bound", "covered_by_claim", "pass"])
        for r in rows:
            w.writerow(
                [
                    f"{r.x:.17g}",
                    f"{r.y:.17g}",
                    f"{r.measured:.17g}",
                    f"{r.bound:.17g}",
                    str(r.covered_by_claim).lower(),
                    str(r.passed).lower(),
                ]
            )


def direction_grid(n, limit):
    """n x n grid of directions with |x|, |y| <= limit."""
    vals = np.linspace(-limit, limit, n)
    return [Direction2(float(x), float(y)) for x in vals for y in vals]


# ---------------------------------------------------------------------------
# funnel geometry


def midsegment(P, scale=1.5):
    """Segment joining the midpoints of P's left and right sides, scaled
    about its own midpoint; returns (endpoint, endpoint), horizontal."""
    A = P.anchor + P.edge_v / 2.0
    B = A + P.edge_u
    mid = (A + B) / 2.0
    return (mid + (A - mid) * scale, mid + (B - mid) * scale)


def verify_funnel(segment, grandchildren, slope_lo, slope_hi):
    """Whether every line of slope (da/db) in [slope_lo, slope_hi] through a
    grandchild vertex crosses the horizontal line of the segment inside it.

    The lines bound the dual curves over the band, so this is the finite
    check behind the funnel containment.  The crossing abscissa is linear
    in the slope, hence checking the two extreme slopes suffices.
    """
    (a1, b1), (a2, b2) = np.asarray(segment[0]), np.asarray(segment[1])
    if abs(b1 - b2) > 1e-12:
        raise ValueError("funnel segment must be horizontal")
    a_lo, a_hi = min(a1, a2), max(a1, a2)
    if slope_lo > slope_hi:
        raise ValueError("empty slope range")
    tol = 1e-12
    for P in grandchildren:
        for v in P.vertices():
            db = b1 - v[1]
            for sl in (slope_lo, slope_hi):
                a_cross = v[0] + sl * db
                if not (a_lo - tol <= a_cross <= a_hi + tol):
                    return False
    return True


def funnel_families(rect, k, eps_m, N, scale=1.5):
    """All funnel-check families in the sprouting of one stage rectangle.

    Yields (segment, grandchildren, slope_lo, slope_hi): for each
    generation n with n + 2 <= k and each generation-n parallelogram, its
    scaled mid-segment, its four grandchildren at generation n + 2, and
    the slope band [n eps/2, (n+2) eps/2] certified for that generation
    pair.
    """
    from .stages import sprout_generations

    gens = sprout_generations(rect, k, eps_m, N)
    for n in range(0, k - 1):
        grand = gens[n + 2]
        for j, P in enumerate(gens[n]):
            yield (
                midsegment(P, scale),
                grand[4 * j : 4 * j + 4],
                n * eps_m / 2.0,
                (n + 2) * eps_m / 2.0,
            )
