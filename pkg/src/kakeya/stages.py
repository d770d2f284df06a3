"""Finite stages of the Besicovitch-type rectangle construction.

Each stage is a union of N thin rectangles, one per horizontal band of
height 1/N.  Advancing a stage sprouts every rectangle into a binary tree
of progressively slanted parallelograms, replaces each leaf by a staircase
of axis-aligned rectangles, and (for even stage index) sandwiches the map
between reflections about the line b = 1/2.
"""

import hashlib
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .geometry import AxisRect, GeometryError, Parallelogram, union_measure

DEFAULT_BUDGET = 10_000_000

STAGE_SCHEMA = "kakeya-stage/1"


class StageBudgetError(RuntimeError):
    """Raised when a stage would materialize more rectangles than allowed."""

    def __init__(self, count, budget):
        super().__init__(f"stage budget exceeded: {count} rectangles > budget {budget}")
        self.count = count
        self.budget = budget


class StageError(ValueError):
    pass


def budget_from_env(budget=None):
    if budget is not None:
        return int(budget)
    env = os.environ.get("KAKEYA_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class StageParams:
    """Parameters driving one advancement step m -> m+1."""

    m: int
    eps_m: float
    N: int
    k_m: int
    eps_next: float
    N_next: int
    conforming: bool = True


def schedule_params(m, eps_m, N, budget=None, k_m=None):
    """Choose the advancement parameters for stage m.

    k_m is the minimal integer with k_m * eps_m >= 2m (callers may force a
    smaller k_m for exploration; the result is then stamped non-conforming).
    eps_next is fixed to 1/(m+2), a concrete point of the admissible open
    interval.  N_next is the minimal multiple of 2^k_m * N that

      * is at least 2m/eps_next (slope-oscillation over one band stays
        below eps_next/2, since |d slope/d b| <= m on the certified range),
      * leaves room for the staircase: a full-height sub-rectangle of
        width eps_next/N_next must fit inside a leaf parallelogram whose
        left edge drifts by (k_m * eps_m / 2) / N_next per band.
    """
    budget = budget_from_env(budget)
    if not (0 < eps_m <= 1.0 / m + 1e-12):
        raise StageError(f"eps_m must lie in (0, 1/m]; got {eps_m} at m={m}")
    k_min = math.ceil(2 * m / eps_m)
    conforming = True
    if k_m is None:
        k_m = k_min
    elif k_m < k_min:
        conforming = False
    eps_next = 1.0 / (m + 2)
    base = (1 << k_m) * N
    tau = k_m * eps_m / 2.0
    # containment: eps_m / (2^k N) >= (tau + eps_next) / N_next
    factor = max(
        math.ceil(2 * m / eps_next / base),
        math.ceil((tau + eps_next) / eps_m - 1e-12),
        1,
    )
    # smallest multiple of base meeting both lower bounds
    while base * factor < 2 * m / eps_next:
        factor += 1
    while base * factor < base * (tau + eps_next) / eps_m - 1e-9:
        factor += 1
    N_next = base * factor
    if N_next > budget:
        raise StageBudgetError(N_next, budget)
    return StageParams(
        m=m, eps_m=eps_m, N=N, k_m=k_m, eps_next=eps_next, N_next=N_next,
        conforming=conforming,
    )


# ---------------------------------------------------------------------------
# stage sets


@dataclass
class StageSet:
    """Union of axis-aligned rectangles in canonical band form.

    rects is an (N, 4) array of (a0, a1, b0, b1), one rectangle of width
    eps_m / N per height band [(n-1)/N, n/N], sorted by band.
    """

    rects: np.ndarray
    m: int
    eps_m: float
    N: int
    conforming: bool = True

    def __post_init__(self):
        self.rects = np.asarray(self.rects, dtype=float)
        if self.rects.shape != (self.N, 4):
            raise StageError(
                f"expected {self.N} rectangles, got shape {self.rects.shape}"
            )
        b0 = self.rects[:, 2]
        b1 = self.rects[:, 3]
        bands = np.arange(self.N)
        if not (
            np.allclose(b0, bands / self.N, atol=1e-9)
            and np.allclose(b1, (bands + 1) / self.N, atol=1e-9)
        ):
            raise StageError("rectangles are not in canonical band form")
        widths = self.rects[:, 1] - self.rects[:, 0]
        if not np.allclose(widths, self.eps_m / self.N, rtol=1e-9, atol=1e-12):
            raise StageError("rectangle widths differ from eps_m / N")

    @property
    def parity(self):
        return "odd" if self.m % 2 == 1 else "even"

    @property
    def anchors(self):
        return self.rects[:, 0].copy()

    def axis_rects(self):
        return [AxisRect(*row) for row in self.rects]

    def a_projection_measure(self):
        """Measure of the projection onto the a-axis (closed-form sweep)."""
        return union_measure(self.rects[:, :2])

    def b_projection(self):
        return (float(self.rects[:, 2].min()), float(self.rects[:, 3].max()))


def initial_stage():
    """Stage 1: the unit square."""
    return StageSet(
        rects=np.array([[0.0, 1.0, 0.0, 1.0]]), m=1, eps_m=1.0, N=1
    )


def reflect_stage(stage):
    """Reflection about the line b = 1/2 (an involution)."""
    rects = stage.rects.copy()
    b0 = 1.0 - rects[:, 3]
    b1 = 1.0 - rects[:, 2]
    rects[:, 2] = b0
    rects[:, 3] = b1
    rects = rects[np.argsort(rects[:, 2], kind="stable")]
    return StageSet(rects=rects, m=stage.m, eps_m=stage.eps_m, N=stage.N,
                    conforming=stage.conforming)


# ---------------------------------------------------------------------------
# sprouting


def _stage_tangent(P):
    """Side tangent of a stage parallelogram against the b-axis."""
    return float(P.edge_v[0] / P.edge_v[1])


def split_step(P, i, eps_m, N):
    """Split a generation-(i-1) parallelogram into its two generation-i
    children.

    The parent has side tangent (i-1) * eps_m / 2, horizontal width
    2^-(i-1) * eps_m / N and height 2^-(i-1) / N.  With A, B the midpoints
    of its left/right sides and M the midpoint of AB, the lower child is
    the parallelogram with top edge [M, B] whose sides of tangent
    i * eps_m / 2 descend through the lower half-band; the upper child has
    bottom edge [A, M] and sides ascending through the upper half-band.
    Both children stay inside the parent.
    """
    if i < 1:
        raise StageError("generation index must be >= 1")
    w = P.edge_u[0]
    h = P.edge_v[1]
    w_exp = eps_m / N / (1 << (i - 1))
    h_exp = 1.0 / N / (1 << (i - 1))
    tan_parent = _stage_tangent(P)
    tan_exp = (i - 1) * eps_m / 2.0
    if abs(P.edge_u[1]) > 1e-12:
        raise StageError("precondition failed: edge_u is not horizontal")
    if abs(w - w_exp) > 1e-9 * max(1.0, w_exp):
        raise StageError(
            f"precondition failed: width {w} != 2^-(i-1) eps_m/N = {w_exp}"
        )
    if abs(h - h_exp) > 1e-9 * max(1.0, h_exp):
        raise StageError(f"precondition failed: height {h} != 2^-(i-1)/N = {h_exp}")
    if abs(tan_parent - tan_exp) > 1e-9 * max(1.0, abs(tan_exp)):
        raise StageError(
            f"precondition failed: side tangent {tan_parent} != (i-1) eps_m/2 = {tan_exp}"
        )
    A = P.anchor + P.edge_v / 2.0
    B = A + P.edge_u
    M = (A + B) / 2.0
    tan_i = i * eps_m / 2.0
    half_h = h / 2.0
    half_u = np.array([w / 2.0, 0.0])
    edge_v = np.array([half_h * tan_i, half_h])
    lower = Parallelogram(anchor=M - edge_v, edge_u=half_u, edge_v=edge_v)
    upper = Parallelogram(anchor=A, edge_u=half_u, edge_v=edge_v)
    return lower, upper


def sprout_generations(rect, k, eps_m, N, budget=None):
    """All generations 0..k of the binary sprouting of one stage rectangle.

    Returns a list gens with gens[i] the 2^i generation-i parallelograms
    ordered by their b-projection.
    """
    budget = budget_from_env(budget)
    if (1 << k) > budget:
        raise StageBudgetError(1 << k, budget)
    if isinstance(rect, AxisRect):
        root = rect.as_parallelogram()
    else:
        root = rect
    gens = [[root]]
    for i in range(1, k + 1):
        nxt = []
        for P in gens[-1]:
            lo, hi = split_step(P, i, eps_m, N)
            nxt.append(lo)
            nxt.append(hi)
        gens.append(nxt)
    return gens


def sprout(rect, k, eps_m, N, budget=None):
    """Leaves of the depth-k sprouting, ordered by b-projection."""
    return sprout_generations(rect, k, eps_m, N, budget=budget)[k]


def discretize_leaf(P, N_next, eps_next):
    """Replace a leaf parallelogram by its staircase of axis rectangles.

    One rectangle [t, t + eps_next/N_next] x [u, u + 1/N_next] per height
    band inside the leaf's b-projection; t is the left boundary of the leaf
    at the band's top edge (the least right-rounding that keeps the
    rectangle inside the slanted leaf).
    """
    h = float(P.edge_v[1])
    b0 = float(P.anchor[1])
    w = float(P.edge_u[0])
    if eps_next / N_next > w + 1e-15:
        raise StageError(
            f"leaf too thin: rectangle width {eps_next / N_next} exceeds leaf width {w}"
        )
    n_bands_f = h * N_next
    n_bands = int(round(n_bands_f))
    if n_bands < 1 or abs(n_bands_f - n_bands) > 1e-6:
        raise StageError(
            "leaf b-projection is not an integer multiple of 1/N_next"
        )
    tau = _stage_tangent(P)
    a0 = float(P.anchor[0])
    out = []
    for j in range(n_bands):
        u = b0 + j / N_next
        u_top = b0 + (j + 1) / N_next
        t = a0 + (u_top - b0) * tau  # left boundary at the band's top edge
        rect = AxisRect(t, t + eps_next / N_next, u, u_top)
        out.append(rect)
    return out


def advance_stage(stage, budget=None, k_m=None):
    """One construction step: sprout + discretize every rectangle, with the
    reflection sandwich when the stage index is even.

    Certifies that the a-projection of the output has measure at most
    eps_next (which implies the 1/(m+1) bound)."""
    budget = budget_from_env(budget)
    params = schedule_params(stage.m, stage.eps_m, stage.N, budget=budget, k_m=k_m)
    even = stage.m % 2 == 0
    src = reflect_stage(stage) if even else stage

    rows = np.empty((params.N_next, 4))
    per_rect = params.N_next // stage.N
    for idx, rect in enumerate(src.axis_rects()):
        leaves = sprout(rect, params.k_m, stage.eps_m, stage.N, budget=budget)
        pos = idx * per_rect
        for leaf in leaves:
            for r in discretize_leaf(leaf, params.N_next, params.eps_next):
                rows[pos] = (r.a0, r.a1, r.b0, r.b1)
                pos += 1
        if pos != (idx + 1) * per_rect:
            raise StageError("band count mismatch while discretizing")
    out = StageSet(
        rects=rows,
        m=stage.m + 1,
        eps_m=params.eps_next,
        N=params.N_next,
        conforming=stage.conforming and params.conforming,
    )
    if even:
        out = reflect_stage(out)
    measure = out.a_projection_measure()
    if measure > params.eps_next + 1e-9:
        raise StageError(
            f"a-projection certificate failed: {measure} > {params.eps_next}"
        )
    return out


def build_stage(m, budget=None, k_m=None):
    """Build stage m from scratch under the standard schedule."""
    if m < 1:
        raise StageError("stage index must be >= 1")
    stage = initial_stage()
    for _ in range(m - 1):
        stage = advance_stage(stage, budget=budget, k_m=k_m)
    return stage


def stage_containment_violations(inner, outer, tol=1e-9):
    """Count inner rectangles not contained in the outer union.

    Every canonical band of the inner stage lies inside one band of the
    outer stage, so containment reduces to an a-interval check."""
    ratio = inner.N // outer.N
    bad = 0
    for n in range(inner.N):
        a0, a1, b0, _ = inner.rects[n]
        outer_row = outer.rects[min(n // ratio, outer.N - 1)]
        if a0 < outer_row[0] - tol or a1 > outer_row[1] + tol:
            bad += 1
    return bad


# ---------------------------------------------------------------------------
# persistence


def stage_to_dict(stage):
    return {
        "schema": STAGE_SCHEMA,
        "m": stage.m,
        "eps_m": stage.eps_m,
        "N": stage.N,
        "parity": stage.parity,
        "conforming": stage.conforming,
        "rects": [[float(v) for v in row] for row in stage.rects],
    }


def stage_from_dict(doc):
    if doc.get("schema") != STAGE_SCHEMA:
        raise StageError(f"unknown stage schema: {doc.get('schema')!r}")
    return StageSet(
        rects=np.array(doc["rects"], dtype=float),
        m=int(doc["m"]),
        eps_m=float(doc["eps_m"]),
        N=int(doc["N"]),
        conforming=bool(doc.get("conforming", True)),
    )


def _float17(x):
    return float(f"{x:.17g}")


def save_stage(stage, path):
    doc = stage_to_dict(stage)
    doc["rects"] = [[_float17(v) for v in row] for row in doc["rects"]]
    with open(path, "w") as fh:
        json.dump(doc, fh, separators=(",", ":"))
        fh.write("\n")


def load_stage(path):
    with open(path) as fh:
        return stage_from_dict(json.load(fh))


def stage_cache_key(m, budget=None, k_m=None):
    """Content hash of the parameters that determine a standard-schedule
    stage, for file caching."""
    payload = json.dumps({"m": m, "k_m": k_m, "schema": STAGE_SCHEMA})
    return hashlib.sha256(payload.encode()).hexdigest()[:16]
