import numpy as np
import pytest

from kakeya.duality import (
    Direction2,
    PlaneTriple,
    claim_bound,
    claim_report,
    direction_grid,
    funnel_families,
    lift_f,
    mc_oracle,
    midsegment,
    project_lifted_rect,
    region_F,
    stage_projection_measure,
    tangent_slope,
    verify_funnel,
)
from kakeya.geometry import AxisRect
from kakeya.stages import initial_stage, schedule_params


def test_lift_lands_on_sheet():
    for b in np.linspace(-3, 3, 13):
        t = lift_f(0.7, b)
        assert t.c**2 - t.b**2 == pytest.approx(1.0, abs=1e-12)
        assert t.c > 0


def test_plane_triple_validation():
    with pytest.raises(ValueError):
        PlaneTriple(0.0, 1.0, 1.0)  # c^2 - b^2 = 0, off the sheet
    t = PlaneTriple(1.0, 0.0, 1.0)
    assert t.height_at(2.0, 3.0) == pytest.approx(4.0)


def test_tangent_slope_formula():
    d = Direction2(0.5, -2.0)
    for b in (-1.0, 0.0, 0.7):
        expect = -d.x - d.y * b / np.sqrt(1 + b * b)
        assert tangent_slope(d, b) == pytest.approx(expect, abs=1e-15)


def test_region_F_kinds():
    assert region_F(Direction2(-1.0, 0.0)).kind == "all"
    assert region_F(Direction2(1.0, 0.0)).kind == "empty"
    # slope 0 at b*: -x = y b / sqrt(1+b^2)
    F = region_F(Direction2(-0.5, 1.0))
    assert F.kind == "b_at_most"
    assert tangent_slope(Direction2(-0.5, 1.0), F.b_star) == pytest.approx(
        0.0, abs=1e-12
    )
    F = region_F(Direction2(0.5, -1.0))
    assert F.kind == "b_at_least"


def test_project_lifted_rect_vs_sampling():
    rng = np.random.default_rng(11)
    for _ in range(25):
        a0 = rng.uniform(-1, 1)
        b0 = rng.uniform(-2, 2)
        r = AxisRect(a0, a0 + rng.uniform(0.01, 1), b0,
                     b0 + rng.uniform(0.01, 2))
        d = Direction2(rng.uniform(-3, 3), rng.uniform(-3, 3))
        iv = project_lifted_rect(r, d)
        aa = rng.uniform(r.a0, r.a1, 400)
        bb = rng.uniform(r.b0, r.b1, 400)
        s = aa + d.x * bb + d.y * np.sqrt(1 + bb * bb)
        assert s.min() >= iv.lo - 1e-12
        assert s.max() <= iv.hi + 1e-12
        # endpoints are attained up to sampling slack
        assert s.min() - iv.lo < 0.05 * (iv.hi - iv.lo) + 0.05


def test_stage_projection_a_direction(stage2):
    # direction (1, 0, 0) reduces to the plain a-projection
    d = Direction2(0.0, 0.0)
    assert stage_projection_measure(stage2, d) == pytest.approx(
        stage2.a_projection_measure(), abs=1e-15
    )


def test_mc_oracle_agreement(stage2):
    d = Direction2(-0.8, 0.4)
    exact = stage_projection_measure(stage2, d)
    est, ci = mc_oracle(stage2, d, samples=100_000, rng=5)
    assert abs(est - exact) <= 3.0 * ci


def test_claim_bound_value():
    assert claim_bound(0.0, 0.0, 2) == pytest.approx(1.5)
    assert claim_bound(1.0, 2.0, 3) == pytest.approx(3 * np.sqrt(6) / 4)


def test_claim_report_even_stage_only(stage3):
    with pytest.raises(ValueError):
        claim_report(stage3, [Direction2(0.0, 0.0)])


def test_claim_report_grid(stage2):
    rows = claim_report(stage2, direction_grid(5, 1.6))
    assert len(rows) == 25
    covered = [r for r in rows if r.covered_by_claim]
    assert covered, "expected some covered directions"
    assert all(r.passed for r in covered)
    at_origin = [r for r in rows if r.x == 0.0 and r.y == 0.0][0]
    assert at_origin.bound == pytest.approx(1.5)
    assert at_origin.measured <= 1.5


def test_funnel_families_pass_at_default_scale():
    p = schedule_params(1, 1.0, 1)
    fams = list(funnel_families(initial_stage().axis_rects()[0], p.k_m,
                                1.0, 1))
    assert fams
    for seg, grandchildren, lo, hi in fams:
        assert len(grandchildren) == 4
        assert verify_funnel(seg, grandchildren, lo, hi)


def test_funnel_fails_at_unit_scale():
    p = schedule_params(1, 1.0, 1)
    fams = list(funnel_families(initial_stage().axis_rects()[0], p.k_m,
                                1.0, 1, scale=1.0))
    results = [verify_funnel(seg, g, lo, hi) for seg, g, lo, hi in fams]
    assert not all(results)


def test_midsegment_scaling():
    P = AxisRect(0.0, 1.0, 0.0, 1.0).as_parallelogram()
    seg = midsegment(P, scale=1.5)
    (x0, z0), (x1, z1) = seg
    assert z0 == pytest.approx(0.5) and z1 == pytest.approx(0.5)
    assert abs(x1 - x0) == pytest.approx(1.5)
