import json

import numpy as np
import pytest

from kakeya.geometry import CellSet, Translate, validate_motion
from kakeya.rotation import (
    InterestingRect,
    PlanningError,
    build_slab_cover,
    certify_slices,
    gap_rule_delta,
    join_budget,
    load_schedule,
    pal_join,
    plan_full_rotation,
    project_to_square,
    raster_segment_sweep,
    rect_in_slab,
    save_schedule,
    schedule_from_dict,
    schedule_to_dict,
    segment_sweep_area,
    station_cover,
    station_for_slab,
    station_margin,
)


def test_interesting_rect_plane_triple():
    r = InterestingRect(base=(0.25, 0.5), theta=np.pi / 6)
    a, b, c = r.plane_triple()
    assert c * c - b * b == pytest.approx(1.0, abs=1e-12)
    # every material point lies on the plane z = a + b x + c h
    for s in (0.0, 0.3, 1.0):
        for h in (0.0, 0.6, 1.0):
            x, z = r.planar_point(s, h)
            assert z == pytest.approx(a + b * x + c * h, abs=1e-12)


def test_gap_rule_delta(stage2):
    delta = gap_rule_delta(stage2)
    assert delta == pytest.approx(1.0 / (2 * stage2.N))
    with pytest.raises(PlanningError):
        build_slab_cover(stage2, delta / 4.0)
    cover = build_slab_cover(stage2, delta)
    assert cover.n_slabs == stage2.N


def test_certify_slices_monotone_in_delta(stage2):
    small = build_slab_cover(stage2, 0.07)
    large = build_slab_cover(stage2, 0.14)
    eps_small = certify_slices(small)
    eps_large = certify_slices(large)
    assert 0.0 < eps_small < eps_large


def test_rect_in_slab_exact_corners(cover2):
    st = station_for_slab(cover2, 3)
    a = float(cover2.a[3])
    b = float(cover2.b[3])
    assert rect_in_slab(st.rect, a, b, cover2.delta)
    assert not rect_in_slab(st.rect, a + 10 * cover2.delta, b, cover2.delta)


def test_station_margin_keeps_rect_inside(cover2):
    st = station_for_slab(cover2, 2)
    a, b = float(cover2.a[2]), float(cover2.b[2])
    for phi in np.linspace(-st.margin, st.margin, 9):
        tilted = InterestingRect(base=st.rect.base, theta=st.rect.theta + phi)
        assert rect_in_slab(tilted, a, b, cover2.delta, tol=1e-9)


def test_station_cover_spans_quarter_turn(cover2):
    stations = station_cover(cover2)
    lo = min(st.lo for st in stations)
    hi = max(st.hi for st in stations)
    assert lo <= 0.0 <= hi
    assert hi >= np.pi / 4.0 - 1e-12


def test_pal_join_structure():
    frm = InterestingRect(base=(0.0, 0.0), theta=0.3)
    to = InterestingRect(base=(0.4, -0.2), theta=0.3)
    path, kinds, gamma = pal_join(frm, to, 100.0)
    assert kinds == ["join_translate", "join_rotate", "join_translate",
                     "join_rotate"]
    assert validate_motion(path).ok
    assert path.end.close_to(
        type(path.pieces[0].start)(to.base, frm.theta), tol=1e-9
    )
    # level segments are parallel to the free direction: translations
    # sweep zero cells
    cells = CellSet(512)
    t = path.pieces[0]
    p = t.start.world(0.0, 0.5)
    q = t.start.world(1.0, 0.5)
    d = np.asarray(t.direction)
    cells.add_quad(p, q, p + t.length * d, q + t.length * d)
    assert cells.count() == 0


def test_pal_join_budget_halves_with_distance():
    frm = InterestingRect(base=(0.0, 0.0), theta=0.1)
    to = InterestingRect(base=(0.3, 0.1), theta=0.1)
    budgets = {}
    for D in (100.0, 200.0, 1000.0, 2000.0, 10000.0, 20000.0):
        path, kinds, _ = pal_join(frm, to, D)
        budgets[D] = join_budget(path, kinds)
    for D in (100.0, 1000.0, 10000.0):
        ratio = budgets[2 * D] / budgets[D]
        assert abs(ratio - 0.5) <= 0.05


def test_plan_full_rotation_stage2(cover2):
    sched = plan_full_rotation(cover2, D=100.0)
    assert validate_motion(sched.path).ok
    assert sched.net_rotation == pytest.approx(2 * np.pi, abs=1e-9)
    assert sched.ledger.total > 0
    square_path = project_to_square(sched)
    assert square_path is sched.path


def test_plan_infeasible_target(cover2):
    with pytest.raises(PlanningError, match="achievable"):
        plan_full_rotation(cover2, target_eps=1e-6, D=100.0)


def test_degenerate_single_station_cover():
    # one slab whose margin is made huge: the planner still closes the loop
    from kakeya.rotation import SlabCover

    cover = SlabCover(a=np.array([0.0]), b=np.array([0.0]), delta=3.0,
                      n_box=2.5)
    sched = plan_full_rotation(cover, D=10.0)
    assert sched.net_rotation == pytest.approx(2 * np.pi, abs=1e-9)
    rotations = [k for k in sched.kinds if k == "station_rotation"]
    assert len(rotations) == 8


def test_audit_analytic_vs_raster(cover2):
    sched = plan_full_rotation(cover2, D=100.0)
    h = 0.5
    analytic = segment_sweep_area(sched, h)
    raster, err = raster_segment_sweep(sched, h, resolution=512)
    assert raster <= analytic + err
    assert analytic <= sched.ledger.total


def test_schedule_json_roundtrip(tmp_path, cover2):
    sched = plan_full_rotation(cover2, D=100.0)
    path = tmp_path / "sched.json"
    save_schedule(sched, path)
    back = load_schedule(path)
    assert len(back.path.pieces) == len(sched.path.pieces)
    assert back.kinds == sched.kinds
    assert back.ledger.total == pytest.approx(sched.ledger.total)
    assert back.net_rotation == pytest.approx(sched.net_rotation, abs=1e-12)
    doc = json.loads(path.read_text())
    assert doc["schema"] == "kakeya-schedule/1"
    with pytest.raises(PlanningError):
        schedule_from_dict({"schema": "nope/0"})
    d2 = schedule_to_dict(back)
    assert d2["pieces"] == schedule_to_dict(sched)["pieces"]
