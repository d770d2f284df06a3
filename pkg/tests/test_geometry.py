import numpy as np
import pytest

from kakeya.geometry import (
    AxisRect,
    CellSet,
    GeometryError,
    Interval,
    MotionPath,
    Parallelogram,
    Pose,
    Rotate,
    Translate,
    merge_intervals,
    polygon_area,
    project_set,
    rotation_sweep_area,
    sample_rotation,
    swept_region_area,
    union_measure,
    union_measure_rows,
    validate_motion,
)


def test_union_measure_basic():
    assert union_measure([]) == 0.0
    assert union_measure([Interval(0.0, 1.0)]) == 1.0
    ivs = [Interval(0.0, 1.0), Interval(0.5, 2.0), Interval(3.0, 4.0)]
    assert union_measure(ivs) == pytest.approx(3.0, abs=0.0)
    nested = np.array([[0.0, 4.0], [1.0, 2.0], [2.5, 3.0]])
    assert union_measure(nested) == 4.0


def test_union_measure_rows_matches_scalar():
    rng = np.random.default_rng(3)
    lo = rng.random((5, 7))
    hi = lo + rng.random((5, 7))
    rows = union_measure_rows(lo, hi)
    for r in range(5):
        expect = union_measure(np.column_stack([lo[r], hi[r]]))
        assert rows[r] == pytest.approx(expect, abs=1e-15)


def test_merge_intervals_canonical():
    out = merge_intervals([Interval(1.0, 2.0), Interval(0.0, 1.5),
                           Interval(3.0, 4.0)])
    assert [(iv.lo, iv.hi) for iv in out] == [(0.0, 2.0), (3.0, 4.0)]


def test_interval_validation():
    with pytest.raises(GeometryError):
        Interval(2.0, 1.0)
    assert Interval(1.0, 3.0).intersect(Interval(2.0, 5.0)).length == 1.0


def test_project_set_rect_and_parallelogram():
    r = AxisRect(0.0, 2.0, 0.0, 1.0)
    iv = project_set(np.array([1.0, 0.0]), r)
    assert (iv.lo, iv.hi) == (0.0, 2.0)
    P = Parallelogram(anchor=(0.0, 0.0), edge_u=(1.0, 0.0), edge_v=(0.5, 1.0))
    iv = project_set(np.array([0.0, 1.0]), P)
    assert (iv.lo, iv.hi) == (0.0, 1.0)
    assert P.area == pytest.approx(1.0)


def test_polygon_area():
    sq = [(0, 0), (1, 0), (1, 1), (0, 1)]
    assert polygon_area(sq) == pytest.approx(1.0)
    tri = [(0, 0), (2, 0), (0, 2)]
    assert polygon_area(tri) == pytest.approx(2.0)
    bowtie = [(0, 0), (1, 1), (1, 0), (0, 1)]
    with pytest.raises(GeometryError):
        polygon_area(bowtie)


def test_motion_chain_and_validation():
    p0 = Pose((0.0, 0.0), 0.0)
    t = Translate(start=p0, direction=(1.0, 0.0), length=2.0)
    r = Rotate(start=t.end, center=t.end.point, angle=np.pi / 2)
    path = MotionPath([t, r])
    assert validate_motion(path).ok
    assert path.net_rotation == pytest.approx(np.pi / 2)
    broken = MotionPath([t, Rotate(start=p0, center=(0, 0), angle=0.1)])
    report = validate_motion(broken)
    assert not report.ok and report.violation_index == 1


def test_pose_world_coordinates():
    pose = Pose((1.0, 2.0), np.pi / 2)
    pt = pose.world(1.0, 0.5)
    assert pt == pytest.approx(np.array([0.5, 3.0]))


def test_cellset_triangle_area():
    cells = CellSet(512)
    cells.add_triangle((0.0, 0.0), (1.0, 0.0), (0.0, 1.0))
    assert cells.area() == pytest.approx(0.5, abs=5e-3)


def test_cellset_thin_diagonal_sliver_is_cheap():
    # a sliver along the diagonal of a unit box covers few cells even
    # though its bounding box is the whole box
    cells = CellSet(2048)
    cells.add_triangle((0.0, 0.0), (1.0, 1.0), (1.0 + 1e-4, 1.0))
    assert cells.count() < 3 * 2048


def test_full_turn_sweep_area():
    # unit segment rotated a full turn about its midpoint sweeps pi/4
    center = np.array([0.5, 0.5])
    p = np.array([0.0, 0.5])
    q = np.array([1.0, 0.5])
    poses = sample_rotation(p, q, center, 2.0 * np.pi, max_step=0.4 / 512)
    area, err = swept_region_area(poses, 512)
    assert area == pytest.approx(np.pi / 4, rel=2e-3)
    assert abs(area - np.pi / 4) <= err


def test_rotation_sweep_area_matches_raster():
    p = np.array([0.2, 0.1])
    q = np.array([1.2, 0.1])
    center = np.array([0.2, 0.1])
    angle = 0.2
    analytic, corr = rotation_sweep_area(p, q, center, angle)
    poses = sample_rotation(p, q, center, angle, max_step=0.4 / 1024)
    raster, err = swept_region_area(poses, 1024)
    assert raster <= analytic + corr + err
    assert analytic == pytest.approx(0.5 * angle, rel=1e-12)
