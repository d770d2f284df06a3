import numpy as np
import pytest

from kakeya.geometry import Pose, Translate
from kakeya.spatial import (
    RotationStep,
    SpatialError,
    SphereConfig,
    apply_steps,
    arc,
    cylinder_surface,
    is_cylinderlike,
    line_count_profile,
    load_voxels,
    plan_needles,
    rodrigues,
    save_plan,
    save_voxels,
    slice_cover_profile,
    solid_box,
    solid_from_voxels,
    step_bound,
    strong_kakeya_plan,
    sweep_volume,
    vertical_planes,
)

E1, E2, E3 = (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)


def _identity_schedule():
    import types

    pose = Pose((0.0, 0.0), 0.0)
    piece = Translate(start=pose, direction=(1.0, 0.0), length=0.0)
    return types.SimpleNamespace(
        path=types.SimpleNamespace(pieces=[piece]), kinds=["join"]
    )


def _random_config(rng, t):
    v = rng.normal(size=3)
    n1 = v / np.linalg.norm(v)
    axis = np.cross(n1, rng.normal(size=3))
    axis /= np.linalg.norm(axis)
    n2 = rodrigues(n1, axis, t)
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    R = np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])
    return SphereConfig(tuple(n1), tuple(n2), tuple(R @ n1), tuple(R @ n2))


def test_sphere_config_validation():
    with pytest.raises(SpatialError, match="unit"):
        SphereConfig((2.0, 0.0, 0.0), E2, E1, E2)
    with pytest.raises(SpatialError, match="separations"):
        SphereConfig(E1, E2, E1, (0.6, 0.8, 0.0))
    with pytest.raises(SpatialError, match="collinear"):
        SphereConfig(E1, (-1.0, 0.0, 0.0), E2, (0.0, -1.0, 0.0))


def test_rotation_step_validation():
    with pytest.raises(SpatialError):
        RotationStep("needle3", 0.1)
    with pytest.raises(SpatialError):
        RotationStep("needle1", 4.0)


def test_plan_trivial_and_quarter_turn_example():
    assert plan_needles(SphereConfig(E3, E1, E3, E1)) == []
    cfg = SphereConfig(E3, E1, E1, E2)
    steps = plan_needles(cfg)
    assert len(steps) <= 3
    f1, f2, drift = apply_steps(cfg, steps)
    assert arc(f1, cfg.p1) <= 1e-9
    assert arc(f2, cfg.p2) <= 1e-9
    assert drift <= 1e-12


def test_plan_preserves_needle_separation():
    rng = np.random.default_rng(2)
    for t in (0.3, 1.2, np.pi / 2, 2.4, 2.9):
        cfg = _random_config(rng, t)
        steps = plan_needles(cfg)
        f1, f2, drift = apply_steps(cfg, steps)
        assert arc(f1, cfg.p1) <= 1e-9
        assert arc(f2, cfg.p2) <= 1e-9
        assert drift <= 1e-12
        # effective stride is 2*min(t, pi - t) per case-1 iteration
        t_eff = min(t, np.pi - t)
        assert len(steps) <= 2 * int(np.ceil(np.pi / (2 * t_eff))) + 3


def test_step_bound_formula():
    assert step_bound(np.pi / 2) == 5
    assert step_bound(0.1) == 2 * 16 + 3


def test_plan_to_file(tmp_path):
    cfg = SphereConfig(E3, E1, E1, E2)
    steps = plan_needles(cfg)
    out = tmp_path / "plan.json"
    save_plan(steps, out)
    assert '"kakeya-needles/1"' in out.read_text()


def test_cylinder_is_cylinderlike():
    cyl = cylinder_surface()
    ok, exc = is_cylinderlike(cyl, 2)
    assert ok and exc == 0.0
    ok, _ = is_cylinderlike(cyl, 1)
    assert not ok
    counts = [c for _, c in slice_cover_profile(cyl)]
    assert max(counts) == 2


def test_box_not_cylinderlike_planes_are():
    ok, _ = is_cylinderlike(solid_box(), 2)
    assert not ok
    ok, exc = is_cylinderlike(vertical_planes([0.2, 0.5, 0.8]), 3)
    assert ok and exc == 0.0


def test_sweep_volume_identity_zero():
    vol, areas = sweep_volume(cylinder_surface(), _identity_schedule())
    assert vol == 0.0
    assert all(a == 0.0 for a in areas)


def test_sweep_volume_fubini_consistency():
    sched = _identity_schedule()
    K = cylinder_surface()
    vol, areas = sweep_volume(K, sched)
    assert vol == pytest.approx(sum(areas) * K.dx)


def test_sweep_rejects_out_of_square_shadow():
    K = cylinder_surface(r=0.25, center=(0.5, 2.0))
    with pytest.raises(SpatialError, match="does not fit"):
        sweep_volume(K, _identity_schedule())


def test_voxel_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    occ = rng.random((6, 5, 4)) < 0.4
    path = tmp_path / "vox.txt"
    save_voxels(occ, 0.25, path)
    back, spacing = load_voxels(path)
    assert np.array_equal(occ, back)
    assert spacing == 0.25
    solid = solid_from_voxels(back, spacing)
    assert solid.n_slices == 6


def test_line_count_profiles():
    th = np.linspace(0, 2 * np.pi, 4000, endpoint=False)
    circle = np.column_stack([0.5 + 0.25 * np.cos(th),
                              0.5 + 0.25 * np.sin(th)])
    assert line_count_profile(circle, 0.0) == 2
    xs = np.linspace(0.05, 0.95, 4000)
    lip = np.column_stack([xs, 0.5 + 0.4 * np.abs(xs - 0.5)])
    assert line_count_profile(lip, 0.0) == 1
    two = np.vstack([
        np.column_stack([xs, 0.2 + 0.5 * xs]),
        np.column_stack([xs, 0.9 - 0.6 * xs**2]),
    ])
    assert line_count_profile(two, 0.0) <= 2
    assert line_count_profile(two, np.pi / 2) <= 2


def test_strong_kakeya_plan():
    cyl = cylinder_surface()
    plan = strong_kakeya_plan(cyl, E3, E1, np.eye(3), sweep_eps=0.5)
    assert plan.steps == [] and plan.final_error <= 1e-12
    Ry = np.array([[0, 0, 1], [0, 1, 0], [-1, 0, 0]], dtype=float)
    plan = strong_kakeya_plan(cyl, E3, E1, Ry, sweep_eps=0.5)
    assert plan.final_error <= 1e-9
    assert len(plan.axes) == len(plan.steps)
    assert all(b == pytest.approx(2 * 0.5 * cyl.x_range.length)
               for b in plan.per_step_budget)
    with pytest.raises(SpatialError, match="non-parallel"):
        strong_kakeya_plan(cyl, E3, (0.0, 0.0, -1.0), Ry, sweep_eps=0.5)
    with pytest.raises(SpatialError, match="cylinderlike"):
        strong_kakeya_plan(solid_box(), E3, E1, Ry, sweep_eps=0.5)
