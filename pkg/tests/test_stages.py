import json

import numpy as np
import pytest

from kakeya.stages import (
    StageBudgetError,
    StageError,
    StageSet,
    _stage_tangent,
    advance_stage,
    build_stage,
    discretize_leaf,
    initial_stage,
    load_stage,
    reflect_stage,
    save_stage,
    schedule_params,
    split_step,
    sprout,
    sprout_generations,
    stage_cache_key,
    stage_containment_violations,
    stage_from_dict,
    stage_to_dict,
)


def test_schedule_params_first_step():
    p = schedule_params(1, 1.0, 1)
    assert p.eps_next == pytest.approx(1.0 / 3.0)
    assert p.N_next == 8
    assert p.N_next % (1 << p.k_m) == 0


def test_schedule_params_containment_factor():
    # the minimal per-band refinement 2^k * N is not fine enough to keep
    # the discretized staircase inside its leaves; the schedule takes the
    # first multiple that is
    p = schedule_params(2, 1.0 / 3.0, 8)
    assert p.eps_next == pytest.approx(0.25)
    assert p.N_next % (1 << p.k_m) == 0
    assert p.N_next >= 2 * 2 / p.eps_next
    tau = p.k_m * p.eps_m / 2.0
    assert p.N_next >= (1 << p.k_m) * p.N * (tau + p.eps_next) - 1e-6


def test_initial_stage_is_unit_square():
    s = initial_stage()
    assert s.m == 1 and s.N == 1 and s.eps_m == 1.0
    assert s.a_projection_measure() == 1.0
    np.testing.assert_allclose(s.rects, [[0.0, 1.0, 0.0, 1.0]])


def test_reflect_stage_involution(stage2):
    back = reflect_stage(reflect_stage(stage2))
    np.testing.assert_allclose(back.rects, stage2.rects, atol=1e-12)


def test_split_step_geometry():
    root = initial_stage().axis_rects()[0].as_parallelogram()
    lo, hi = split_step(root, 1, 1.0, 1)
    for child in (lo, hi):
        assert child.edge_u[0] == pytest.approx(0.5)
        assert child.edge_v[1] == pytest.approx(0.5)
        assert _stage_tangent(child) == pytest.approx(0.5)
        assert root.contains_parallelogram(child)
    assert lo.area + hi.area == pytest.approx(root.area / 2.0)


def test_split_step_rejects_nonconforming():
    bad = initial_stage().axis_rects()[0].as_parallelogram()
    with pytest.raises(StageError):
        split_step(bad, 2, 1.0, 1)  # generation-1 shape expected


def test_sprout_counts_and_order():
    gens = sprout_generations(initial_stage().axis_rects()[0], 3, 1.0, 1)
    assert [len(g) for g in gens] == [1, 2, 4, 8]
    leaves = sprout(initial_stage().axis_rects()[0], 3, 1.0, 1)
    bots = [P.anchor[1] for P in leaves]
    assert bots == sorted(bots)


def test_discretize_leaf_within_band():
    p = schedule_params(1, 1.0, 1)
    leaves = sprout(initial_stage().axis_rects()[0], p.k_m, 1.0, 1)
    rects = discretize_leaf(leaves[0], p.N_next, p.eps_next)
    leaf = leaves[0]
    for r in rects:
        assert r.width == pytest.approx(p.eps_next / p.N_next, abs=1e-15)
        # staircase stays inside the slanted leaf
        for v in r.vertices():
            assert leaf.contains(v, tol=1e-9)


def test_advance_stage_certificate(stage1, stage2):
    assert stage2.m == 2
    assert stage2.N == 8
    assert stage2.a_projection_measure() <= stage2.eps_m + 1e-15
    assert stage_containment_violations(stage2, stage1) == 0


def test_stage3_contained_in_stage2(stage2, stage3):
    assert stage3.N == 229376
    assert stage_containment_violations(stage3, stage2) == 0


def test_stage_json_roundtrip(tmp_path, stage2):
    path = tmp_path / "s2.json"
    save_stage(stage2, path)
    back = load_stage(path)
    assert back.m == stage2.m and back.N == stage2.N
    np.testing.assert_allclose(back.rects, stage2.rects, atol=1e-15)
    doc = json.loads(path.read_text())
    assert doc["schema"] == "kakeya-stage/1"


def test_stage_dict_schema_guard(stage2):
    doc = stage_to_dict(stage2)
    doc["schema"] = "bogus/9"
    with pytest.raises(StageError):
        stage_from_dict(doc)


def test_canonical_band_validation():
    rects = np.array([[0.0, 0.5, 0.2, 1.0]])
    with pytest.raises(StageError):
        StageSet(rects=rects, m=1, eps_m=0.5, N=1)


def test_budget_enforced():
    with pytest.raises(StageBudgetError):
        build_stage(3, budget=1000)


def test_budget_env_override(monkeypatch):
    monkeypatch.setenv("KAKEYA_BUDGET", "4")
    with pytest.raises(StageBudgetError):
        build_stage(2)


def test_cache_key_stable():
    assert stage_cache_key(3) == stage_cache_key(3)
    assert stage_cache_key(2) != stage_cache_key(3)
