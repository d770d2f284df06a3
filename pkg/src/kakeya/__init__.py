"""Certified finite-scale Kakeya constructions.

Staged Besicovitch-type rectangle sets, their dual families of 45-degree
planes, small-sweep full rotations of the unit square, and 3-D motion
plans for cylinderlike solids.
"""

from .geometry import (
    AxisRect,
    Interval,
    MotionPath,
    Parallelogram,
    Pose,
    Rotate,
    Translate,
    polygon_area,
    project_set,
    swept_region_area,
    union_measure,
    validate_motion,
)
from .stages import (
    StageParams,
    StageSet,
    advance_stage,
    build_stage,
    initial_stage,
    load_stage,
    reflect_stage,
    save_stage,
    schedule_params,
)
from .duality import (
    Direction2,
    PlaneTriple,
    claim_bound,
    claim_report,
    lift_f,
    mc_oracle,
    region_F,
    stage_projection_measure,
    verify_funnel,
)
from .rotation import (
    InterestingRect,
    Schedule,
    SlabCover,
    audit_square_sweep,
    build_slab_cover,
    certify_slices,
    gap_rule_delta,
    load_schedule,
    plan_full_rotation,
    project_to_square,
    save_schedule,
)
from .spatial import (
    SlicedSolid,
    SphereConfig,
    cylinder_surface,
    is_cylinderlike,
    plan_needles,
    strong_kakeya_plan,
    sweep_volume,
)

__version__ = "0.1.0"
