"""Shared fixtures: stages and the expensive stage-3 planning artifacts
are built once per session."""

import numpy as np
import pytest

from kakeya import rotation, stages


@pytest.fixture(scope="session")
def stage1():
    return stages.build_stage(1)


@pytest.fixture(scope="session")
def stage2():
    return stages.build_stage(2)


@pytest.fixture(scope="session")
def stage3():
    return stages.build_stage(3)


@pytest.fixture(scope="session")
def cover2(stage2):
    # the smallest station direction is arctan(1/16); delta = 0.09 gives it
    # enough margin to reach theta = 0
    return rotation.build_slab_cover(stage2, 0.09)


@pytest.fixture(scope="session")
def cover3(stage3):
    return rotation.build_slab_cover(stage3, 0.02)


@pytest.fixture(scope="session")
def schedule3(cover3):
    return rotation.plan_full_rotation(cover3, D=1000.0)


@pytest.fixture(scope="session")
def audit3(schedule3):
    return rotation.audit_square_sweep(schedule3, n_segments=64,
                                       resolution=2048, raster_checks=1)
