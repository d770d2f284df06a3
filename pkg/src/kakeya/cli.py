"""Command-line front end.

Subcommands build and cache stages, measure projections, run claim
reports, certify slab covers, plan and audit full square rotations, plan
sphere needle motions, account 3-D swept volumes, and render SVG frames.

Exit codes: 0 on success; 1 on usage or input errors (including budget
overruns); 2 when a certified inequality fails — a mathematical
regression signal, not a crash.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import duality, rotation, spatial, stages, svgout

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BOUND = 2


class _UsageExit(SystemExit):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise _UsageExit(EXIT_USAGE)

    def exit(self, status=0, message=None):
        if message:
            sys.stderr.write(message)
        raise SystemExit(status if status == 0 else EXIT_USAGE)


def _build_parser():
    p = _Parser(prog="kakeya", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=1,
                   help="worker pool size for certification and audits")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="build a stage set (cached)")
    c.add_argument("--m", type=int, required=True)
    c.add_argument("--out")
    c.add_argument("--cache-dir")
    c.add_argument("--budget", type=int)

    c = sub.add_parser("measure", help="projection measures of a stage")
    c.add_argument("--stage", required=True)
    c.add_argument("--x", type=float)
    c.add_argument("--y", type=float)

    c = sub.add_parser("claim", help="grid claim report as CSV")
    c.add_argument("--stage", required=True)
    c.add_argument("--grid", type=int, default=5)
    c.add_argument("--limit", type=float, default=1.6)
    c.add_argument("--prev-stage")
    c.add_argument("--out")

    c = sub.add_parser("cover", help="slab cover + slice certificate")
    c.add_argument("--stage", required=True)
    c.add_argument("--delta", type=float)
    c.add_argument("--h-grid", type=int, default=64)
    c.add_argument("--x-grid", type=int, default=32)
    c.add_argument("--out")

    c = sub.add_parser("plan-square", help="schedule a full 2 pi rotation")
    c.add_argument("--stage", required=True)
    c.add_argument("--delta", type=float)
    c.add_argument("--D", type=float, default=1000.0)
    c.add_argument("--target-eps", type=float)
    c.add_argument("--h-grid", type=int, default=64)
    c.add_argument("--x-grid", type=int, default=32)
    c.add_argument("--out")

    c = sub.add_parser("audit", help="a-posteriori sweep audit of a schedule")
    c.add_argument("--schedule", required=True)
    c.add_argument("--segments", type=int, default=64)
    c.add_argument("--resolution", type=int, default=2048)
    c.add_argument("--raster-checks", type=int, default=1)
    c.add_argument("--out")

    c = sub.add_parser("plan-sphere", help="two-needle rotation plan")
    c.add_argument("--t", type=float, required=True)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--tol", type=float, default=1e-9)
    c.add_argument("--out")

    c = sub.add_parser("sweep3d", help="swept volume of a cylinderlike solid")
    c.add_argument("--schedule", required=True)
    c.add_argument("--solid", choices=["cylinder", "planes", "voxels"],
                   default="cylinder")
    c.add_argument("--voxels", help="voxel file for --solid voxels")
    c.add_argument("--radius", type=float, default=0.25)
    c.add_argument("--n-lines", type=int, default=2)
    c.add_argument("--out")

    c = sub.add_parser("render", help="SVG frames of a schedule")
    c.add_argument("--schedule", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--frames", type=int, default=24)
    c.add_argument("--segment-h", type=float, default=0.5)
    return p


def _load_stage_arg(path):
    if not os.path.exists(path):
        raise stages.StageError(f"stage file not found: {path}")
    return stages.load_stage(path)


def _cmd_construct(args):
    budget = stages.budget_from_env(args.budget)
    if args.cache_dir:
        os.makedirs(args.cache_dir, exist_ok=True)
        key = stages.stage_cache_key(args.m)
        cached = os.path.join(args.cache_dir, f"stage-{key}.json")
        if os.path.exists(cached):
            stage = stages.load_stage(cached)
        else:
            stage = stages.build_stage(args.m, budget=budget)
            stages.save_stage(stage, cached)
    else:
        stage = stages.build_stage(args.m, budget=budget)
    if args.out:
        stages.save_stage(stage, args.out)
    print(f"stage m={stage.m} rects={stage.N} eps={stage.eps_m:.17g} "
          f"a-projection={stage.a_projection_measure():.17g}")
    return EXIT_OK


def _cmd_measure(args):
    stage = _load_stage_arg(args.stage)
    a_proj = stage.a_projection_measure()
    print(f"a-projection {a_proj:.17g} bound {stage.eps_m:.17g}")
    code = EXIT_OK
    if a_proj > stage.eps_m + 1e-12:
        print("FAIL: a-projection exceeds the stage bound")
        code = EXIT_BOUND
    if args.x is not None or args.y is not None:
        x = args.x or 0.0
        y = args.y or 0.0
        d = duality.Direction2(x, y)
        measured = duality.stage_projection_measure(stage, d,
                                                    clip=duality.region_F(d))
        print(f"direction ({x:g}, {y:g}) measure {measured:.17g}")
    return code


def _cmd_claim(args):
    stage = _load_stage_arg(args.stage)
    prev = _load_stage_arg(args.prev_stage) if args.prev_stage else None
    dirs = duality.direction_grid(args.grid, args.limit)
    rows = duality.claim_report(stage, dirs, prev_stage=prev)
    if args.out:
        duality.write_claim_csv(rows, args.out)
    bad = [r for r in rows if r.covered_by_claim and not r.passed]
    n_cov = sum(1 for r in rows if r.covered_by_claim)
    print(f"claim rows {len(rows)} covered {n_cov} failures {len(bad)}")
    return EXIT_BOUND if bad else EXIT_OK


def _cmd_cover(args):
    stage = _load_stage_arg(args.stage)
    delta = args.delta if args.delta is not None \
        else rotation.gap_rule_delta(stage)
    cover = rotation.build_slab_cover(stage, delta)
    eps = rotation.certify_slices(cover, h_grid=args.h_grid,
                                  x_grid=args.x_grid)
    doc = {
        "schema": "kakeya-cover/1",
        "delta": float(delta),
        "certified_eps": float(eps),
        "a": [float(v) for v in cover.a],
        "b": [float(v) for v in cover.b],
    }
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
    print(f"slabs {len(cover.a)} delta {delta:.17g} certified_eps {eps:.17g}")
    return EXIT_OK


def _cmd_plan_square(args):
    stage = _load_stage_arg(args.stage)
    delta = args.delta if args.delta is not None \
        else rotation.gap_rule_delta(stage)
    cover = rotation.build_slab_cover(stage, delta)
    sched = rotation.plan_full_rotation(cover, target_eps=args.target_eps,
                                        D=args.D, h_grid=args.h_grid,
                                        x_grid=args.x_grid)
    if args.out:
        rotation.save_schedule(sched, args.out)
    print(f"pieces {len(sched.path.pieces)} net rotation "
          f"{sched.net_rotation:.17g} ledger {sched.ledger.total:.17g}")
    return EXIT_OK


def _cmd_audit(args):
    sched = rotation.load_schedule(args.schedule)
    report = rotation.audit_square_sweep(sched, n_segments=args.segments,
                                         resolution=args.resolution,
                                         raster_checks=args.raster_checks)
    if args.out:
        rotation.write_audit_csv(report, args.out)
    print(f"max segment sweep {report.max_area:.17g} ledger "
          f"{report.ledger_total:.17g} ok {report.ok}")
    return EXIT_OK if report.ok else EXIT_BOUND


def _random_config(t, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=3)
    n1 = v / np.linalg.norm(v)
    w = rng.normal(size=3)
    axis = np.cross(n1, w)
    axis /= np.linalg.norm(axis)
    n2 = spatial.rodrigues(n1, axis, t)
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w0, x, y, z = q
    R = np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w0 * z), 2 * (x * z + w0 * y)],
        [2 * (x * y + w0 * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w0 * x)],
        [2 * (x * z - w0 * y), 2 * (y * z + w0 * x), 1 - 2 * (x * x + y * y)],
    ])
    return spatial.SphereConfig(tuple(n1), tuple(n2), tuple(R @ n1),
                                tuple(R @ n2))


def _cmd_plan_sphere(args):
    if not 1e-9 < args.t < np.pi - 1e-9:
        raise spatial.SpatialError("needles collinear")
    cfg = _random_config(args.t, args.seed)
    steps = spatial.plan_needles(cfg)
    f1, f2, drift = spatial.apply_steps(cfg, steps)
    err = max(spatial.arc(f1, cfg.p1), spatial.arc(f2, cfg.p2))
    if args.out:
        spatial.save_plan(steps, args.out)
    print(f"steps {len(steps)} final error {err:.3e} drift {drift:.3e}")
    return EXIT_OK if err <= args.tol and drift <= 1e-12 else EXIT_BOUND


def _cmd_sweep3d(args):
    sched = rotation.load_schedule(args.schedule)
    if args.solid == "cylinder":
        solid = spatial.cylinder_surface(r=args.radius)
    elif args.solid == "planes":
        solid = spatial.vertical_planes([0.25, 0.75])
    else:
        if not args.voxels:
            raise spatial.SpatialError("--solid voxels requires --voxels")
        occ, spacing = spatial.load_voxels(args.voxels)
        solid = spatial.solid_from_voxels(occ, spacing)
    ok, exc = spatial.is_cylinderlike(solid, args.n_lines)
    if not ok:
        raise spatial.SpatialError(
            f"solid is not cylinderlike with n={args.n_lines} "
            f"(exception measure {exc:g})"
        )
    volume, areas = spatial.sweep_volume(solid, sched)
    if args.out:
        spatial.write_volume_csv(solid, areas, args.out)
    bound = args.n_lines * sched.ledger.total * solid.x_range.length
    print(f"volume {volume:.17g} bound {bound:.17g}")
    return EXIT_OK if volume <= bound + 1e-9 else EXIT_BOUND


def _cmd_render(args):
    sched = rotation.load_schedule(args.schedule)
    names = svgout.render_frames(sched.path, args.out, n_frames=args.frames,
                                 segment_h=args.segment_h,
                                 cover=sched.active_cover)
    print(f"wrote {len(names)} frames + index to {args.out}")
    return EXIT_OK


_COMMANDS = {
    "construct": _cmd_construct,
    "measure": _cmd_measure,
    "claim": _cmd_claim,
    "cover": _cmd_cover,
    "plan-square": _cmd_plan_square,
    "audit": _cmd_audit,
    "plan-sphere": _cmd_plan_sphere,
    "sweep3d": _cmd_sweep3d,
    "render": _cmd_render,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except stages.StageBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (stages.StageError, spatial.SpatialError, rotation.PlanningError,
            OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
