"""SVG frame export for planar motion schedules.

Renders a motion of the unit square as a sequence of standalone SVG
documents: each frame shows the square at one sampled time, the trace of
a chosen initially-vertical material segment, and (optionally) the
outline of the slab cover being swept.  An index document tiles all
frames for quick inspection.
"""

import os

import numpy as np

from .geometry import Pose, Rotate, Translate

_VERSION_COMMENT = "<!-- kakeya svg export 0.1.0 -->"


def pose_along(piece, frac):
    """Pose at parameter frac in [0, 1] along a single motion piece."""
    frac = float(np.clip(frac, 0.0, 1.0))
    start = piece.start
    if isinstance(piece, Translate):
        d = np.asarray(piece.direction)
        p = start.p + frac * piece.length * d
        return Pose((p[0], p[1]), start.angle)
    if isinstance(piece, Rotate):
        c = np.asarray(piece.center, dtype=float)
        a = frac * piece.angle
        rel = start.p - c
        p = c + np.array([rel[0] * np.cos(a) - rel[1] * np.sin(a),
                          rel[0] * np.sin(a) + rel[1] * np.cos(a)])
        return Pose((p[0], p[1]), start.angle + a)
    raise TypeError(f"unknown motion piece {type(piece).__name__}")


def sample_path(path, n_frames):
    """Poses at n_frames times spread uniformly in piece-parameter."""
    if not path.pieces:
        raise ValueError("cannot sample an empty motion path")
    n_frames = int(n_frames)
    if n_frames < 2:
        raise ValueError("need at least two frames")
    poses = []
    n_pieces = len(path.pieces)
    for k in range(n_frames):
        tau = k / (n_frames - 1) * n_pieces
        i = min(int(tau), n_pieces - 1)
        poses.append(pose_along(path.pieces[i], tau - i))
    return poses


def _fmt(x):
    return f"{x:.6f}"


def _square_points(pose):
    corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    return [pose.world(s, h) for s, h in corners]


def _view_box(point_sets, pad=0.1):
    pts = np.vstack(point_sets)
    lo = pts.min(axis=0) - pad
    hi = pts.max(axis=0) + pad
    return lo[0], lo[1], hi[0] - lo[0], hi[1] - lo[1]


def _frame_svg(pose, trace, cover_lines, view_box, size=480):
    x0, z0, w, h = view_box
    scale = size / max(w, h)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(w * scale)}" '
        f'height="{int(h * scale)}" viewBox="{_fmt(x0)} {_fmt(-z0 - h)} '
        f'{_fmt(w)} {_fmt(h)}">',
        _VERSION_COMMENT,
        # flip z up: draw in (x, -z) coordinates
        '<g fill="none" stroke-linejoin="round">',
    ]
    for (xa, za), (xb, zb) in cover_lines:
        lines.append(
            f'<line x1="{_fmt(xa)}" y1="{_fmt(-za)}" x2="{_fmt(xb)}" '
            f'y2="{_fmt(-zb)}" stroke="#9ecae1" stroke-width="{_fmt(1.2 / scale)}"/>'
        )
    if len(trace) >= 2:
        for side in (0, 1):
            pts = " ".join(f"{_fmt(p[side][0])},{_fmt(-p[side][1])}" for p in trace)
            lines.append(
                f'<polyline points="{pts}" stroke="#fdae6b" '
                f'stroke-width="{_fmt(1.0 / scale)}"/>'
            )
    sq = " ".join(f"{_fmt(p[0])},{_fmt(-p[1])}" for p in _square_points(pose))
    lines.append(
        f'<polygon points="{sq}" stroke="#333333" '
        f'stroke-width="{_fmt(1.6 / scale)}" fill="#33333311"/>'
    )
    a, b = trace[-1]
    lines.append(
        f'<line x1="{_fmt(a[0])}" y1="{_fmt(-a[1])}" x2="{_fmt(b[0])}" '
        f'y2="{_fmt(-b[1])}" stroke="#d62728" stroke-width="{_fmt(2.0 / scale)}"/>'
    )
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _cover_lines(cover, x_span=(0.0, 1.0)):
    if cover is None:
        return []
    out = []
    x0, x1 = x_span
    for a, b in zip(cover.a, cover.b):
        out.append(((x0, a + b * x0), (x1, a + b * x1)))
    return out


def render_frames(path, out_dir, n_frames=24, segment_h=0.5, cover=None,
                  prefix="frame", size=480):
    """Write one SVG per sampled time plus an index document.

    Returns the list of written frame filenames.  The traced segment is
    the initially-vertical material segment at height `segment_h`.
    """
    os.makedirs(out_dir, exist_ok=True)
    poses = sample_path(path, n_frames)
    trace = [(p.world(0.0, segment_h), p.world(1.0, segment_h)) for p in poses]
    cover_lines = _cover_lines(cover)
    point_sets = [np.vstack(_square_points(p)) for p in poses]
    point_sets += [np.array(seg) for seg in trace]
    if cover_lines:
        point_sets.append(np.array(cover_lines).reshape(-1, 2))
    view_box = _view_box(point_sets)

    names = []
    for k, pose in enumerate(poses):
        name = f"{prefix}_{k:03d}.svg"
        doc = _frame_svg(pose, trace[: k + 1], cover_lines, view_box, size=size)
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write(doc)
        names.append(name)
    _write_index(out_dir, names, size=size)
    return names


def _write_index(out_dir, names, size=480, columns=6, thumb=160):
    rows = (len(names) + columns - 1) // columns
    w = columns * thumb
    h = max(rows, 1) * thumb
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'xmlns:xlink="http://www.w3.org/1999/xlink" width="{w}" height="{h}">',
        _VERSION_COMMENT,
    ]
    for i, name in enumerate(names):
        x = (i % columns) * thumb
        y = (i // columns) * thumb
        lines.append(
            f'<image x="{x}" y="{y}" width="{thumb}" height="{thumb}" '
            f'xlink:href="{name}"/>'
        )
        lines.append(
            f'<text x="{x + 4}" y="{y + 14}" font-size="11" '
            f'fill="#555555">{name}</text>'
        )
    lines.append("</svg>")
    with open(os.path.join(out_dir, "index.svg"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
