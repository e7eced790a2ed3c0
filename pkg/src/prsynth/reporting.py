"""Result exports: archive tables, Pareto projections, radar charts and
kinematic sketches.

All artifacts are deterministic functions of their inputs (fixed float
formatting, no timestamps), so re-exporting from a checkpoint reproduces
them byte for byte.  Plots are self-contained SVG.
"""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from .families import get_family
from .geometry import build_collision_set
from .kinematics import KinematicState, state_fk
from .model import RobotModel
from .objectives import OBJECTIVE_SENSE, OBJECTIVE_UNITS, ObjectiveVector
from .optimizer import ArchiveRecord, dominates

# objective pairs of the standard two-dimensional front exports
PROJECTION_PAIRS = (("f3", "f4"), ("f4", "f5"), ("f1", "f5"), ("f5", "f6"))

RADAR_AXES = ("f1", "f3", "f4", "f5", "f6")

_SOFT_KEYS = ("f1", "f2", "f3", "f5")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


# ---------------------------------------------------------------------------
# archive table


def archive_csv_text(records: list[ArchiveRecord], family_name: str) -> str:
    """CSV with parameters, objectives (units in headers) and gate flags."""
    family = get_family(family_name)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = (["family", "mode_pattern"]
              + [f"p_{name}" for name in family.param_names]
              + [f"{n} [{OBJECTIVE_UNITS[n]}]" for n in
                 ("f1", "f2", "f3", "f4", "f5", "f6")]
              + ["position_error [m]", "condition [-]", "stress_utilization [-]",
                 "tube_diameter [m]", "tube_wall [m]"]
              + [f"soft_violation_{k}" for k in _SOFT_KEYS])
    writer.writerow(header)
    for rec in records:
        o = rec.objectives
        section = rec.design_section or (float("nan"), float("nan"))
        row = ([family_name, rec.mode_pattern]
               + [_fmt(v) for v in rec.p_ext[:-1]]
               + [_fmt(v) for v in (o.f1, o.f2, o.f3, o.f4, o.f5, o.f6)]
               + [_fmt(o.position_error), _fmt(o.condition),
                  _fmt(o.stress_utilization)]
               + [_fmt(section[0]), _fmt(section[1])]
               + [_fmt(bool(o.soft_flags.get(k, False))) for k in _SOFT_KEYS])
        writer.writerow(row)
    return buf.getvalue()


def write_archive_csv(records: list[ArchiveRecord], family_name: str,
                      path: str) -> None:
    with open(path, "w") as fh:
        fh.write(archive_csv_text(records, family_name))


def read_archive_csv(path: str) -> list[dict]:
    """Archive rows with parameters, objectives and flags parsed back."""
    out = []
    with open(path) as fh:
        reader = csv.DictReader(fh)
        for raw in reader:
            rec = {"family": raw["family"], "mode_pattern": raw["mode_pattern"]}
            params = [v for k, v in raw.items() if k.startswith("p_")]
            rec["p"] = np.array([float(v) for v in params])
            for n in ("f1", "f2", "f3", "f4", "f5", "f6"):
                rec[n] = float(raw[f"{n} [{OBJECTIVE_UNITS[n]}]"])
            rec["position_error"] = float(raw["position_error [m]"])
            rec["condition"] = float(raw["condition [-]"])
            rec["stress_utilization"] = float(raw["stress_utilization [-]"])
            rec["tube_diameter"] = float(raw["tube_diameter [m]"])
            rec["tube_wall"] = float(raw["tube_wall [m]"])
            rec["soft_violations"] = {k: raw[f"soft_violation_{k}"] == "1"
                                      for k in _SOFT_KEYS}
            rec["feasible_soft"] = not any(rec["soft_violations"].values())
            out.append(rec)
    return out


# ---------------------------------------------------------------------------
# 2D Pareto projections


def pareto_projection(records: list[ArchiveRecord],
                      pair: tuple[str, str]) -> list[tuple[ArchiveRecord, bool]]:
    """Records on the 2D front of the given objective pair.

    Dominance is evaluated on the pair only (minimization orientation).
    Soft-gate violators participate but are marked for translucent
    rendering; the survivors that pass the soft gates are mutually
    non-dominated also after dropping the violators."""
    sense = np.array([OBJECTIVE_SENSE[pair[0]], OBJECTIVE_SENSE[pair[1]]])
    vals = [sense * np.array([getattr(r.objectives, pair[0]),
                              getattr(r.objectives, pair[1])]) for r in records]
    keep = []
    for i, rec in enumerate(records):
        if any(dominates(vals[j], vals[i]) for j in range(len(records)) if j != i):
            continue
        keep.append((rec, rec.feasible_soft))
    keep.sort(key=lambda t: getattr(t[0].objectives, pair[0]))
    return keep


def front_svg(records: list[ArchiveRecord], pair: tuple[str, str],
              width: int = 420, height: int = 320) -> str:
    """Scatter plot of one 2D front projection; soft-gate violators are
    drawn translucent."""
    entries = pareto_projection(records, pair)
    xs = np.array([getattr(r.objectives, pair[0]) for r, _ in entries])
    ys = np.array([getattr(r.objectives, pair[1]) for r, _ in entries])
    parts = [_svg_open(width, height)]
    m = 50
    parts.append(_axes(width, height, m,
                       f"{pair[0]} [{OBJECTIVE_UNITS[pair[0]]}]",
                       f"{pair[1]} [{OBJECTIVE_UNITS[pair[1]]}]"))
    if len(entries):
        x0, x1 = _pad_range(xs.min(), xs.max())
        y0, y1 = _pad_range(ys.min(), ys.max())
        for tick in np.linspace(x0, x1, 5):
            px = m + (tick - x0) / (x1 - x0) * (width - 2 * m)
            parts.append(f'<text x="{px:.1f}" y="{height - m + 16}" '
                         f'font-size="9" text-anchor="middle">{tick:.3g}</text>')
        for tick in np.linspace(y0, y1, 5):
            py = height - m - (tick - y0) / (y1 - y0) * (height - 2 * m)
            parts.append(f'<text x="{m - 6}" y="{py:.1f}" font-size="9" '
                         f'text-anchor="end">{tick:.3g}</text>')
        for (rec, clean), x, y in zip(entries, xs, ys):
            px = m + (x - x0) / (x1 - x0) * (width - 2 * m)
            py = height - m - (y - y0) / (y1 - y0) * (height - 2 * m)
            opacity = "1.0" if clean else "0.25"
            parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="4" '
                         f'fill="#1f6fb2" fill-opacity="{opacity}"/>')
    parts.append("</svg>\n")
    return "\n".join(parts)


def _pad_range(lo: float, hi: float) -> tuple[float, float]:
    if hi <= lo:
        span = max(abs(lo), 1.0) * 0.1
        return lo - span, lo + span
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


# ---------------------------------------------------------------------------
# radar charts


def radar_normalization(reference: list[dict]) -> dict[str, tuple[float, float]]:
    """Per-axis (worst, best) values over a reference archive."""
    norm = {}
    for name in RADAR_AXES:
        vals = np.array([rec[name] for rec in reference])
        if OBJECTIVE_SENSE[name] < 0:      # maximization criterion
            norm[name] = (float(vals.min()), float(vals.max()))
        else:
            norm[name] = (float(vals.max()), float(vals.min()))
    return norm


def radar_coordinates(vec: ObjectiveVector,
                      norm: dict[str, tuple[float, float]]) -> dict[str, float]:
    """Objective values scaled to [0, 1] per axis; 1 is the best value in
    the reference archive (plotted outward), 0 the worst."""
    out = {}
    for name in RADAR_AXES:
        worst, best = norm[name]
        v = getattr(vec, name)
        if best == worst:
            out[name] = 1.0
        else:
            out[name] = float(np.clip((v - worst) / (best - worst), 0.0, 1.0))
    return out


def radar_svg(vectors: list[tuple[str, ObjectiveVector]],
              norm: dict[str, tuple[float, float]], size: int = 360) -> str:
    """Radar chart of several designs on the normalized objective axes."""
    c = size / 2
    radius = c - 60
    n = len(RADAR_AXES)
    parts = [_svg_open(size, size)]
    for k, name in enumerate(RADAR_AXES):
        ang = -np.pi / 2 + 2 * np.pi * k / n
        x, y = c + radius * np.cos(ang), c + radius * np.sin(ang)
        parts.append(f'<line x1="{c}" y1="{c}" x2="{x:.1f}" y2="{y:.1f}" '
                     'stroke="#999" stroke-width="1"/>')
        lx, ly = c + (radius + 18) * np.cos(ang), c + (radius + 18) * np.sin(ang)
        parts.append(f'<text x="{lx:.1f}" y="{ly:.1f}" font-size="11" '
                     f'text-anchor="middle">{name}</text>')
    for ring in (0.25, 0.5, 0.75, 1.0):
        pts = []
        for k in range(n + 1):
            ang = -np.pi / 2 + 2 * np.pi * (k % n) / n
            pts.append(f"{c + ring * radius * np.cos(ang):.1f},"
                       f"{c + ring * radius * np.sin(ang):.1f}")
        parts.append(f'<polyline points="{" ".join(pts)}" fill="none" '
                     'stroke="#ddd" stroke-width="0.7"/>')
    colors = ("#1f6fb2", "#b2501f", "#3a9e4e", "#8350b2", "#b2a31f")
    for i, (label, vec) in enumerate(vectors):
        coords = radar_coordinates(vec, norm)
        pts = []
        for k, name in enumerate(RADAR_AXES + (RADAR_AXES[0],)):
            ang = -np.pi / 2 + 2 * np.pi * (k % n) / n
            r = coords[name] * radius
            pts.append(f"{c + r * np.cos(ang):.1f},{c + r * np.sin(ang):.1f}")
        col = colors[i % len(colors)]
        parts.append(f'<polyline points="{" ".join(pts)}" fill="{col}" '
                     f'fill-opacity="0.15" stroke="{col}" stroke-width="1.5"/>')
        parts.append(f'<text x="12" y="{16 + 14 * i}" font-size="11" '
                     f'fill="{col}">{label}</text>')
    parts.append("</svg>\n")
    return "\n".join(parts)


# ---------------------------------------------------------------------------
# kinematic sketch


def sketch_geometry(model: RobotModel, state: KinematicState) -> dict:
    """Structured joint/segment geometry of one configuration."""
    fk = state_fk(model, state)
    seg_joints = model.segment_joints()
    legs = []
    for leg in range(model.legs):
        joints = [fk.P[leg, j].tolist() for j in range(model.coords_per_leg)]
        joints.append(fk.P[leg, -1].tolist())
        segments = [{"from": fk.P[leg, j].tolist(),
                     "to": fk.P[leg, j + 1].tolist()} for j in seg_joints]
        legs.append({"joints": joints, "segments": segments,
                     "joint_kinds": [s.kind for s in model.chain]})
    caps = build_collision_set(model, state)
    from .kinematics import pose_transform
    p, r = pose_transform(model, state.x)
    ring = [(p + r @ (model.platform_radius
                      * np.array([np.cos(a), np.sin(a), 0.0]))).tolist()
            for a in np.linspace(0, 2 * np.pi, 25)]
    return {
        "family": model.family.name,
        "pose": state.x.tolist(),
        "legs": legs,
        "platform_ring": ring,
        "base_anchors": model.anchors.base_pos.tolist(),
        "capsule_radius": caps[0].radius,
    }


def _project(points: np.ndarray, planar: bool) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if planar:
        return pts[:, :2] * np.array([1.0, -1.0])
    c30, s30 = np.cos(np.pi / 6), np.sin(np.pi / 6)
    u = (pts[:, 0] - pts[:, 1]) * c30
    v = (pts[:, 0] + pts[:, 1]) * s30 - pts[:, 2]
    return np.stack([u, v], axis=-1)


def sketch_svg(model: RobotModel, state: KinematicState, size: int = 420) -> str:
    """Isometric line sketch: segments, joints, platform ring, base anchors."""
    geo = sketch_geometry(model, state)
    pts = [np.asarray(geo["base_anchors"]), np.asarray(geo["platform_ring"])]
    for leg in geo["legs"]:
        pts.append(np.asarray(leg["joints"]))
    all_pts = _project(np.concatenate(pts), model.planar)
    lo, hi = all_pts.min(axis=0), all_pts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-6))
    scale = (size - 60) / span

    def to_px(p3):
        uv = _project(np.asarray(p3), model.planar)
        xy = (uv - lo) * scale + 30
        return xy

    parts = [_svg_open(size, size)]
    stroke = max(1.5, geo["capsule_radius"] * 2 * scale)
    base_px = to_px(geo["base_anchors"])
    ring_px = to_px(geo["platform_ring"])
    parts.append('<polyline points="' +
                 " ".join(f"{p[0]:.1f},{p[1]:.1f}" for p in ring_px) +
                 '" fill="none" stroke="#444" stroke-width="2"/>')
    for leg in geo["legs"]:
        for seg in leg["segments"]:
            a = to_px(seg["from"])[0]
            b = to_px(seg["to"])[0]
            parts.append(f'<line x1="{a[0]:.1f}" y1="{a[1]:.1f}" '
                         f'x2="{b[0]:.1f}" y2="{b[1]:.1f}" stroke="#1f6fb2" '
                         f'stroke-width="{stroke:.1f}" stroke-linecap="round"/>')
        jp = to_px(leg["joints"])
        for p in jp:
            parts.append(f'<circle cx="{p[0]:.1f}" cy="{p[1]:.1f}" r="3" '
                         'fill="#fff" stroke="#222" stroke-width="1"/>')
    for p in base_px:
        parts.append(f'<rect x="{p[0]-4:.1f}" y="{p[1]-4:.1f}" width="8" '
                     'height="8" fill="#444"/>')
    parts.append("</svg>\n")
    return "\n".join(parts)


# ---------------------------------------------------------------------------
# helpers


def _svg_open(width: int, height: int) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">\n'
            f'<rect width="{width}" height="{height}" fill="white"/>')


def _axes(width: int, height: int, m: int, xlabel: str, ylabel: str) -> str:
    return "\n".join([
        f'<line x1="{m}" y1="{height - m}" x2="{width - m}" y2="{height - m}" '
        'stroke="#222" stroke-width="1"/>',
        f'<line x1="{m}" y1="{height - m}" x2="{m}" y2="{m}" '
        'stroke="#222" stroke-width="1"/>',
        f'<text x="{width / 2:.0f}" y="{height - 12}" font-size="11" '
        f'text-anchor="middle">{xlabel}</text>',
        f'<text x="14" y="{height / 2:.0f}" font-size="11" text-anchor="middle" '
        f'transform="rotate(-90 14 {height / 2:.0f})">{ylabel}</text>',
    ])


def sketch_json(model: RobotModel, state: KinematicState) -> str:
    return json.dumps(sketch_geometry(model, state), indent=1, sort_keys=True)
