"""Task scenarios: reference points, reference trajectory, spaces, limits.

Scenario files are human-editable YAML.  All angular quantities in files are
degrees (orientation pose entries, angular rates, the clamping-angle limit,
the encoder resolution); everything is radians internally.  Positions and
distances are meters, forces N, torques N m.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
import os

import numpy as np
import yaml

from .geometry import Cuboid
from .objectives import ContactSamplingPlan
from .trajectory import CONSISTENCY_TOL, Trajectory, point_to_point

SCENARIO_FORMAT_VERSION = 1

ENCODER_RESOLUTION_DEFAULT = 2.0 * np.pi / 2**17   # rad, 17-bit encoder


class ScenarioFormatError(ValueError):
    """Scenario file violates the schema; the message carries the field path."""


@dataclass
class Limits:
    """Performance-criteria limits: the first four gate the optimized
    objectives (soft, violating designs stay in the population), the last
    three are hard feasibility requirements."""

    lowest_ext_torque: float = 5.0            # N m, f1 must exceed
    min_clamp_angle: float = np.deg2rad(30.0)  # rad, f2 must exceed
    min_clamp_dist: float = 0.03               # m, f3 must exceed
    max_act_torque: float = 30.0               # N m, f5 must stay below
    max_pos_err: float = 500e-6                # m
    max_cond: float = 500.0
    max_stress_util: float = 0.5


@dataclass
class Scenario:
    name: str
    dof: int
    reference_points: np.ndarray          # (M, dof) poses
    trajectory: Trajectory
    interaction_space: Cuboid
    installation_spaces: list[Cuboid]
    limits: Limits = field(default_factory=Limits)
    platform_extra_mass: float = 0.0      # kg
    encoder_resolution: float = ENCODER_RESOLUTION_DEFAULT   # rad
    sampling: ContactSamplingPlan = field(default_factory=ContactSamplingPlan)

    def __post_init__(self):
        self.reference_points = np.asarray(self.reference_points, dtype=float)
        if self.dof not in (3, 6):
            raise ScenarioFormatError(f"dof: must be 3 or 6, got {self.dof}")
        if self.reference_points.ndim != 2 or self.reference_points.shape[1] != self.dof:
            raise ScenarioFormatError(
                f"reference_points: expected shape (M, {self.dof})")
        if self.trajectory.x.shape[1] != self.dof:
            raise ScenarioFormatError("trajectory.x: pose width must match dof")
        bad = self.trajectory.first_inconsistent_sample(CONSISTENCY_TOL)
        if bad is not None:
            raise ScenarioFormatError(
                f"trajectory: velocity/acceleration inconsistent with poses "
                f"at sample {bad}")


# ---------------------------------------------------------------------------
# shipped scenarios


def build_benchmark() -> Scenario:
    """Overhead pick-and-place task for a full-mobility robot.

    Reference points sit on a cylinder (r = 0.25 m, h = 0.35 m) with
    constant orientation; the trajectory visits two pick poses at the back
    of the workspace and four assembly poses around the center with 15 deg
    tilt and 20 deg rotation.  The interaction space is a
    1.1 m x 1.1 m x 1.2 m cuboid; the installation space is a 1.0 m x 1.0 m
    column from table height (0.8 m) plus a 2.0 m x 2.0 m x 1.0 m base
    volume above head height (2.1 m).  An extra platform mass of 2 kg
    stands in for gripper and payload."""
    r_cyl, h_cyl = 0.25, 0.35
    z0 = 1.075
    z1 = z0 + h_cyl
    zc = 0.5 * (z0 + z1)
    pts = [[0.0, 0.0, zc, 0.0, 0.0, 0.0]]
    for z in (z0, z1):
        for az in np.deg2rad([0.0, 90.0, 180.0, 270.0]):
            pts.append([r_cyl * np.cos(az), r_cyl * np.sin(az), z, 0.0, 0.0, 0.0])
    reference_points = np.array(pts)

    tilt, rot = np.deg2rad(15.0), np.deg2rad(20.0)
    home = np.array([0.0, 0.0, zc, 0.0, 0.0, 0.0])
    xb = float(np.sqrt(r_cyl**2 - 0.2**2)) - 0.03
    pick1 = np.array([-xb, -0.2, z0 + 0.03, 0.0, 0.0, 0.0])
    pick2 = np.array([xb, -0.2, z0 + 0.03, 0.0, 0.0, 0.0])
    asm = [
        np.array([0.10, 0.0, zc + 0.05, tilt, 0.0, rot]),
        np.array([0.0, 0.10, zc + 0.05, -tilt, 0.0, -rot]),
        np.array([-0.10, 0.0, zc + 0.05, 0.0, tilt, rot]),
        np.array([0.0, -0.10, zc + 0.05, 0.0, -tilt, -rot]),
    ]
    waypoints = np.stack([home, pick1, asm[0], asm[1], pick2, asm[2], asm[3], home])
    trajectory = point_to_point(waypoints)

    interaction = Cuboid([-0.55, -0.55, 0.8], [0.55, 0.55, 2.0], role="interaction")
    installation = [
        Cuboid([-0.5, -0.5, 0.8], [0.5, 0.5, 2.1], role="installation"),
        Cuboid([-1.0, -1.0, 2.1], [1.0, 1.0, 3.1], role="installation"),
    ]
    return Scenario(
        name="pick-and-place-benchmark",
        dof=6,
        reference_points=reference_points,
        trajectory=trajectory,
        interaction_space=interaction,
        installation_spaces=installation,
        limits=Limits(),
        platform_extra_mass=2.0,
    )


def build_planar_test() -> Scenario:
    """Small planar task used for fast end-to-end checks."""
    pts = [[0.0, 0.0, 0.0]]
    for az in np.deg2rad([0.0, 120.0, 240.0]):
        pts.append([0.12 * np.cos(az), 0.12 * np.sin(az), np.deg2rad(10.0)])
    yaw = np.deg2rad(15.0)
    waypoints = np.array([
        [0.0, 0.0, 0.0],
        [0.10, 0.0, yaw],
        [-0.05, 0.10, -yaw],
        [-0.05, -0.10, yaw],
        [0.0, 0.0, 0.0],
    ])
    return Scenario(
        name="planar-test",
        dof=3,
        reference_points=np.array(pts),
        trajectory=point_to_point(waypoints),
        interaction_space=Cuboid([-0.45, -0.45, -0.2], [0.45, 0.45, 0.2],
                                 role="interaction"),
        installation_spaces=[Cuboid([-1.2, -1.2, -0.3], [1.2, 1.2, 0.3])],
        limits=Limits(),
        platform_extra_mass=1.0,
    )


BUILTIN_SCENARIOS = {
    "benchmark": build_benchmark,
    "planar-test": build_planar_test,
}


# ---------------------------------------------------------------------------
# serialization

_RAD2DEG = 180.0 / np.pi


def _angle_columns(dof: int) -> slice:
    return slice(3, 6) if dof == 6 else slice(2, 3)


def _require(data: dict, key: str, path: str):
    if not isinstance(data, dict) or key not in data:
        raise ScenarioFormatError(f"missing field '{path}{key}'")
    return data[key]


def _plain(obj):
    """Nested structure with numpy scalars/arrays replaced by plain types."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def scenario_to_dict(sc: Scenario) -> dict:
    ang = _angle_columns(sc.dof)
    ref = sc.reference_points.copy()
    ref[:, ang] *= _RAD2DEG
    tr = {name: getattr(sc.trajectory, name).copy() for name in ("x", "xd", "xdd")}
    for arr in tr.values():
        arr[:, ang] *= _RAD2DEG
    lim = asdict(sc.limits)
    lim["min_clamp_angle"] = sc.limits.min_clamp_angle * _RAD2DEG

    def box(c: Cuboid) -> dict:
        return {"min_corner": c.min_corner.tolist(),
                "max_corner": c.max_corner.tolist(), "role": c.role}

    return _plain({
        "format_version": SCENARIO_FORMAT_VERSION,
        "name": sc.name,
        "dof": sc.dof,
        "reference_points": ref.tolist(),
        "trajectory": {
            "dt": sc.trajectory.dt,
            "x": tr["x"].tolist(),
            "xd": tr["xd"].tolist(),
            "xdd": tr["xdd"].tolist(),
        },
        "interaction_space": box(sc.interaction_space),
        "installation_spaces": [box(c) for c in sc.installation_spaces],
        "limits": lim,
        "platform_extra_mass": sc.platform_extra_mass,
        "encoder_resolution": sc.encoder_resolution * _RAD2DEG,
        "sampling": {
            "points_per_segment": sc.sampling.points_per_segment,
            "radial_step": sc.sampling.radial_step * _RAD2DEG,
            "platform_direction_count": sc.sampling.platform_direction_count,
            "force_magnitude": sc.sampling.force_magnitude,
        },
    })


def scenario_from_dict(data: dict) -> Scenario:
    version = _require(data, "format_version", "")
    if version != SCENARIO_FORMAT_VERSION:
        raise ScenarioFormatError(
            f"format_version: expected {SCENARIO_FORMAT_VERSION}, got {version}")
    dof = int(_require(data, "dof", ""))
    if dof not in (3, 6):
        raise ScenarioFormatError(f"dof: must be 3 or 6, got {dof}")
    ang = _angle_columns(dof)

    ref = np.asarray(_require(data, "reference_points", ""), dtype=float)
    if ref.ndim != 2 or ref.shape[1] != dof:
        raise ScenarioFormatError(f"reference_points: expected shape (M, {dof})")
    ref[:, ang] /= _RAD2DEG

    tr_data = _require(data, "trajectory", "")
    dt = float(_require(tr_data, "dt", "trajectory."))
    arrs = {}
    for key in ("x", "xd", "xdd"):
        arr = np.asarray(_require(tr_data, key, "trajectory."), dtype=float)
        if arr.ndim != 2 or arr.shape[1] != dof:
            raise ScenarioFormatError(f"trajectory.{key}: expected shape (N, {dof})")
        arr[:, ang] /= _RAD2DEG
        arrs[key] = arr
    t = np.arange(arrs["x"].shape[0]) * dt
    trajectory = Trajectory(t, arrs["x"], arrs["xd"], arrs["xdd"])

    def box(d: dict, path: str) -> Cuboid:
        try:
            return Cuboid(np.asarray(_require(d, "min_corner", path), dtype=float),
                          np.asarray(_require(d, "max_corner", path), dtype=float),
                          role=d.get("role", "installation"))
        except ValueError as err:
            raise ScenarioFormatError(f"{path}: {err}") from None

    interaction = box(_require(data, "interaction_space", ""), "interaction_space.")
    spaces_data = _require(data, "installation_spaces", "")
    if not isinstance(spaces_data, list) or not spaces_data:
        raise ScenarioFormatError("installation_spaces: need a nonempty list")
    spaces = [box(d, f"installation_spaces[{i}].") for i, d in enumerate(spaces_data)]

    lim_data = _require(data, "limits", "")
    lim_kwargs = {}
    for fname in ("lowest_ext_torque", "min_clamp_angle", "min_clamp_dist",
                  "max_act_torque", "max_pos_err", "max_cond", "max_stress_util"):
        lim_kwargs[fname] = float(_require(lim_data, fname, "limits."))
    lim_kwargs["min_clamp_angle"] /= _RAD2DEG
    limits = Limits(**lim_kwargs)

    samp = data.get("sampling", {})
    sampling = ContactSamplingPlan(
        points_per_segment=int(samp.get("points_per_segment", 3)),
        radial_step=float(samp.get("radial_step", 15.0)) / _RAD2DEG,
        platform_direction_count=int(samp.get("platform_direction_count", 200)),
        force_magnitude=float(samp.get("force_magnitude", 140.0)),
    )
    return Scenario(
        name=str(data.get("name", "scenario")),
        dof=dof,
        reference_points=ref,
        trajectory=trajectory,
        interaction_space=interaction,
        installation_spaces=spaces,
        limits=limits,
        platform_extra_mass=float(data.get("platform_extra_mass", 0.0)),
        encoder_resolution=float(
            data.get("encoder_resolution", ENCODER_RESOLUTION_DEFAULT * _RAD2DEG)) / _RAD2DEG,
        sampling=sampling,
    )


def save_scenario(sc: Scenario, path: str) -> None:
    text = yaml.safe_dump(scenario_to_dict(sc), sort_keys=True,
                          default_flow_style=None)
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ScenarioFormatError("scenario file must hold a mapping")
    return scenario_from_dict(data)


def resolve_scenario(spec: str) -> Scenario:
    """A builtin scenario name or a path to a scenario file."""
    if spec in BUILTIN_SCENARIOS:
        return BUILTIN_SCENARIOS[spec]()
    return load_scenario(spec)
