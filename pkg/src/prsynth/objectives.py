"""Safety and drive-load objective functions.

f1  lowest worst-case actuator torque caused by a bounded external contact
    force anywhere on the structure (maximize: large values mean contacts
    are easy to detect in the drives)
f2  minimum passive-joint interior angle (maximize: avoids scissor gaps)
f3  minimum clamping distance between non-adjacent segments (maximize)
f4  effective mass: largest eigenvalue of the translational mass-matrix
    block (minimize: collision severity)
f5  maximum actuated torque along the trajectory (minimize)
f6  maximum actuated speed along the trajectory (minimize)

f1/f3 are only evaluated inside the interaction space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import (DriveLoads, InertiaModel, effective_mass,
                       inverse_dynamics_traj, mass_matrix_platform)
from .families import SPHERICAL
from .frames import wrap_angle
from .geometry import Cuboid, build_collision_set, min_clamping_distance
from .kinematics import (KinematicState, MaterialPoint, Wrench, contact_jacobian,
                         contact_point_position, jacobians, project_wrench,
                         state_fk)
from .model import RobotModel
from .trajectory import Trajectory

# objective orientation: -1 entries are maximization criteria and enter the
# optimizer negated
OBJECTIVE_SENSE = {"f1": -1.0, "f2": -1.0, "f3": -1.0, "f4": 1.0, "f5": 1.0, "f6": 1.0}
OBJECTIVE_UNITS = {"f1": "N*m", "f2": "rad", "f3": "m", "f4": "kg",
                   "f5": "N*m", "f6": "rad/s"}
DEFAULT_OBJECTIVE_SUBSET = ("f1", "f3", "f4", "f5", "f6")


@dataclass(frozen=True)
class ContactSamplingPlan:
    """Where and how contact forces are sampled for f1."""

    points_per_segment: int = 3
    radial_step: float = np.deg2rad(15.0)
    platform_direction_count: int = 200
    force_magnitude: float = 140.0

    def __post_init__(self):
        if self.points_per_segment < 1:
            raise ValueError("points_per_segment must be >= 1")
        n = 2.0 * np.pi / self.radial_step
        if abs(n - round(n)) > 1e-9:
            raise ValueError("radial_step must divide a full turn")
        if self.force_magnitude <= 0:
            raise ValueError("force_magnitude must be positive")
        if self.platform_direction_count < 1:
            raise ValueError("platform_direction_count must be >= 1")

    @property
    def radial_count(self) -> int:
        return int(round(2.0 * np.pi / self.radial_step))

    def segment_fractions(self) -> np.ndarray:
        k = np.arange(1, self.points_per_segment + 1)
        return k / (self.points_per_segment + 1.0)


def radial_directions(axis: np.ndarray, step: float) -> np.ndarray:
    """Unit directions perpendicular to ``axis`` swept by ``step`` [rad];
    the basis is fixed deterministically from the world axes."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    ref = np.array([0.0, 0.0, 1.0])
    if abs(axis @ ref) > 0.99:
        ref = np.array([1.0, 0.0, 0.0])
    n1 = np.cross(axis, ref)
    n1 /= np.linalg.norm(n1)
    n2 = np.cross(axis, n1)
    ang = np.arange(int(round(2.0 * np.pi / step))) * step
    return np.cos(ang)[:, None] * n1 + np.sin(ang)[:, None] * n2


def hemisphere_directions(count: int) -> np.ndarray:
    """Deterministic Fibonacci spiral over the unit hemisphere (local frame,
    z >= 0); callers rotate it onto the outward platform normal."""
    k = np.arange(count)
    z = (k + 0.5) / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    golden = np.pi * (3.0 - np.sqrt(5.0))
    phi = k * golden
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


def leg_contact_points(model: RobotModel, plan: ContactSamplingPlan) -> list[MaterialPoint]:
    pts = []
    for leg in range(model.legs):
        for seg in range(len(model.segment_joints())):
            for s in plan.segment_fractions():
                pts.append(MaterialPoint.on_segment(leg, seg, float(s)))
    return pts


def f1_detectability(model: RobotModel, traj_states: list[KinematicState],
                     plan: ContactSamplingPlan,
                     interaction: Cuboid | None = None) -> float:
    """Worst-case (smallest over samples, locations and directions) of the
    largest actuator torque magnitude caused by a contact force of the
    plan's magnitude.  Leg contacts use radial pure forces; platform
    contacts sweep a hemisphere of force directions at the platform
    reference point."""
    from .kinematics import pose_transform

    points = leg_contact_points(model, plan)
    hemi = hemisphere_directions(plan.platform_direction_count)
    zero_m = np.zeros(3)
    f1 = np.inf
    for st in traj_states:
        jacobians(model, st)  # ensure cache
        fk = state_fk(model, st)
        seg_joints = model.segment_joints()
        for pt in points:
            pos = contact_point_position(model, st, pt)
            if interaction is not None and not interaction.contains(pos):
                continue
            j = seg_joints[pt.segment]
            axis = fk.P[pt.leg, j + 1] - fk.P[pt.leg, j]
            cj = contact_jacobian(model, st, pt)
            for d in radial_directions(axis, plan.radial_step):
                tau = project_wrench(cj, Wrench(plan.force_magnitude * d, zero_m))
                f1 = min(f1, np.abs(tau).max())
        # platform reference point, hemisphere about the outward normal
        p, r = pose_transform(model, st.x)
        if interaction is None or interaction.contains(p):
            cj = contact_jacobian(model, st, MaterialPoint.on_platform())
            outward = -r[:, 2]
            frame = _hemisphere_frame(outward)
            for d_local in hemi:
                d = frame @ d_local
                tau = project_wrench(cj, Wrench(plan.force_magnitude * d, zero_m))
                f1 = min(f1, np.abs(tau).max())
    return float(f1)


def _hemisphere_frame(outward: np.ndarray) -> np.ndarray:
    """Right-handed frame whose z-axis is the outward normal."""
    z = outward / np.linalg.norm(outward)
    ref = np.array([1.0, 0.0, 0.0])
    if abs(z @ ref) > 0.99:
        ref = np.array([0.0, 1.0, 0.0])
    x = np.cross(ref, z)
    x /= np.linalg.norm(x)
    return np.column_stack([x, np.cross(z, x), z])


def passive_angle_coordinates(model: RobotModel) -> list[int]:
    """Leg-chain coordinate indices that enter f2: passive revolute and
    universal coordinates (spherical and actuated excluded)."""
    return [j for j, spec in enumerate(model.chain)
            if not spec.actuated and spec.kind != SPHERICAL]


def interior_angles(q: np.ndarray) -> np.ndarray:
    """Hinge coordinates -> interior angle in [0, pi] (pi = stretched)."""
    return np.pi - np.abs(wrap_angle(q))


def f2_min_passive_angle(model: RobotModel,
                         traj_states: list[KinematicState]) -> float:
    """Minimum interior angle over all passive hinge coordinates and
    trajectory samples [rad]."""
    cols = passive_angle_coordinates(model)
    if not cols:
        return float(np.pi)
    best = np.pi
    for st in traj_states:
        q2d = st.q2d(model)
        best = min(best, float(interior_angles(q2d[:, cols]).min()))
    return best


def f3_min_clamp_distance(model: RobotModel, traj_states: list[KinematicState],
                          interaction: Cuboid | None = None,
                          clearance: float | None = None,
                          platform_exclusion_length: float | None = None) -> float:
    """Minimum clamping distance over the trajectory [m]."""
    kwargs = {}
    if clearance is not None:
        kwargs["clearance"] = clearance
    if platform_exclusion_length is not None:
        kwargs["platform_exclusion_length"] = platform_exclusion_length
    best = np.inf
    for st in traj_states:
        caps = build_collision_set(model, st, **kwargs)
        best = min(best, min_clamping_distance(caps, interaction))
    return float(best)


def f4_effective_mass(model: RobotModel, inertia: InertiaModel,
                      traj_states: list[KinematicState]) -> float:
    """Largest effective mass over the trajectory [kg]."""
    return max(effective_mass(mass_matrix_platform(model, st, inertia))
               for st in traj_states)


def f5_f6_drive_load(model: RobotModel, inertia: InertiaModel, traj: Trajectory,
                     states: list[KinematicState] | None = None,
                     loads: DriveLoads | None = None) -> tuple[float, float]:
    """Maximum actuated torque [N m] and speed [rad/s] along the trajectory."""
    if loads is None:
        loads = inverse_dynamics_traj(model, inertia, traj, states)
    return loads.max_torque, loads.max_speed


def position_error(model: RobotModel, traj_states: list[KinematicState],
                   encoder_resolution: float) -> float:
    """Largest platform position error caused by +-1 encoder-count offsets
    of all actuated joints, maximized by corner enumeration [m]."""
    n = model.n
    signs = np.array(np.meshgrid(*([[-1.0, 1.0]] * n))).reshape(n, -1).T
    t_rows = 2 if model.planar else 3
    worst = 0.0
    for st in traj_states:
        jt = jacobians(model, st).J_xqa[:t_rows]
        dev = np.linalg.norm(jt @ (encoder_resolution * signs.T), axis=0)
        worst = max(worst, float(dev.max()))
    return worst


def max_condition_number(model: RobotModel,
                         traj_states: list[KinematicState]) -> float:
    return max(jacobians(model, st).condition for st in traj_states)


# ---------------------------------------------------------------------------
# objective bundle


@dataclass
class ObjectiveVector:
    """All objective values plus the non-optimized constraint metrics."""

    f1: float   # N m, maximize
    f2: float   # rad, maximize
    f3: float   # m, maximize
    f4: float   # kg, minimize
    f5: float   # N m, minimize
    f6: float   # rad/s, minimize
    position_error: float = np.nan
    condition: float = np.nan
    stress_utilization: float = np.nan
    soft_flags: dict = field(default_factory=dict)

    _NAMES = ("f1", "f2", "f3", "f4", "f5", "f6")

    def values(self, subset=DEFAULT_OBJECTIVE_SUBSET) -> np.ndarray:
        return np.array([getattr(self, name) for name in subset])

    def as_minimization(self, subset=DEFAULT_OBJECTIVE_SUBSET) -> np.ndarray:
        """Objective vector with maximization entries negated."""
        return np.array([OBJECTIVE_SENSE[name] * getattr(self, name)
                         for name in subset])

    @property
    def feasible_soft(self) -> bool:
        return not any(self.soft_flags.values())


def apply_soft_gates(vec: ObjectiveVector, limits) -> ObjectiveVector:
    """Mark the optimized-criteria threshold violations (kept in the
    population, filtered in the evaluation)."""
    vec.soft_flags = {
        "f1": vec.f1 <= limits.lowest_ext_torque,
        "f2": vec.f2 <= limits.min_clamp_angle,
        "f3": vec.f3 <= limits.min_clamp_dist,
        "f5": vec.f5 >= limits.max_act_torque,
    }
    return vec
