"""Rigid-body dynamics in platform coordinates.

The mass matrix is assembled body-wise (platform plus every leg segment)
through the body Jacobians of the closed kinematic loops.  Drive loads along
a trajectory come from a body-twist formulation: generalized forces are the
projected Newton-Euler body forces with twist derivatives taken by finite
differences in time, which captures the velocity-product terms without a
symbolic derivation.  Internal member loads use a quasi-static distribution
of the platform wrench onto the distal leg segments plus self-weight
cantilever bending.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import logging

import numpy as np

from .kinematics import (JacobianSet, KinematicState, anchor_targets, jacobians,
                         pose_rate_maps, pose_transform, solve_trajectory, state_fk)
from .model import (ALUMINUM_YIELD, RobotModel, tube_area, tube_linear_density,
                    tube_section_modulus)
from .trajectory import Trajectory

log = logging.getLogger(__name__)

GRAVITY = np.array([0.0, 0.0, -9.81])


@dataclass
class InertiaModel:
    """Masses and inertias of all moving bodies.

    Leg segments are thin rods (zero inertia about their own axis); the
    structural platform is a tube ring of the platform radius, the payload
    is a point mass at the platform origin."""

    segment_masses: np.ndarray        # (L, S)
    segment_lengths: np.ndarray       # (S,)
    platform_mass: float              # structure + payload
    platform_inertia: np.ndarray      # (3,3) about the platform origin, local
    gravity: np.ndarray = field(default_factory=lambda: GRAVITY.copy())

    def __post_init__(self):
        self.segment_masses = np.asarray(self.segment_masses, dtype=float)
        self.segment_lengths = np.asarray(self.segment_lengths, dtype=float)
        self.platform_inertia = np.asarray(self.platform_inertia, dtype=float)
        self.gravity = np.asarray(self.gravity, dtype=float)
        if (self.segment_masses < 0).any() or self.platform_mass < 0:
            raise ValueError("masses must be nonnegative")
        if np.linalg.eigvalsh(self.platform_inertia).min() < -1e-12:
            raise ValueError("platform inertia must be positive semi-definite")

    @classmethod
    def from_model(cls, model: RobotModel, gravity: np.ndarray = GRAVITY) -> "InertiaModel":
        rho = model.link_density
        lengths = model.segment_lengths()
        seg_masses = np.tile(rho * lengths, (model.legs, 1))
        r = model.platform_radius
        ring_mass = rho * 2.0 * np.pi * r
        ring_inertia = ring_mass * r * r * np.diag([0.5, 0.5, 1.0])
        return cls(seg_masses, lengths, ring_mass + model.platform_extra_mass,
                   ring_inertia, np.asarray(gravity, dtype=float))

    @classmethod
    def massless_legs(cls, model: RobotModel, platform_mass: float,
                      gravity: np.ndarray = GRAVITY) -> "InertiaModel":
        lengths = model.segment_lengths()
        return cls(np.zeros((model.legs, lengths.shape[0])), lengths,
                   platform_mass, np.zeros((3, 3)), np.asarray(gravity, dtype=float))

    def scaled(self, factor: float) -> "InertiaModel":
        return InertiaModel(self.segment_masses * factor, self.segment_lengths,
                            self.platform_mass * factor,
                            self.platform_inertia * factor, self.gravity)


@dataclass
class MassMatrixX:
    """Mass matrix in platform coordinates with its translational block."""

    M_x: np.ndarray
    t_dim: int

    @property
    def M_t(self) -> np.ndarray:
        return self.M_x[: self.t_dim, : self.t_dim]


@dataclass
class _Body:
    jac: np.ndarray        # (6, n) pose rates -> twist (v_com, w)
    mass: float
    inertia_w: np.ndarray  # (3, 3) world-frame inertia about the COM
    com: np.ndarray


def _rod_inertia_world(mass: float, length: float, axis: np.ndarray) -> np.ndarray:
    coeff = mass * length * length / 12.0
    return coeff * (np.eye(3) - np.outer(axis, axis))


def body_jacobians(model: RobotModel, state: KinematicState,
                   inertia: InertiaModel, jac: JacobianSet | None = None) -> list[_Body]:
    """Twist Jacobians of the platform and all leg segments."""
    if jac is None:
        jac = jacobians(model, state)
    fk = state_fk(model, state)
    jp, jw = pose_rate_maps(model, state.x)
    p, r = pose_transform(model, state.x)
    bodies = [_Body(np.vstack([jp, jw]), inertia.platform_mass,
                    r @ inertia.platform_inertia @ r.T, p)]
    seg_joints = model.segment_joints()
    nj = model.coords_per_leg
    # joints at or below a segment's driving joint move that segment
    active = np.arange(nj)[None, :] <= np.asarray(seg_joints)[:, None]  # (S,J)
    a = fk.P[:, [j for j in seg_joints]]            # (L,S,3)
    b = fk.P[:, [j + 1 for j in seg_joints]]
    com = 0.5 * (a + b)                             # (L,S,3)
    lin = np.cross(fk.W[:, None, :, :],
                   com[:, :, None, :] - fk.P[:, None, :-1, :])   # (L,S,J,3)
    lin *= active[None, :, :, None]
    ang = fk.W[:, None, :, :] * active[None, :, :, None]
    jb_q = np.concatenate([lin.transpose(0, 1, 3, 2),
                           ang.transpose(0, 1, 3, 2)], axis=2)   # (L,S,6,J)
    j_qx_legs = jac.J_qx.reshape(model.legs, nj, model.n)
    jb_x = jb_q @ j_qx_legs[:, None, :, :]                       # (L,S,6,n)
    lengths = np.linalg.norm(b - a, axis=-1)
    for leg in range(model.legs):
        for s in range(len(seg_joints)):
            mass = float(inertia.segment_masses[leg, s])
            length = float(lengths[leg, s])
            axis = ((b[leg, s] - a[leg, s]) / length if length > 0
                    else np.array([1.0, 0.0, 0.0]))
            bodies.append(_Body(jb_x[leg, s], mass,
                                _rod_inertia_world(mass, length, axis),
                                com[leg, s]))
    return bodies


def mass_matrix_platform(model: RobotModel, state: KinematicState,
                         inertia: InertiaModel) -> MassMatrixX:
    """M_x = sum over bodies of J_b^T M_b J_b (platform coordinates)."""
    bodies = body_jacobians(model, state, inertia)
    n = model.n
    m_x = np.zeros((n, n))
    for b in bodies:
        jv, jw = b.jac[:3], b.jac[3:]
        m_x += b.mass * (jv.T @ jv) + jw.T @ b.inertia_w @ jw
    return MassMatrixX(m_x, 2 if model.planar else 3)


def effective_mass(mm: MassMatrixX) -> float:
    """Largest eigenvalue of the translational block [kg]."""
    return float(np.linalg.eigvalsh(mm.M_t)[-1])


def kinetic_energy(model: RobotModel, state: KinematicState,
                   inertia: InertiaModel, xd: np.ndarray) -> float:
    mm = mass_matrix_platform(model, state, inertia)
    return 0.5 * float(xd @ mm.M_x @ xd)


# ---------------------------------------------------------------------------
# inverse dynamics


class SingularSampleError(RuntimeError):
    def __init__(self, sample_index: int, cause: Exception):
        super().__init__(f"singular configuration at trajectory sample {sample_index}: {cause}")
        self.sample_index = sample_index


@dataclass
class DriveLoads:
    """Per-sample actuated torques and speeds along a trajectory."""

    tau: np.ndarray        # (N, n) actuated torques [N m]
    qa_dot: np.ndarray     # (N, n) actuated speeds [rad/s]
    tau_quasistatic: np.ndarray   # gravity + rigid-acceleration part only

    @property
    def max_torque(self) -> float:
        return float(np.abs(self.tau).max())

    @property
    def max_speed(self) -> float:
        return float(np.abs(self.qa_dot).max())

    @property
    def max_actuator_power(self) -> np.ndarray:
        """Per-actuator max of |tau * qa_dot| [W]."""
        return np.abs(self.tau * self.qa_dot).max(axis=0)


def inverse_dynamics_traj(model: RobotModel, inertia: InertiaModel,
                          traj: Trajectory, states: list[KinematicState] | None = None,
                          seed="out") -> DriveLoads:
    """Actuated torques and speeds for a trajectory.

    Body twist rates are central finite differences of the body twists in
    time, so centrifugal and Coriolis effects enter through the varying
    body Jacobians.  The quasi-static variant (twist rates from the pose
    acceleration only) is returned alongside and their gap is logged."""
    if states is None:
        states = solve_trajectory(model, traj.x, seed)
    n_samp = len(traj)
    n = model.n
    jacs = []
    body_jac = []       # (N, B, 6, n)
    body_inertia = []   # (N, B, 3, 3)
    masses = None
    for k, st in enumerate(states):
        try:
            jac = jacobians(model, st)
        except Exception as err:  # singularities carry the sample index
            raise SingularSampleError(k, err) from err
        bodies = body_jacobians(model, st, inertia, jac)
        jacs.append(jac)
        body_jac.append(np.stack([b.jac for b in bodies]))
        body_inertia.append(np.stack([b.inertia_w for b in bodies]))
        if masses is None:
            masses = np.array([b.mass for b in bodies])
    body_jac = np.stack(body_jac)
    body_inertia = np.stack(body_inertia)

    nu = np.einsum("nbij,nj->nbi", body_jac, traj.xd)        # body twists
    nu_dot = np.gradient(nu, traj.t, axis=0) if n_samp > 1 else np.zeros_like(nu)
    nu_dot_qs = np.einsum("nbij,nj->nbi", body_jac, traj.xdd)

    g = inertia.gravity
    omega = nu[..., 3:]
    i_omega = np.einsum("nbij,nbj->nbi", body_inertia, omega)
    wrench = np.concatenate([
        masses[None, :, None] * nu_dot[..., :3] - masses[None, :, None] * g,
        np.einsum("nbij,nbj->nbi", body_inertia, nu_dot[..., 3:])
        + np.cross(omega, i_omega)], axis=-1)
    wrench_qs = np.concatenate([
        masses[None, :, None] * nu_dot_qs[..., :3] - masses[None, :, None] * g,
        np.einsum("nbij,nbj->nbi", body_inertia, nu_dot_qs[..., 3:])], axis=-1)
    f_x = np.einsum("nbij,nbi->nj", body_jac, wrench)
    f_x_qs = np.einsum("nbij,nbi->nj", body_jac, wrench_qs)

    j_xqa = np.stack([jc.J_xqa for jc in jacs])
    j_qa_x = np.stack([jc.J_qa_x for jc in jacs])
    tau = np.einsum("nij,nj->ni", j_xqa.transpose(0, 2, 1), f_x)
    tau_qs = np.einsum("nij,nj->ni", j_xqa.transpose(0, 2, 1), f_x_qs)
    qa_dot = np.einsum("nij,nj->ni", j_qa_x, traj.xd)
    gap = float(np.abs(tau - tau_qs).max())
    log.debug("inverse dynamics: max |full - quasistatic| torque gap %.3e N m", gap)
    return DriveLoads(tau, qa_dot, tau_qs)


# ---------------------------------------------------------------------------
# internal member loads and stress


@dataclass
class SegmentLoads:
    """Quasi-static member load envelope per (leg, segment)."""

    bending: np.ndarray    # (L, S) max bending moment [N m]
    axial: np.ndarray      # (L, S) max axial force [N]

    def stress_utilization(self, diameter: float, wall: float,
                           yield_stress: float = ALUMINUM_YIELD) -> float:
        """Peak (bending + axial) stress over all segments relative to the
        yield stress."""
        w_sec = tube_section_modulus(diameter, wall)
        area = tube_area(diameter, wall)
        sigma = self.bending / w_sec + self.axial / area
        return float(sigma.max() / yield_stress)

    def rescale_self_weight(self, old_density: float, new_density: float,
                            self_bending: np.ndarray) -> "SegmentLoads":
        """Swap the self-weight bending share for a new tube density."""
        factor = new_density / old_density if old_density > 0 else 0.0
        return SegmentLoads(self.bending + (factor - 1.0) * self_bending, self.axial)


def platform_wrench_traj(model: RobotModel, inertia: InertiaModel,
                         traj: Trajectory,
                         states: list[KinematicState]) -> np.ndarray:
    """(N, 6) dynamic platform wrench (force, moment about the platform
    origin) that the legs must carry."""
    n_samp = len(traj)
    out = np.empty((n_samp, 6))
    rot = np.stack([pose_transform(model, st.x)[1] for st in states])
    iw = rot @ inertia.platform_inertia @ rot.transpose(0, 2, 1)
    for k, st in enumerate(states):
        jp, jw = pose_rate_maps(model, st.x)
        v_dot = jp @ traj.xdd[k]
        omega = jw @ traj.xd[k]
        # angular acceleration: quasi-static estimate from the pose accel
        omega_dot = jw @ traj.xdd[k]
        f = inertia.platform_mass * (v_dot - inertia.gravity)
        m = iw[k] @ omega_dot + np.cross(omega, iw[k] @ omega)
        out[k] = np.concatenate([f, m])
    return out


def distal_line_system(model: RobotModel, state: KinematicState) -> np.ndarray:
    """(6, L) action lines of the distal leg segments through their platform
    couplings, moments taken about the platform origin."""
    fk = state_fk(model, state)
    seg_joints = model.segment_joints()
    j = seg_joints[-1]
    p, _ = pose_transform(model, state.x)
    cols = np.empty((6, model.legs))
    for leg in range(model.legs):
        a, b = fk.P[leg, j], fk.P[leg, j + 1]
        d = b - a
        norm = np.linalg.norm(d)
        d = d / norm if norm > 0 else np.array([0.0, 0.0, 1.0])
        cols[:3, leg] = d
        cols[3:, leg] = np.cross(b - p, d)
    return cols


def internal_load_estimate(model: RobotModel, inertia: InertiaModel,
                           traj: Trajectory,
                           states: list[KinematicState] | None = None,
                           seed="out") -> tuple[SegmentLoads, np.ndarray]:
    """Member load envelope along a trajectory.

    The platform wrench is distributed onto the distal segment action lines
    by least squares; transmitted forces load each proximal segment as a
    cantilever at its distal joint.  Self-weight adds the distributed-load
    root moment m g L / 2 per segment.  Returns the loads and the
    self-weight bending share (for cheap cross-section rescaling)."""
    if states is None:
        states = solve_trajectory(model, traj.x, seed)
    lengths = inertia.segment_lengths
    g_norm = float(np.linalg.norm(inertia.gravity))
    self_bending = 0.5 * inertia.segment_masses * g_norm * lengths[None, :]

    seg_joints = model.segment_joints()
    p_all = np.stack([state_fk(model, st).P for st in states])    # (N,L,J+1,3)
    plat = np.stack([pose_transform(model, st.x)[0] for st in states])
    wrench = platform_wrench_traj(model, inertia, traj, states)   # (N,6)

    j = seg_joints[-1]
    d = p_all[:, :, j + 1] - p_all[:, :, j]
    d /= np.maximum(np.linalg.norm(d, axis=-1, keepdims=True), 1e-12)
    moment = np.cross(p_all[:, :, j + 1] - plat[:, None, :], d)
    lines = np.concatenate([d, moment], axis=-1).transpose(0, 2, 1)  # (N,6,L)
    lam = np.einsum("nij,nj->ni", np.linalg.pinv(lines), wrench)     # (N,L)
    force = lam[:, :, None] * d                                      # (N,L,3)

    bending = np.zeros((model.legs, lengths.shape[0]))
    axial = np.zeros((model.legs, lengths.shape[0]))
    for s, jj in enumerate(seg_joints):
        axis = p_all[:, :, jj + 1] - p_all[:, :, jj]
        axis /= np.maximum(np.linalg.norm(axis, axis=-1, keepdims=True), 1e-12)
        f_ax = np.einsum("nli,nli->nl", force, axis)
        f_perp = np.linalg.norm(force - f_ax[:, :, None] * axis, axis=-1)
        bending[:, s] = (f_perp * lengths[s]).max(axis=0)
        axial[:, s] = np.abs(f_ax).max(axis=0)
    return SegmentLoads(bending + self_bending, axial), self_bending
