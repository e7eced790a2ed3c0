"""Vector-loop kinematics of fully parallel robots.

Every leg is a serial revolute chain from a fixed base anchor frame to a
platform coupling frame.  Loop closure requires the chain end frame to
coincide with the platform coupling frame, which yields a block-diagonal
constraint system: 6 equations per spatial leg (3 position + 3 orientation)
or 3 per planar leg.

The module provides the constraint residuals, a damped Newton inverse
kinematics with assembly-mode control, the differential kinematics
(full-coordinate and actuated Jacobians), contact-point Jacobians for
arbitrary material points, and the kinetostatic projection of external
wrenches onto the actuated joints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .families import SPHERICAL, UNIVERSAL
from .frames import (euler_xyz_matrix, euler_xyz_rates_map, euler_zyx_from_matrix,
                     rot_axis, rot_z, skew, skew_vee, wrap_angle)
from .model import RobotModel

IK_TOLERANCE = 1e-9
MAX_IK_ITERS = 50
LM_LAMBDA = 1e-6       # Levenberg damping once the chain Jacobian degenerates
LM_SMIN = 1e-8
MAX_NEWTON_STEP = 0.7  # rad, per-iteration step clip
SINGULARITY_RTOL = 1e-12

ELBOW_JOINT = 1  # joint index whose position classifies the assembly mode


class KinematicsError(RuntimeError):
    pass


class IkConvergenceError(KinematicsError):
    """Pose unreachable (or mode-constrained unreachable) within the
    iteration budget."""


class ModeFlipError(KinematicsError):
    """A warm-started solve landed on a different assembly-mode branch."""


class LegSingularityError(KinematicsError):
    """Serial singularity: a leg's constraint block is rank deficient."""


class ParallelSingularityError(KinematicsError):
    """Parallel singularity: the actuated Jacobian is rank deficient."""


# ---------------------------------------------------------------------------
# pose handling


def pose_transform(model: RobotModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Platform pose vector -> (world position, rotation matrix)."""
    x = np.asarray(x, dtype=float)
    if model.planar:
        if x.shape != (3,):
            raise ValueError(f"planar pose must have 3 entries, got {x.shape}")
        return np.array([x[0], x[1], 0.0]), rot_z(x[2])
    if x.shape != (6,):
        raise ValueError(f"spatial pose must have 6 entries, got {x.shape}")
    return x[:3].copy(), euler_xyz_matrix(x[3:])


def pose_rate_maps(model: RobotModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(Jp, Jw): platform linear velocity = Jp @ dx, angular = Jw @ dx."""
    n = model.n
    jp = np.zeros((3, n))
    jw = np.zeros((3, n))
    if model.planar:
        jp[0, 0] = jp[1, 1] = 1.0
        jw[2, 2] = 1.0
    else:
        jp[:, :3] = np.eye(3)
        jw[:, 3:] = euler_xyz_rates_map(x[3:])
    return jp, jw


def _residual_rows(model: RobotModel) -> np.ndarray:
    # rows of the stacked [position(3), orientation(3)] leg error
    return np.array([0, 1, 5]) if model.planar else np.arange(6)


def anchor_targets(model: RobotModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """World platform-coupling frames (L,3) positions and (L,3,3) rotations."""
    p, r = pose_transform(model, x)
    anc = model.anchors
    p_t = p + anc.plat_pos @ r.T
    r_t = r @ anc.plat_rot
    return p_t, r_t


# ---------------------------------------------------------------------------
# chain forward evaluation


@dataclass
class ChainEval:
    """Forward evaluation of all leg chains at one joint configuration."""

    P: np.ndarray       # (L, J+1, 3) joint positions, last entry = chain end
    W: np.ndarray       # (L, J, 3) world joint axes
    R_end: np.ndarray   # (L, 3, 3) chain end orientations


def chain_fk(model: RobotModel, q2d: np.ndarray) -> ChainEval:
    chain = model.chain
    anc = model.anchors
    nlegs, nj = q2d.shape
    R = anc.base_rot.copy()
    p = anc.base_pos.copy()
    P = np.empty((nlegs, nj + 1, 3))
    W = np.empty((nlegs, nj, 3))
    for j, spec in enumerate(chain):
        P[:, j] = p
        if spec.align is not None:
            R = R @ spec.align
        W[:, j] = R[:, :, spec.axis]
        R = R @ rot_axis(spec.axis, q2d[:, j])
        if spec.link.any():
            p = p + R @ spec.link
    P[:, nj] = p
    return ChainEval(P=P, W=W, R_end=R)


def _leg_residuals(model: RobotModel, fk: ChainEval, p_t: np.ndarray,
                   r_t: np.ndarray) -> np.ndarray:
    """(L, rd) closure error per leg."""
    pos = fk.P[:, -1] - p_t
    a = fk.R_end @ r_t.transpose(0, 2, 1)
    ori = skew_vee(a)
    full = np.concatenate([pos, ori], axis=1)
    return full[:, _residual_rows(model)]


def _dresid_dq(model: RobotModel, fk: ChainEval, r_t: np.ndarray) -> np.ndarray:
    """(L, rd, J) exact partials of the leg residual w.r.t. leg coordinates."""
    p_end = fk.P[:, -1]
    lin = np.cross(fk.W, p_end[:, None, :] - fk.P[:, :-1, :])       # (L,J,3)
    a = fk.R_end @ r_t.transpose(0, 2, 1)
    tr = np.trace(a, axis1=1, axis2=2)
    m = 0.5 * (tr[:, None, None] * np.eye(3) - a.transpose(0, 2, 1))
    ang = np.einsum("lab,ljb->lja", m, fk.W)                        # (L,J,3)
    full = np.concatenate([lin.transpose(0, 2, 1), ang.transpose(0, 2, 1)], axis=1)
    return full[:, _residual_rows(model), :]


def _dresid_dx(model: RobotModel, fk: ChainEval, x: np.ndarray,
               r_t: np.ndarray) -> np.ndarray:
    """(L, rd, n) exact partials of the leg residual w.r.t. the pose."""
    jp, jw = pose_rate_maps(model, x)
    _, r = pose_transform(model, x)
    anc = model.anchors
    r_world = anc.plat_pos @ r.T                       # (L,3) anchor offsets
    dpos = -jp[None, :, :] + skew(r_world) @ jw        # (L,3,n)
    a = fk.R_end @ r_t.transpose(0, 2, 1)
    tr = np.trace(a, axis1=1, axis2=2)
    m = 0.5 * (tr[:, None, None] * np.eye(3) - a)
    dori = -m @ jw                                     # (L,3,n)
    full = np.concatenate([dpos, dori], axis=1)
    return full[:, _residual_rows(model), :]


# ---------------------------------------------------------------------------
# state


@dataclass
class KinematicState:
    """Platform pose plus all joint coordinates of a closed configuration."""

    x: np.ndarray
    q: np.ndarray                 # flat, leg-major (n_q,)
    assembly_modes: np.ndarray    # (L,) entries +1 (elbow out) / -1 (elbow in)
    jac: "JacobianSet | None" = field(default=None, repr=False, compare=False)
    _fk: ChainEval | None = field(default=None, repr=False, compare=False)

    def q2d(self, model: RobotModel) -> np.ndarray:
        return self.q.reshape(model.legs, model.coords_per_leg)

    @property
    def q_a(self) -> np.ndarray:
        """Actuated coordinates: strided view of ``q`` (first coordinate of
        every leg)."""
        nq = self.q.shape[0]
        nlegs = self.assembly_modes.shape[0]
        return self.q[:: nq // nlegs]

    @property
    def q_p(self) -> np.ndarray:
        """Passive coordinates (copy, leg-major order)."""
        nq = self.q.shape[0]
        nlegs = self.assembly_modes.shape[0]
        return self.q.reshape(nlegs, -1)[:, 1:].ravel()

    def copy(self) -> "KinematicState":
        return KinematicState(self.x.copy(), self.q.copy(),
                              self.assembly_modes.copy())


def state_fk(model: RobotModel, state: KinematicState) -> ChainEval:
    if state._fk is None:
        state._fk = chain_fk(model, state.q2d(model))
    return state._fk


def classify_modes(model: RobotModel, q2d: np.ndarray,
                   fk: ChainEval | None = None) -> np.ndarray:
    """Per-leg assembly-mode sign: side of the elbow relative to the plane
    spanned by the base-to-coupling chord and the actuated axis."""
    if fk is None:
        fk = chain_fk(model, q2d)
    a = fk.P[:, 0]
    e = fk.P[:, ELBOW_JOINT]
    b = fk.P[:, -1]
    s = np.einsum("ij,ij->i", np.cross(b - a, e - a), fk.W[:, 0])
    return np.where(s >= 0.0, 1, -1).astype(int)


def resolve_mode_request(model: RobotModel, seed) -> np.ndarray:
    """Mode specification -> (L,) array of +-1."""
    nlegs = model.legs
    if isinstance(seed, str):
        if seed == "out":
            return np.ones(nlegs, dtype=int)
        if seed == "in":
            return -np.ones(nlegs, dtype=int)
        if seed == "alternating":
            return np.array([1 if i % 2 == 0 else -1 for i in range(nlegs)])
        raise ValueError(f"unknown mode pattern {seed!r}")
    modes = np.asarray(seed, dtype=int)
    if modes.shape != (nlegs,) or not np.all(np.abs(modes) == 1):
        raise ValueError("mode seed must be a length-L vector of +-1")
    return modes


# ---------------------------------------------------------------------------
# residual API


def constraint_residual(model: RobotModel, state: KinematicState,
                        include_reduced: bool = True):
    """Full closure residual (length n_q) and, optionally, the reduced
    residual (length n): the actuated coordinates minus the inverse
    kinematics solution of the stored pose for the stored assembly modes."""
    q2d = state.q2d(model)
    p_t, r_t = anchor_targets(model, state.x)
    fk = chain_fk(model, q2d)
    full = _leg_residuals(model, fk, p_t, r_t).ravel()
    if not include_reduced:
        return full, None
    ref = solve_ik(model, state.x, state.assembly_modes)
    reduced = state.q_a - ref.q_a
    return full, reduced


# ---------------------------------------------------------------------------
# Newton iteration


def _newton(model: RobotModel, q2d: np.ndarray, p_t: np.ndarray, r_t: np.ndarray,
            tol: float, max_iters: int, position_only: bool = False,
            legs_mask: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Damped Newton on the closure residual; returns (q2d, per-leg norms)."""
    q2d = q2d.copy()
    nlegs = q2d.shape[0]
    active = np.ones(nlegs, dtype=bool) if legs_mask is None else legs_mask.copy()
    rows = slice(0, 3) if (position_only and not model.planar) else slice(None)
    norms = np.full(nlegs, np.inf)
    for _ in range(max_iters):
        fk = chain_fk(model, q2d)
        res = _leg_residuals(model, fk, p_t, r_t)[:, rows]
        norms = np.linalg.norm(res, axis=1)
        active &= norms > tol
        if not active.any():
            break
        jac = _dresid_dq(model, fk, r_t)[:, rows, :]
        u, s, vt = np.linalg.svd(jac[active], full_matrices=False)
        lam = np.where(s[:, -1:] < LM_SMIN, LM_LAMBDA, 0.0)
        coef = s / (s * s + lam * lam)
        rhs = np.einsum("lkr,lr->lk", u.transpose(0, 2, 1), -res[active])
        step = np.einsum("ljk,lk->lj", vt.transpose(0, 2, 1), coef * rhs)
        big = np.max(np.abs(step), axis=1)
        scale = np.minimum(1.0, MAX_NEWTON_STEP / np.maximum(big, 1e-300))
        q2d[active] += step * scale[:, None]
    return q2d, norms


# ---------------------------------------------------------------------------
# analytic per-leg seeds


def _rus_like_theta1(b: np.ndarray, l1: float, l2: float) -> list[float]:
    """Both base-angle branches placing the elbow circle at rod distance
    from the coupling point ``b`` (anchor frame)."""
    rho = float(np.hypot(b[0], b[1]))
    if rho < 1e-12:
        return []
    h = (float(b @ b) + l1 * l1 - l2 * l2) / (2.0 * l1)
    if abs(h) > rho:
        return []
    phi = float(np.arctan2(b[1], b[0]))
    d = float(np.arccos(np.clip(h / rho, -1.0, 1.0)))
    return [phi - d, phi + d]


def _rus_leg_solution(model: RobotModel, leg: int, b: np.ndarray,
                      r_t_local: np.ndarray, theta1: float) -> np.ndarray:
    """Exact closed-form joint coordinates of one R-U-S leg for a given
    base-joint angle branch (anchor-frame quantities)."""
    v = model.params
    l1 = v["l1"]
    e = rot_z(theta1) @ np.array([l1, 0.0, 0.0])
    r = rot_z(-theta1) @ (b - e)
    t2 = float(np.arctan2(r[1], r[0]))
    t3 = float(np.arctan2(-r[2], np.hypot(r[0], r[1])))
    r_sofar = rot_z(theta1) @ rot_z(t2) @ rot_axis(1, t3)
    t4, t5, t6 = euler_zyx_from_matrix(r_sofar.T @ r_t_local)
    return np.array([theta1, t2, t3, t4, t5, t6])


def _planar_leg_solutions(b: np.ndarray, yaw: float, l1: float, l2: float) -> list[np.ndarray]:
    d2 = float(b[0] ** 2 + b[1] ** 2)
    c2 = (d2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
    if abs(c2) > 1.0:
        return []
    out = []
    for t2 in (float(np.arccos(np.clip(c2, -1, 1))), -float(np.arccos(np.clip(c2, -1, 1)))):
        t1 = float(np.arctan2(b[1], b[0]) - np.arctan2(l2 * np.sin(t2), l1 + l2 * np.cos(t2)))
        t3 = float(wrap_angle(yaw - t1 - t2))
        out.append(np.array([t1, t2, t3]))
    return out


def _leg_seed_candidates(model: RobotModel, leg: int, p_t: np.ndarray,
                         r_t: np.ndarray, mode: int) -> list[np.ndarray]:
    """Ordered start configurations for a cold per-leg IK solve."""
    anc = model.anchors
    b = anc.base_rot[leg].T @ (p_t[leg] - anc.base_pos[leg])
    r_loc = anc.base_rot[leg].T @ r_t[leg]
    nj = model.coords_per_leg

    if model.family.name == "planar-RRR":
        v = model.params
        yaw = float(np.arctan2(r_loc[1, 0], r_loc[0, 0]))
        return _planar_leg_solutions(b, yaw, v["l1"], v["l2"])

    if model.family.name == "RUS":
        v = model.params
        cands = [_rus_leg_solution(model, leg, b, r_loc, t1)
                 for t1 in _rus_like_theta1(b, v["l1"], v["l2"])]
        if cands:
            return cands

    # generic spatial chain: aim the base link using an equivalent two-link
    # decomposition, bend the first coordinate after each long link
    lengths = model.segment_lengths()
    l1 = float(lengths[0])
    rest = float(lengths[1:].sum())
    seeds = []
    theta1s: list[float] = []
    for frac in (0.92, 0.75, 0.55):
        theta1s.extend(_rus_like_theta1(b, l1, frac * rest))
    theta1s.extend([float(np.arctan2(b[1], b[0])) + mode * dt for dt in (0.3, 0.9, 1.5)])
    seg_joints = [j for j in model.segment_joints() if j > 0]
    for t1 in theta1s:
        q = np.zeros(nj)
        q[0] = t1
        for j in seg_joints:
            q[j] = 0.35 * mode
        seeds.append(q)
    return seeds


# ---------------------------------------------------------------------------
# inverse kinematics


def solve_ik(model: RobotModel, x: np.ndarray, seed,
             tol: float = IK_TOLERANCE, max_iters: int = MAX_IK_ITERS) -> KinematicState:
    """Solve loop closure for a platform pose.

    ``seed`` is either a previous :class:`KinematicState` (warm start; the
    solve must stay on that state's assembly-mode branches) or an
    assembly-mode request: a length-L vector of +-1 or one of the patterns
    ``"out"``, ``"in"``, ``"alternating"``.

    Raises :class:`IkConvergenceError` when the pose is unreachable within
    the iteration budget and :class:`ModeFlipError` when a warm-started
    solve leaves its branch.
    """
    x = np.asarray(x, dtype=float)
    p_t, r_t = anchor_targets(model, x)
    leg_tol = tol / np.sqrt(model.legs)

    if isinstance(seed, KinematicState):
        modes_req = seed.assembly_modes
        q2d, norms = _newton(model, seed.q2d(model), p_t, r_t, leg_tol, max_iters)
        if norms.max() > leg_tol:
            raise IkConvergenceError(
                f"IK did not converge (residual {np.linalg.norm(norms):.3e}) at pose {x}")
        modes = classify_modes(model, q2d)
        if np.any(modes != modes_req):
            bad = np.nonzero(modes != modes_req)[0].tolist()
            raise ModeFlipError(f"assembly mode flipped on legs {bad}")
        return KinematicState(x.copy(), q2d.ravel(), modes)

    modes_req = resolve_mode_request(model, seed)
    q2d = np.zeros((model.legs, model.coords_per_leg))
    for leg in range(model.legs):
        ok = False
        for q0 in _leg_seed_candidates(model, leg, p_t, r_t, int(modes_req[leg])):
            q_leg, norm = _solve_single_leg(model, leg, q0, p_t, r_t, leg_tol, max_iters)
            if norm <= leg_tol:
                mode = classify_modes(model, _expand_leg(model, leg, q_leg, q2d))[leg]
                if mode == modes_req[leg]:
                    q2d[leg] = q_leg
                    ok = True
                    break
        if not ok:
            raise IkConvergenceError(
                f"leg {leg}: no solution on requested assembly-mode branch at pose {x}")
    modes = classify_modes(model, q2d)
    return KinematicState(x.copy(), q2d.ravel(), modes)


def _expand_leg(model: RobotModel, leg: int, q_leg: np.ndarray,
                q2d: np.ndarray) -> np.ndarray:
    out = q2d.copy()
    out[leg] = q_leg
    return out


class _SingleLegModel:
    """Lightweight adapter exposing one leg as a one-leg robot for the
    batched chain routines."""

    def __init__(self, model: RobotModel, leg: int):
        self.chain = model.chain
        self.planar = model.planar
        anc = model.anchors
        from .families import Anchors
        self.anchors = Anchors(anc.base_pos[leg:leg + 1], anc.base_rot[leg:leg + 1],
                               anc.plat_pos[leg:leg + 1], anc.plat_rot[leg:leg + 1])


def _solve_single_leg(model: RobotModel, leg: int, q0: np.ndarray,
                      p_t: np.ndarray, r_t: np.ndarray, tol: float,
                      max_iters: int) -> tuple[np.ndarray, float]:
    sub = _SingleLegModel(model, leg)
    pt, rt = p_t[leg:leg + 1], r_t[leg:leg + 1]
    q = q0[None, :]
    if not model.planar:
        q, _ = _newton(sub, q, pt, rt, tol, 15, position_only=True)
    q, norms = _newton(sub, q, pt, rt, tol, max_iters)
    return q[0], float(norms[0])


# ---------------------------------------------------------------------------
# differential kinematics


@dataclass
class JacobianSet:
    """Differential kinematics at one closed configuration."""

    J_qx: np.ndarray      # (n_q, n): full-coordinate rates per pose rate
    J_xqa: np.ndarray     # (n, n): pose rates per actuated-joint rates
    condition: float      # 2-norm condition of the length-normalized J_xqa
    _dresid_dq: np.ndarray = field(repr=False, default=None)
    _dresid_dx: np.ndarray = field(repr=False, default=None)

    @property
    def J_qa_x(self) -> np.ndarray:
        """(n, n) actuated rows of J_qx (the inverse of J_xqa)."""
        n = self.J_xqa.shape[0]
        per_leg = self.J_qx.shape[0] // n
        return self.J_qx[::per_leg]


def jacobians(model: RobotModel, state: KinematicState) -> JacobianSet:
    """Full and actuated Jacobians via the implicit function theorem on the
    closure constraints; requires a closed state."""
    if state.jac is not None:
        return state.jac
    q2d = state.q2d(model)
    fk = state_fk(model, state)
    p_t, r_t = anchor_targets(model, state.x)
    ddq = _dresid_dq(model, fk, r_t)
    ddx = _dresid_dx(model, fk, state.x, r_t)

    sv = np.linalg.svd(ddq, compute_uv=False)
    bad = sv[:, -1] < SINGULARITY_RTOL * np.maximum(sv[:, 0], 1.0)
    if bad.any():
        raise LegSingularityError(
            f"legs {np.nonzero(bad)[0].tolist()} at a serial singularity")

    j_qx_legs = -np.linalg.solve(ddq, ddx)            # (L, J, n)
    j_qx = j_qx_legs.reshape(model.n_q, model.n)
    j_qa_x = j_qx_legs[:, 0, :]                       # actuated coordinate rows

    sv = np.linalg.svd(j_qa_x, compute_uv=False)
    if sv[-1] < SINGULARITY_RTOL * max(sv[0], 1.0):
        raise ParallelSingularityError("actuated Jacobian is singular")
    j_xqa = np.linalg.inv(j_qa_x)

    jac = JacobianSet(j_qx, j_xqa, _normalized_condition(model, j_xqa),
                      _dresid_dq=ddq, _dresid_dx=ddx)
    state.jac = jac
    return jac


def _normalized_condition(model: RobotModel, j_xqa: np.ndarray) -> float:
    """Condition number with rotational rows scaled by the platform radius
    so all rows share length units."""
    norm = j_xqa.copy()
    lc = model.platform_radius
    rot_rows = [2] if model.planar else [3, 4, 5]
    norm[rot_rows] *= lc
    sv = np.linalg.svd(norm, compute_uv=False)
    return float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")


# ---------------------------------------------------------------------------
# contact kinematics


@dataclass(frozen=True)
class MaterialPoint:
    """A material point on the robot: on a leg segment (arc fraction
    ``s`` in [0,1] from the proximal joint) or on the platform body."""

    leg: int | None = None
    segment: int | None = None
    s: float | None = None
    platform_offset: tuple[float, float, float] | None = None

    @staticmethod
    def on_segment(leg: int, segment: int, s: float) -> "MaterialPoint":
        if not 0.0 <= s <= 1.0:
            raise ValueError("arc fraction must lie in [0, 1]")
        return MaterialPoint(leg=leg, segment=segment, s=s)

    @staticmethod
    def on_platform(offset=(0.0, 0.0, 0.0)) -> "MaterialPoint":
        return MaterialPoint(platform_offset=tuple(float(v) for v in offset))

    @property
    def on_platform_body(self) -> bool:
        return self.platform_offset is not None


@dataclass
class ContactJacobian:
    point: MaterialPoint
    position: np.ndarray   # world coordinates of the contact point
    J_xC_qa: np.ndarray    # (6, n): actuated rates -> contact twist (v, w)


@dataclass
class Wrench:
    """External contact wrench: force [N] and moment [N m]."""

    f: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)
        self.m = np.asarray(self.m, dtype=float)
        if self.f.shape != (3,) or self.m.shape != (3,):
            raise ValueError("wrench needs 3-vector force and moment")
        if not (np.isfinite(self.f).all() and np.isfinite(self.m).all()):
            raise ValueError("wrench entries must be finite")

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.f, self.m])


def contact_point_position(model: RobotModel, state: KinematicState,
                           point: MaterialPoint) -> np.ndarray:
    if point.on_platform_body:
        p, r = pose_transform(model, state.x)
        return p + r @ np.asarray(point.platform_offset)
    fk = state_fk(model, state)
    j = model.segment_joints()[point.segment]
    return (1.0 - point.s) * fk.P[point.leg, j] + point.s * fk.P[point.leg, j + 1]


def contact_jacobian(model: RobotModel, state: KinematicState,
                     point: MaterialPoint) -> ContactJacobian:
    """Map actuated-joint rates to the 6D twist of a material point by
    chaining the point Jacobian through the full differential kinematics."""
    jac = jacobians(model, state)
    jp, jw = pose_rate_maps(model, state.x)
    if point.on_platform_body:
        p, r = pose_transform(model, state.x)
        c = r @ np.asarray(point.platform_offset)
        j_xc_x = np.vstack([jp - skew(c) @ jw, jw])
        return ContactJacobian(point, p + c, j_xc_x @ jac.J_xqa)

    fk = state_fk(model, state)
    seg_joints = model.segment_joints()
    if not (0 <= point.leg < model.legs) or not (0 <= point.segment < len(seg_joints)):
        raise ValueError(f"material point addresses a missing segment: {point}")
    j_link = seg_joints[point.segment]
    p_c = contact_point_position(model, state, point)
    nj = model.coords_per_leg
    j_xc_q = np.zeros((6, nj))
    for j in range(j_link + 1):
        w = fk.W[point.leg, j]
        j_xc_q[:3, j] = np.cross(w, p_c - fk.P[point.leg, j])
        j_xc_q[3:, j] = w
    rows = slice(point.leg * nj, (point.leg + 1) * nj)
    j_xc_x = j_xc_q @ jac.J_qx[rows]
    return ContactJacobian(point, p_c, j_xc_x @ jac.J_xqa)


def project_wrench(cj: ContactJacobian, w: Wrench) -> np.ndarray:
    """Kinetostatic projection of an external wrench at the contact point
    onto the actuated joints: tau = J^T F."""
    return cj.J_xC_qa.T @ w.as_array()


# ---------------------------------------------------------------------------
# trajectory solving


def solve_trajectory(model: RobotModel, poses: np.ndarray, seed,
                     tol: float = IK_TOLERANCE) -> list[KinematicState]:
    """Warm-started IK along a pose sequence.  The first sample uses the
    given mode request (or state); later samples must keep their branch.
    Errors are re-raised with the failing sample index attached."""
    states: list[KinematicState] = []
    current = seed
    for k, x in enumerate(np.asarray(poses, dtype=float)):
        try:
            st = solve_ik(model, x, current, tol=tol)
        except KinematicsError as err:
            err.sample_index = k
            raise
        states.append(st)
        current = st
    return states
