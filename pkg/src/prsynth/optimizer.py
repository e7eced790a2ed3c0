"""Multi-objective particle swarm synthesis with hierarchical constraints.

A candidate design is evaluated through an ordered ladder of feasibility
stages; the first violated stage yields a penalty from a band reserved for
that stage (bands are disjoint and strictly decreasing with stage depth, and
within a band the penalty grows with violation severity).  Evaluation aborts
at the first violation, so cheap checks shield the expensive ones.  Feasible
designs receive their objective vector; for swarm bookkeeping the objectives
are squashed through a bounded monotone map so every feasible fitness lies
strictly below all penalty bands without disturbing dominance order.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from . import geometry as G
from . import objectives as O
from .dynamics import InertiaModel, internal_load_estimate, inverse_dynamics_traj
from .families import Family, get_family
from .kinematics import KinematicsError, jacobians, solve_ik, solve_trajectory
from .model import RobotModel, tube_linear_density
from .objectives import DEFAULT_OBJECTIVE_SUBSET, ObjectiveVector, apply_soft_gates
from .scenario import Scenario

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1

STAGE_NAMES = {
    1: "parameter-plausibility",
    2: "reference-point-ik",
    3: "joint-limits",
    4: "self-collision",
    5: "installation-space",
    6: "trajectory-continuity",
    7: "condition-number",
    8: "position-error",
    9: "design-optimization",
    10: "objectives",
}

MODE_PATTERNS = ("out", "in", "alternating")

# squash scales: one objective unit of this size moves the bounded fitness
# by about a quarter of its range
SQUASH_SCALES = {"f1": 10.0, "f2": np.pi / 2, "f3": 0.1, "f4": 10.0,
                 "f5": 30.0, "f6": 10.0}
FEASIBLE_CEILING = 10.0


class PenaltyLadder:
    """Stage-ordered penalty bands: stage k covers (10^(10-k), 10^(10-k+1/2)];
    any stage-k violation outranks every deeper-stage outcome."""

    def __init__(self, n_stages: int = 9):
        self.n_stages = n_stages

    def band(self, stage: int) -> tuple[float, float]:
        if not 1 <= stage <= self.n_stages:
            raise ValueError(f"stage must be 1..{self.n_stages}")
        base = 10.0 ** (10 - stage)
        return base, base * 10.0 ** 0.5

    def penalty(self, stage: int, severity: float) -> float:
        lo, _ = self.band(stage)
        s = min(max(float(severity), 1e-9), 1.0)
        return lo * 10.0 ** (0.5 * s)


def saturate(value: float, scale: float) -> float:
    """Positive violation magnitude -> severity in (0, 1)."""
    v = max(float(value), 0.0)
    return v / (v + scale)


def squash_objectives(vec: ObjectiveVector, subset) -> np.ndarray:
    """Bounded strictly monotone image of the minimization-oriented
    objectives: every component lies in (0, FEASIBLE_CEILING)."""
    z = vec.as_minimization(subset) / np.array([SQUASH_SCALES[n] for n in subset])
    return FEASIBLE_CEILING / (1.0 + np.exp(-z))


# ---------------------------------------------------------------------------
# dominance


def dominates(a: np.ndarray, b: np.ndarray) -> bool:
    """Strict Pareto dominance on minimization-oriented vectors."""
    return bool(np.all(a <= b) and np.any(a < b))


def dominance(a: ObjectiveVector, b: ObjectiveVector,
              subset=DEFAULT_OBJECTIVE_SUBSET) -> str:
    """Pairwise Pareto relation on the configured objective subset."""
    va, vb = a.as_minimization(subset), b.as_minimization(subset)
    if dominates(va, vb):
        return "a_dominates"
    if dominates(vb, va):
        return "b_dominates"
    return "incomparable"


# ---------------------------------------------------------------------------
# configuration


@dataclass
class DesignOptConfig:
    """Inner single-objective search over the tube cross-section."""

    diameter_bounds: tuple[float, float] = (0.016, 0.060)
    wall_bounds: tuple[float, float] = (0.0012, 0.0040)
    particles: int = 12
    iterations: int = 18
    seed: int = 911


@dataclass
class SynthesisConfig:
    particles: int = 100
    generations: int = 100
    inertia_weight: float = 0.7
    cognitive: float = 1.5
    social: float = 1.5
    archive_capacity: int = 200
    seed: int = 0
    objective_subset: tuple = DEFAULT_OBJECTIVE_SUBSET
    hrc_sample_stride: int = 5
    mode_patterns: tuple = MODE_PATTERNS
    jobs: int = 1
    clearance: float = G.DEFAULT_CLEARANCE
    platform_exclusion_length: float = G.DEFAULT_PLATFORM_EXCLUSION
    design: DesignOptConfig = field(default_factory=DesignOptConfig)
    checkpoint_path: str | None = None

    def __post_init__(self):
        if self.particles < 2 or self.generations < 1:
            raise ValueError("need at least 2 particles and 1 generation")
        if not self.mode_patterns:
            raise ValueError("mode_patterns must be nonempty")


# ---------------------------------------------------------------------------
# fitness evaluation


@dataclass
class FitnessReport:
    """Outcome of one hierarchical evaluation."""

    fitness: np.ndarray                  # minimization vector for the swarm
    stage_failed: int | None = None      # None = reached the objectives
    penalty: float | None = None
    severity: float | None = None
    objectives: ObjectiveVector | None = None
    stages_run: list[int] = field(default_factory=list)
    mode_pattern: str = "out"
    design_section: tuple[float, float] | None = None
    detail: str = ""

    @property
    def feasible(self) -> bool:
        return self.objectives is not None


class FitnessEvaluator:
    """Evaluates geometry parameter vectors against one scenario.

    The extended parameter vector is the family's geometry vector plus one
    trailing categorical entry in [0, 1) selecting the assembly-mode
    pattern."""

    def __init__(self, scenario: Scenario, family: Family | str,
                 config: SynthesisConfig | None = None):
        self.scenario = scenario
        self.family = get_family(family) if isinstance(family, str) else family
        self.config = config or SynthesisConfig()
        self.ladder = PenaltyLadder()
        self.stage_counters = {k: 0 for k in STAGE_NAMES}
        if scenario.dof != self.family.dof:
            raise ValueError(
                f"scenario dof {scenario.dof} does not match family "
                f"{self.family.name} dof {self.family.dof}")

    @property
    def dimension(self) -> int:
        return len(self.family.params) + 1

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.family.bounds()
        return np.append(lo, 0.0), np.append(hi, 1.0)

    def mode_pattern(self, selector: float) -> str:
        pats = self.config.mode_patterns
        idx = min(int(float(selector) * len(pats)), len(pats) - 1)
        return pats[idx]

    # -- stage ladder -------------------------------------------------------
    def evaluate(self, p_ext: np.ndarray) -> FitnessReport:
        p_ext = np.asarray(p_ext, dtype=float)
        p = p_ext[:-1]
        pattern = self.mode_pattern(p_ext[-1])
        sc = self.scenario
        cfg = self.config
        n_obj = len(cfg.objective_subset)
        stages_run: list[int] = []

        def fail(stage: int, severity: float, detail: str) -> FitnessReport:
            pen = self.ladder.penalty(stage, severity)
            return FitnessReport(np.full(n_obj, pen), stage_failed=stage,
                                 penalty=pen, severity=severity,
                                 stages_run=stages_run, mode_pattern=pattern,
                                 detail=detail)

        def enter(stage: int):
            stages_run.append(stage)
            self.stage_counters[stage] += 1

        # 1: parameter plausibility
        enter(1)
        model = RobotModel(self.family, p, platform_extra_mass=sc.platform_extra_mass)
        v = model.params
        if v["platform_radius"] >= v["base_radius"]:
            return fail(1, saturate(v["platform_radius"] - v["base_radius"],
                                    0.2 * v["base_radius"]),
                        "platform radius exceeds base radius")
        reach = float(model.segment_lengths().sum())
        span = self._required_span(model)
        if span > 0.98 * reach:
            return fail(1, saturate(span - 0.98 * reach, 0.5),
                        "legs cannot span the task volume")

        # 2: inverse kinematics at the reference points
        enter(2)
        ref_states = []
        for k, pose in enumerate(sc.reference_points):
            try:
                ref_states.append(solve_ik(model, pose, pattern))
            except KinematicsError:
                n_ref = sc.reference_points.shape[0]
                return fail(2, (n_ref - k) / n_ref, f"reference point {k} unreachable")

        # 3: joint limits
        enter(3)
        lim = model.joint_limits()
        excess = 0.0
        for st in ref_states:
            q2 = st.q2d(model)
            excess = max(excess, float(np.maximum(q2 - lim[:, 1], 0.0).max()),
                         float(np.maximum(lim[:, 0] - q2, 0.0).max()))
        if excess > 0.0:
            return fail(3, saturate(excess, 0.5), "joint limit exceeded")

        # 4: self-collision at the reference points
        enter(4)
        ref_caps = [G.build_collision_set(model, st, cfg.clearance,
                                          cfg.platform_exclusion_length)
                    for st in ref_states]
        worst_pen = 0.0
        for caps in ref_caps:
            worst_pen = max(worst_pen, -min(0.0, G.self_collision_distance(caps)))
        if worst_pen > 0.0:
            return fail(4, saturate(worst_pen, 0.05), "self-collision")

        # 5: installation-space containment (leg capsule axes plus the
        # platform disc rim)
        enter(5)
        protrusion = 0.0
        for st, caps in zip(ref_states, ref_caps):
            rep = G.containment_check(caps, sc.installation_spaces)
            protrusion = max(protrusion, rep.max_protrusion)
            rim = _platform_rim_points(model, st)
            out = np.full(rim.shape[0], np.inf)
            for box in sc.installation_spaces:
                out = np.minimum(out, box.outside_distance(rim))
            protrusion = max(protrusion, float(out.max()))
        if protrusion > 0.0:
            return fail(5, saturate(protrusion, 0.2), "outside installation space")

        # 6: trajectory continuity (reachability, no mode flips)
        enter(6)
        try:
            states = solve_trajectory(model, sc.trajectory.x, pattern)
        except KinematicsError as err:
            k = getattr(err, "sample_index", 0)
            n_t = len(sc.trajectory)
            return fail(6, (n_t - k) / n_t, f"trajectory breaks at sample {k}")

        # 7: condition-number gate
        enter(7)
        try:
            max_cond = max(jacobians(model, st).condition
                           for st in states + ref_states)
        except KinematicsError:
            return fail(7, 1.0, "singular configuration")
        if max_cond >= sc.limits.max_cond:
            return fail(7, saturate(max_cond - sc.limits.max_cond, sc.limits.max_cond),
                        "ill-conditioned")

        # 8: position-error gate
        enter(8)
        hrc_states = states[::cfg.hrc_sample_stride]
        pos_err = O.position_error(model, hrc_states, sc.encoder_resolution)
        if pos_err >= sc.limits.max_pos_err:
            return fail(8, saturate((pos_err - sc.limits.max_pos_err) / sc.limits.max_pos_err, 1.0),
                        "position error too large")

        # 9: structural design optimization + material-stress gate
        enter(9)
        design = design_optimization(model, sc, states, ref_states, cfg)
        if not design.feasible:
            return fail(9, saturate(design.best_utilization - sc.limits.max_stress_util, 0.5),
                        "no admissible cross-section")
        model = model.with_section(design.diameter, design.wall)

        # 10: objective evaluation
        enter(10)
        inertia = InertiaModel.from_model(model)
        loads = inverse_dynamics_traj(model, inertia, sc.trajectory, states)
        f1 = O.f1_detectability(model, hrc_states, sc.sampling, sc.interaction_space)
        f2 = O.f2_min_passive_angle(model, hrc_states)
        f3 = O.f3_min_clamp_distance(model, hrc_states, sc.interaction_space,
                                     cfg.clearance, cfg.platform_exclusion_length)
        f4 = O.f4_effective_mass(model, inertia, hrc_states)
        f5, f6 = O.f5_f6_drive_load(model, inertia, sc.trajectory, loads=loads)
        vec = ObjectiveVector(f1, f2, f3, f4, f5, f6,
                              position_error=pos_err, condition=max_cond,
                              stress_utilization=design.utilization)
        apply_soft_gates(vec, sc.limits)
        return FitnessReport(squash_objectives(vec, cfg.objective_subset),
                             objectives=vec, stages_run=stages_run,
                             mode_pattern=pattern,
                             design_section=(design.diameter, design.wall))

    def _required_span(self, model: RobotModel) -> float:
        sc = self.scenario
        pts = np.vstack([sc.reference_points, sc.trajectory.x])
        anc = model.anchors
        if self.family.planar:
            pos = np.column_stack([pts[:, 0], pts[:, 1], np.zeros(len(pts))])
        else:
            pos = pts[:, :3]
        d = np.linalg.norm(pos[:, None, :] - anc.base_pos[None, :, :], axis=-1)
        return float(d.max()) - model.platform_radius


def _platform_rim_points(model: RobotModel, state) -> np.ndarray:
    """Rim of the platform disc body (world coordinates)."""
    from .kinematics import pose_transform
    p, r = pose_transform(model, state.x)
    ang = np.arange(8) * (np.pi / 4.0)
    local = model.platform_radius * np.stack(
        [np.cos(ang), np.sin(ang), np.zeros(8)], axis=-1)
    return p + local @ r.T


def evaluate_fitness(p_ext: np.ndarray, scenario: Scenario, family,
                     config: SynthesisConfig | None = None) -> FitnessReport:
    """One-shot hierarchical evaluation of an extended parameter vector."""
    return FitnessEvaluator(scenario, family, config).evaluate(p_ext)


# ---------------------------------------------------------------------------
# design optimization (inner, single objective)


@dataclass
class DesignResult:
    diameter: float
    wall: float
    feasible: bool
    utilization: float
    mass: float
    best_utilization: float   # best achievable, for penalty grading


def design_optimization(model: RobotModel, scenario: Scenario,
                        traj_states, ref_states,
                        config: SynthesisConfig) -> DesignResult:
    """Minimal-mass tube cross-section subject to the material-stress gate
    and re-checked clearance/containment with the inflated capsules.

    A small single-objective particle swarm explores the (diameter, wall)
    box; the incumbent is then polished by bisecting each coordinate down
    to the feasibility boundary, which also pins the exact lower-bound
    optimum when the loads are negligible."""
    cfg = config.design
    limits = scenario.limits
    inertia = InertiaModel.from_model(model)
    loads, self_bending = internal_load_estimate(model, inertia,
                                                 scenario.trajectory, traj_states)
    rho0 = model.link_density

    # radius-independent geometry envelopes at the reference states: the
    # closest leg-leg axis distance bounds the diameter; inflated-tube
    # containment is checked by sampling the tube surface against the
    # union of installation cuboids (per-box depths are meaningless at the
    # seams between adjacent cuboids)
    core_clearance = np.inf
    axis_pts = []
    axis_dirs = []
    ts = np.linspace(0.0, 1.0, 9)[:, None]
    for st in ref_states:
        caps = G.build_collision_set(model, st, 0.0, config.platform_exclusion_length)
        pairs = G.collision_pairs(caps, clamp_only=False)
        if pairs:
            radii = np.array([caps[i].radius + caps[j].radius for i, j in pairs])
            d = G._pair_distances(caps, pairs, clamp_extent=False) + radii
            leg_pairs = [k for k, (i, j) in enumerate(pairs)
                         if caps[i].owner[0] == "leg" and caps[j].owner[0] == "leg"]
            if leg_pairs:
                core_clearance = min(core_clearance, float(d[leg_pairs].min()))
        for c in caps:
            if c.owner[0] != "leg":
                continue
            axis_pts.append(c.a + ts * (c.b - c.a))
            u = c.b - c.a
            norm = np.linalg.norm(u)
            u = u / norm if norm > 0 else np.array([0.0, 0.0, 1.0])
            axis_dirs.append(np.tile(u, (len(ts), 1)))
    axis_pts = np.concatenate(axis_pts)
    axis_dirs = np.concatenate(axis_dirs)
    ref_vec = np.where(np.abs(axis_dirs[:, 2:3]) > 0.9,
                       np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]))
    n1 = np.cross(axis_dirs, ref_vec)
    n1 /= np.linalg.norm(n1, axis=1, keepdims=True)
    n2 = np.cross(axis_dirs, n1)
    ring = np.arange(8) * (np.pi / 4.0)
    boxes = [b for b in scenario.installation_spaces if b.role != "forbidden"]

    offs_unit = (np.cos(ring)[:, None, None] * n1[None, :, :]
                 + np.sin(ring)[:, None, None] * n2[None, :, :])

    def surface_contained(radius: float) -> bool:
        pts = (axis_pts[None, :, :] + radius * offs_unit).reshape(-1, 3)
        out = np.full(pts.shape[0], np.inf)
        for box in boxes:
            out = np.minimum(out, box.outside_distance(pts))
        return bool(out.max() <= 1e-9)

    # both geometric constraints are monotone in the radius: collapse them
    # into one maximum admissible diameter up front
    d_geo_max = core_clearance - 2.0 * config.clearance
    if surface_contained(cfg.diameter_bounds[0] / 2.0 + config.clearance):
        r_max = _bisect_up(surface_contained, cfg.diameter_bounds[0] / 2.0 + config.clearance,
                           cfg.diameter_bounds[1] / 2.0 + config.clearance)
        d_geo_max = min(d_geo_max, 2.0 * (r_max - config.clearance))
    else:
        d_geo_max = -1.0

    total_len = float(model.segment_lengths().sum() * model.legs
                      + 2.0 * np.pi * model.platform_radius)

    def mass(d, w):
        return tube_linear_density(d, w) * total_len

    def utilization(d, w):
        scaled = loads.rescale_self_weight(rho0, tube_linear_density(d, w), self_bending)
        return scaled.stress_utilization(d, w)

    def feasible(d, w):
        return d <= d_geo_max and utilization(d, w) < limits.max_stress_util

    (d_lo, d_hi), (w_lo, w_hi) = cfg.diameter_bounds, cfg.wall_bounds
    if feasible(d_lo, w_lo):
        best = (d_lo, w_lo)
    else:
        best = _design_pso(mass, feasible, (d_lo, d_hi), (w_lo, w_hi), cfg)
    if best is None:
        # best achievable utilization for penalty grading: strongest section
        d_try = min(d_hi, max(d_lo, d_geo_max))
        best_util = min(utilization(d_try, w_hi), utilization(d_hi, w_hi))
        return DesignResult(d_hi, w_hi, False, np.nan, mass(d_hi, w_hi), best_util)

    d, w = best
    d = _bisect_down(lambda dd: feasible(dd, w), d_lo, d)
    w = _bisect_down(lambda ww: feasible(d, ww), w_lo, w)
    d = _bisect_down(lambda dd: feasible(dd, w), d_lo, d)
    return DesignResult(d, w, True, utilization(d, w), mass(d, w),
                        utilization(d, w))


def _design_pso(mass, feasible, d_bounds, w_bounds, cfg: DesignOptConfig):
    rng = np.random.default_rng(cfg.seed)
    lo = np.array([d_bounds[0], w_bounds[0]])
    hi = np.array([d_bounds[1], w_bounds[1]])
    n = cfg.particles
    pos = lo + rng.random((n, 2)) * (hi - lo)
    pos[0] = lo
    pos[1] = hi
    vel = np.zeros((n, 2))

    def cost(x):
        return mass(*x) + (0.0 if feasible(*x) else 1e6)

    costs = np.array([cost(x) for x in pos])
    pbest, pcost = pos.copy(), costs.copy()
    g = int(np.argmin(pcost))
    for _ in range(cfg.iterations):
        r1 = rng.random((n, 2))
        r2 = rng.random((n, 2))
        vel = 0.7 * vel + 1.5 * r1 * (pbest - pos) + 1.5 * r2 * (pbest[g] - pos)
        pos = np.clip(pos + vel, lo, hi)
        costs = np.array([cost(x) for x in pos])
        better = costs < pcost
        pbest[better] = pos[better]
        pcost[better] = costs[better]
        g = int(np.argmin(pcost))
    if pcost[g] >= 1e6:
        return None
    return tuple(pbest[g])


def _bisect_down(pred, lo: float, hi: float, iters: int = 40) -> float:
    """Smallest value in [lo, hi] with pred true, assuming pred(hi) holds
    and the feasible set is an upper interval."""
    if pred(lo):
        return lo
    a, b = lo, hi
    for _ in range(iters):
        m = 0.5 * (a + b)
        if pred(m):
            b = m
        else:
            a = m
    return b


def _bisect_up(pred, lo: float, hi: float, iters: int = 30) -> float:
    """Largest value in [lo, hi] with pred true, assuming pred(lo) holds
    and the true set is a lower interval."""
    if pred(hi):
        return hi
    a, b = lo, hi
    for _ in range(iters):
        m = 0.5 * (a + b)
        if pred(m):
            a = m
        else:
            b = m
    return a


# ---------------------------------------------------------------------------
# Pareto archive


@dataclass
class ArchiveRecord:
    p_ext: np.ndarray
    objectives: ObjectiveVector
    fitness_min: np.ndarray        # minimization-oriented raw objectives
    mode_pattern: str
    design_section: tuple[float, float] | None
    feasible_soft: bool


class ParetoArchive:
    """Mutually non-dominated designs with crowding-distance pruning."""

    def __init__(self, capacity: int = 200, subset=DEFAULT_OBJECTIVE_SUBSET):
        self.capacity = capacity
        self.subset = tuple(subset)
        self.records: list[ArchiveRecord] = []

    def __len__(self) -> int:
        return len(self.records)

    def insert(self, p_ext: np.ndarray, report: FitnessReport) -> bool:
        if not report.feasible:
            return False
        vec = report.objectives.as_minimization(self.subset)
        for rec in self.records:
            if dominates(rec.fitness_min, vec):
                return False
            if np.array_equal(rec.p_ext, p_ext):
                return False
        self.records = [rec for rec in self.records
                        if not dominates(vec, rec.fitness_min)]
        self.records.append(ArchiveRecord(
            np.asarray(p_ext, dtype=float).copy(), report.objectives, vec,
            report.mode_pattern, report.design_section,
            report.objectives.feasible_soft))
        if len(self.records) > self.capacity:
            self._prune()
        return True

    def _prune(self):
        while len(self.records) > self.capacity:
            dist = self.crowding_distances()
            self.records.pop(int(np.argmin(dist)))

    def crowding_distances(self) -> np.ndarray:
        n = len(self.records)
        if n == 0:
            return np.empty(0)
        vals = np.array([r.fitness_min for r in self.records])
        dist = np.zeros(n)
        for k in range(vals.shape[1]):
            order = np.argsort(vals[:, k], kind="stable")
            vmin, vmax = vals[order[0], k], vals[order[-1], k]
            dist[order[0]] = dist[order[-1]] = np.inf
            if vmax - vmin <= 0:
                continue
            for i in range(1, n - 1):
                dist[order[i]] += (vals[order[i + 1], k] - vals[order[i - 1], k]) / (vmax - vmin)
        return dist

    def is_non_dominated(self) -> bool:
        for i, a in enumerate(self.records):
            for j, b in enumerate(self.records):
                if i != j and dominates(a.fitness_min, b.fitness_min):
                    return False
        return True


# ---------------------------------------------------------------------------
# swarm


@dataclass
class Particle:
    u: np.ndarray              # normalized position in [0,1]^d
    v: np.ndarray
    report: FitnessReport | None = None
    pbest_u: np.ndarray | None = None
    pbest_fitness: np.ndarray | None = None


class Swarm:
    def __init__(self, particles: list[Particle], lo: np.ndarray, hi: np.ndarray):
        self.particles = particles
        self.lo = lo
        self.hi = hi

    def denormalize(self, u: np.ndarray) -> np.ndarray:
        return self.lo + u * (self.hi - self.lo)

    @staticmethod
    def latin_hypercube(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
        u = np.empty((n, dim))
        for k in range(dim):
            u[:, k] = (rng.permutation(n) + rng.random(n)) / n
        return u


def _select_leader(archive: ParetoArchive, swarm: Swarm,
                   rng: np.random.Generator) -> np.ndarray:
    if len(archive) >= 2:
        dist = archive.crowding_distances()
        i, j = rng.integers(0, len(archive), size=2)
        pick = i if dist[i] >= dist[j] else j
        lo, hi = swarm.lo, swarm.hi
        return (archive.records[pick].p_ext - lo) / (hi - lo)
    if len(archive) == 1:
        return (archive.records[0].p_ext - swarm.lo) / (swarm.hi - swarm.lo)
    best = min(swarm.particles,
               key=lambda pt: float(np.max(pt.pbest_fitness)))
    return best.pbest_u


def _update_pbest(particle: Particle, rng: np.random.Generator):
    new = particle.report.fitness
    if particle.pbest_fitness is None or dominates(new, particle.pbest_fitness):
        particle.pbest_u = particle.u.copy()
        particle.pbest_fitness = new.copy()
    elif not dominates(particle.pbest_fitness, new):
        if rng.random() < 0.5:
            particle.pbest_u = particle.u.copy()
            particle.pbest_fitness = new.copy()


def pso_step(swarm: Swarm, archive: ParetoArchive, evaluate_fn,
             config: SynthesisConfig, rng: np.random.Generator,
             pool=None) -> None:
    """One synchronous swarm generation: velocity/position update, fitness
    evaluation, personal bests and archive insertion."""
    w, c1, c2 = config.inertia_weight, config.cognitive, config.social
    dim = swarm.lo.shape[0]
    for pt in swarm.particles:
        leader = _select_leader(archive, swarm, rng)
        r1 = rng.random(dim)
        r2 = rng.random(dim)
        pt.v = w * pt.v + c1 * r1 * (pt.pbest_u - pt.u) + c2 * r2 * (leader - pt.u)
        pt.u = pt.u + pt.v
        out = (pt.u < 0.0) | (pt.u > 1.0)
        pt.v[out] = 0.0
        np.clip(pt.u, 0.0, 1.0, out=pt.u)
    _evaluate_swarm(swarm, evaluate_fn, pool)
    for pt in swarm.particles:
        _update_pbest(pt, rng)
        archive.insert(swarm.denormalize(pt.u), pt.report)


def _evaluate_swarm(swarm: Swarm, evaluate_fn, pool) -> None:
    ps = [swarm.denormalize(pt.u) for pt in swarm.particles]
    if pool is None:
        reports = [evaluate_fn(p) for p in ps]
    else:
        reports = list(pool.map(_pool_eval, ps))
    for pt, rep in zip(swarm.particles, reports):
        pt.report = rep


# worker-side state for process pools
_WORKER_EVALUATOR: FitnessEvaluator | None = None


def _pool_init(scenario_dict, family_name, config):
    global _WORKER_EVALUATOR
    from .scenario import scenario_from_dict
    _WORKER_EVALUATOR = FitnessEvaluator(scenario_from_dict(scenario_dict),
                                         family_name, config)


def _pool_eval(p_ext):
    return _WORKER_EVALUATOR.evaluate(p_ext)


# ---------------------------------------------------------------------------
# synthesis run


@dataclass
class RunReport:
    family: str
    seed: int
    generations: int
    evaluations: int
    feasible_evaluations: int
    stage_aborts: dict
    archive_size: int
    runtime_s: float

    def as_text(self) -> str:
        lines = [
            f"family:               {self.family}",
            f"seed:                 {self.seed}",
            f"generations:          {self.generations}",
            f"evaluations:          {self.evaluations}",
            f"feasible evaluations: {self.feasible_evaluations}",
            f"archive size:         {self.archive_size}",
            f"runtime [s]:          {self.runtime_s:.1f}",
            "stage aborts:",
        ]
        for k in sorted(self.stage_aborts):
            lines.append(f"  stage {k} ({STAGE_NAMES[int(k)]}): {self.stage_aborts[k]}")
        return "\n".join(lines) + "\n"


@dataclass
class SynthesisResult:
    archive: ParetoArchive
    report: RunReport
    swarm: Swarm


def run_synthesis(scenario: Scenario, family, config: SynthesisConfig) -> SynthesisResult:
    """Full multi-objective synthesis for one leg-chain family."""
    t0 = time.perf_counter()
    evaluator = FitnessEvaluator(scenario, family, config)
    rng = np.random.default_rng(config.seed)
    lo, hi = evaluator.bounds()
    dim = lo.shape[0]
    u0 = Swarm.latin_hypercube(config.particles, dim, rng)
    swarm = Swarm([Particle(u=u0[i], v=np.zeros(dim)) for i in range(config.particles)],
                  lo, hi)
    archive = ParetoArchive(config.archive_capacity, config.objective_subset)

    pool = None
    stage_aborts: dict[int, int] = {}
    evaluations = 0
    feasible = 0

    def account(reports):
        nonlocal evaluations, feasible
        for rep in reports:
            evaluations += 1
            if rep.feasible:
                feasible += 1
            elif rep.stage_failed is not None:
                stage_aborts[rep.stage_failed] = stage_aborts.get(rep.stage_failed, 0) + 1

    try:
        if config.jobs > 1:
            from .scenario import scenario_to_dict
            pool = ProcessPoolExecutor(
                max_workers=config.jobs, initializer=_pool_init,
                initargs=(scenario_to_dict(scenario), evaluator.family.name, config))
        _evaluate_swarm(swarm, evaluator.evaluate, pool)
        for pt in swarm.particles:
            _update_pbest(pt, rng)
            archive.insert(swarm.denormalize(pt.u), pt.report)
        account([pt.report for pt in swarm.particles])
        _checkpoint(config, evaluator, swarm, archive, rng, 0)

        for gen in range(1, config.generations + 1):
            pso_step(swarm, archive, evaluator.evaluate, config, rng, pool)
            account([pt.report for pt in swarm.particles])
            _checkpoint(config, evaluator, swarm, archive, rng, gen)
            log.info("generation %d/%d: archive %d, feasible %d/%d",
                     gen, config.generations, len(archive), feasible, evaluations)
    finally:
        if pool is not None:
            pool.shutdown()

    report = RunReport(evaluator.family.name, config.seed, config.generations,
                       evaluations, feasible,
                       {int(k): v for k, v in sorted(stage_aborts.items())},
                       len(archive), time.perf_counter() - t0)
    return SynthesisResult(archive, report, swarm)


# ---------------------------------------------------------------------------
# checkpointing


def _checkpoint(config: SynthesisConfig, evaluator: FitnessEvaluator,
                swarm: Swarm, archive: ParetoArchive,
                rng: np.random.Generator, generation: int) -> None:
    if config.checkpoint_path is None:
        return
    save_checkpoint(config.checkpoint_path, evaluator.family.name, config,
                    swarm, archive, rng, generation)


def save_checkpoint(path: str, family_name: str, config: SynthesisConfig,
                    swarm: Swarm, archive: ParetoArchive,
                    rng: np.random.Generator, generation: int) -> None:
    """Atomic (write-then-rename) JSON snapshot of the run state."""
    def obj_dict(vec: ObjectiveVector) -> dict:
        return {
            "f": [vec.f1, vec.f2, vec.f3, vec.f4, vec.f5, vec.f6],
            "position_error": vec.position_error,
            "condition": vec.condition,
            "stress_utilization": vec.stress_utilization,
            "soft_flags": {k: bool(v) for k, v in vec.soft_flags.items()},
        }

    data = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "family": family_name,
        "generation": generation,
        "seed": config.seed,
        "objective_subset": list(config.objective_subset),
        "swarm": [{
            "u": pt.u.tolist(),
            "v": pt.v.tolist(),
            "pbest_u": pt.pbest_u.tolist() if pt.pbest_u is not None else None,
            "pbest_fitness": pt.pbest_fitness.tolist() if pt.pbest_fitness is not None else None,
        } for pt in swarm.particles],
        "bounds": {"lo": swarm.lo.tolist(), "hi": swarm.hi.tolist()},
        "archive": [{
            "p_ext": rec.p_ext.tolist(),
            "objectives": obj_dict(rec.objectives),
            "mode_pattern": rec.mode_pattern,
            "design_section": list(rec.design_section) if rec.design_section else None,
            "feasible_soft": rec.feasible_soft,
        } for rec in archive.records],
        "rng_state": rng.bit_generator.state,
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(data, fh)
    os.replace(tmp, path)


def load_checkpoint(path: str) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    if data.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version in {path}")
    return data


def archive_from_checkpoint(data: dict, capacity: int = 200) -> ParetoArchive:
    archive = ParetoArchive(capacity, tuple(data["objective_subset"]))
    for rec in data["archive"]:
        f = rec["objectives"]["f"]
        vec = ObjectiveVector(*f,
                              position_error=rec["objectives"]["position_error"],
                              condition=rec["objectives"]["condition"],
                              stress_utilization=rec["objectives"]["stress_utilization"])
        vec.soft_flags = dict(rec["objectives"]["soft_flags"])
        report = FitnessReport(
            fitness=squash_objectives(vec, archive.subset), objectives=vec,
            mode_pattern=rec["mode_pattern"],
            design_section=tuple(rec["design_section"]) if rec["design_section"] else None)
        archive.insert(np.asarray(rec["p_ext"]), report)
    return archive
