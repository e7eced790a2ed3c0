"""Capsule collision bodies, pairwise distances and containment tests.

Robot links are wrapped in capsules (segment plus radius).  Distances are
exact segment-segment distances minus the radius sum; negative values mean
interpenetration.  Cuboids describe installation and interaction regions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kinematics import KinematicState, pose_transform, state_fk
from .model import RobotModel

DEFAULT_CLEARANCE = 0.005             # m added to the tube radius
DEFAULT_PLATFORM_EXCLUSION = 0.1      # m kept clear of the platform coupling

_EPS = 1e-12


# ---------------------------------------------------------------------------
# primitives


def segment_closest_params(p0, p1, q0, q1):
    """Closest-point parameters (s, t) between segments; batched over the
    leading axes.  Degenerate (parallel or zero-length) cases tie-break
    toward parameter 0."""
    p0, p1, q0, q1 = (np.asarray(v, dtype=float) for v in (p0, p1, q0, q1))
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = np.einsum("...i,...i->...", d1, d1)
    e = np.einsum("...i,...i->...", d2, d2)
    f = np.einsum("...i,...i->...", d2, r)
    c = np.einsum("...i,...i->...", d1, r)
    b = np.einsum("...i,...i->...", d1, d2)
    denom = a * e - b * b

    s = np.where(denom > _EPS, (b * f - c * e) / np.where(denom > _EPS, denom, 1.0), 0.0)
    s = np.clip(s, 0.0, 1.0)
    t = np.where(e > _EPS, (b * s + f) / np.where(e > _EPS, e, 1.0), 0.0)

    a_safe = np.where(a > _EPS, a, 1.0)
    s = np.where(t < 0.0, np.clip(-c / a_safe, 0.0, 1.0), s)
    s = np.where(t > 1.0, np.clip((b - c) / a_safe, 0.0, 1.0), s)
    t = np.clip(t, 0.0, 1.0)
    s = np.where(a > _EPS, s, 0.0)
    return s, t


def segment_distance(p0, p1, q0, q1):
    """Euclidean segment-segment distance; batched."""
    s, t = segment_closest_params(p0, p1, q0, q1)
    p0, p1, q0, q1 = (np.asarray(v, dtype=float) for v in (p0, p1, q0, q1))
    cp = p0 + s[..., None] * (p1 - p0)
    cq = q0 + t[..., None] * (q1 - q0)
    return np.linalg.norm(cp - cq, axis=-1)


@dataclass
class Capsule:
    """Collision body: a line segment inflated by a radius.

    ``clamp_a``/``clamp_b`` hold the (possibly truncated) extent that
    participates in the clamping-distance criterion; ``clamp_candidate``
    is False for bodies excluded from it (e.g. the platform)."""

    a: np.ndarray
    b: np.ndarray
    radius: float
    owner: tuple
    clamp_candidate: bool = True
    clamp_a: np.ndarray | None = None
    clamp_b: np.ndarray | None = None

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.radius <= 0:
            raise ValueError("capsule radius must be positive")
        if not (np.isfinite(self.a).all() and np.isfinite(self.b).all()):
            raise ValueError("capsule endpoints must be finite")
        if self.clamp_a is None:
            self.clamp_a = self.a
        if self.clamp_b is None:
            self.clamp_b = self.b


def capsule_distance(a: Capsule, b: Capsule) -> float:
    """Signed surface distance; negative means interpenetration."""
    return float(segment_distance(a.a, a.b, b.a, b.b)) - a.radius - b.radius


@dataclass
class Cuboid:
    """Axis-aligned box with a semantic role."""

    min_corner: np.ndarray
    max_corner: np.ndarray
    role: str = "installation"   # installation | interaction | forbidden

    def __post_init__(self):
        self.min_corner = np.asarray(self.min_corner, dtype=float)
        self.max_corner = np.asarray(self.max_corner, dtype=float)
        if not np.all(self.min_corner < self.max_corner):
            raise ValueError("cuboid needs min_corner < max_corner componentwise")

    def outside_distance(self, points: np.ndarray) -> np.ndarray:
        """Euclidean distance from points to the box (0 inside); batched."""
        points = np.asarray(points, dtype=float)
        d = np.maximum(self.min_corner - points, 0.0)
        d = np.maximum(d, points - self.max_corner)
        return np.linalg.norm(d, axis=-1)

    def inside_depth(self, points: np.ndarray) -> np.ndarray:
        """Smallest distance to a face from inside (negative outside)."""
        points = np.asarray(points, dtype=float)
        lo = points - self.min_corner
        hi = self.max_corner - points
        return np.minimum(lo, hi).min(axis=-1)

    def contains(self, points: np.ndarray) -> np.ndarray:
        return self.inside_depth(points) >= 0.0


# ---------------------------------------------------------------------------
# robot collision set


def build_collision_set(model: RobotModel, state: KinematicState,
                        clearance: float = DEFAULT_CLEARANCE,
                        platform_exclusion_length: float = DEFAULT_PLATFORM_EXCLUSION,
                        ) -> list[Capsule]:
    """Capsules for all leg segments plus one platform body.

    Leg capsule radii are the tube radius plus ``clearance``.  The platform
    is approximated by a sphere of the platform radius.  Segment ends within
    ``platform_exclusion_length`` of their platform coupling point are cut
    back for the clamping-distance candidates but keep their full extent for
    self-collision."""
    fk = state_fk(model, state)
    seg_joints = model.segment_joints()
    tube_r = model.tube_diameter / 2 + clearance
    last_seg = len(seg_joints) - 1
    capsules: list[Capsule] = []
    for leg in range(model.legs):
        for k, j in enumerate(seg_joints):
            a = fk.P[leg, j]
            b = fk.P[leg, j + 1]
            cap = Capsule(a, b, tube_r, owner=("leg", leg, k))
            if k == last_seg:
                axis = b - a
                length = float(np.linalg.norm(axis))
                cut = min(platform_exclusion_length, length)
                if length > _EPS and length - cut > _EPS:
                    cap.clamp_b = b - axis / length * cut
                else:
                    cap.clamp_candidate = False
            capsules.append(cap)
    p, _ = pose_transform(model, state.x)
    capsules.append(Capsule(p, p, model.platform_radius + clearance,
                            owner=("platform",), clamp_candidate=False))
    return capsules


def _adjacent(a: Capsule, b: Capsule, last_segment: int) -> bool:
    if a.owner[0] == "leg" and b.owner[0] == "leg":
        return a.owner[1] == b.owner[1] and abs(a.owner[2] - b.owner[2]) <= 1
    leg = a if a.owner[0] == "leg" else b
    # platform is attached to the distal segment of every leg
    return leg.owner[2] == last_segment


def _last_segment_index(capsules: list[Capsule]) -> int:
    return max(c.owner[2] for c in capsules if c.owner[0] == "leg")


def collision_pairs(capsules: list[Capsule], clamp_only: bool) -> list[tuple[int, int]]:
    last = _last_segment_index(capsules)
    pairs = []
    for i in range(len(capsules)):
        for j in range(i + 1, len(capsules)):
            a, b = capsules[i], capsules[j]
            if clamp_only and not (a.clamp_candidate and b.clamp_candidate):
                continue
            if _adjacent(a, b, last):
                continue
            pairs.append((i, j))
    return pairs


def _pair_distances(capsules: list[Capsule], pairs: list[tuple[int, int]],
                    clamp_extent: bool) -> np.ndarray:
    if not pairs:
        return np.empty(0)
    if clamp_extent:
        p0 = np.array([capsules[i].clamp_a for i, _ in pairs])
        p1 = np.array([capsules[i].clamp_b for i, _ in pairs])
        q0 = np.array([capsules[j].clamp_a for _, j in pairs])
        q1 = np.array([capsules[j].clamp_b for _, j in pairs])
    else:
        p0 = np.array([capsules[i].a for i, _ in pairs])
        p1 = np.array([capsules[i].b for i, _ in pairs])
        q0 = np.array([capsules[j].a for _, j in pairs])
        q1 = np.array([capsules[j].b for _, j in pairs])
    radii = np.array([capsules[i].radius + capsules[j].radius for i, j in pairs])
    return segment_distance(p0, p1, q0, q1) - radii


def min_clamping_distance(capsules: list[Capsule],
                          interaction: Cuboid | None = None) -> float:
    """Smallest surface distance over non-adjacent clamp-candidate pairs.

    With an interaction cuboid given, pairs whose capsules both lie fully
    outside it are ignored.  Negative values flag interpenetration."""
    pairs = collision_pairs(capsules, clamp_only=True)
    if interaction is not None:
        keep = []
        inside = [_capsule_touches(c, interaction) for c in capsules]
        for i, j in pairs:
            if inside[i] or inside[j]:
                keep.append((i, j))
        pairs = keep
    d = _pair_distances(capsules, pairs, clamp_extent=True)
    return float(d.min()) if d.size else float("inf")


def self_collision_distance(capsules: list[Capsule]) -> float:
    """Smallest surface distance over all non-adjacent pairs (full extents,
    platform body included)."""
    pairs = collision_pairs(capsules, clamp_only=False)
    d = _pair_distances(capsules, pairs, clamp_extent=False)
    return float(d.min()) if d.size else float("inf")


def _capsule_touches(c: Capsule, box: Cuboid) -> bool:
    ts = np.linspace(0.0, 1.0, 9)[:, None]
    pts = c.clamp_a + ts * (c.clamp_b - c.clamp_a)
    return bool((box.outside_distance(pts) <= c.radius).any())


# ---------------------------------------------------------------------------
# containment


@dataclass
class ContainmentReport:
    contained: list[bool]
    protrusions: np.ndarray
    max_protrusion: float = field(init=False)

    def __post_init__(self):
        self.max_protrusion = float(self.protrusions.max()) if self.protrusions.size else 0.0

    @property
    def all_contained(self) -> bool:
        return all(self.contained)


def containment_check(capsules: list[Capsule], spaces: list[Cuboid],
                      samples: int = 17) -> ContainmentReport:
    """Per-capsule containment of the segment axis within the union of the
    given cuboids.  The violation magnitude is the largest distance of a
    sampled axis point outside every cuboid."""
    boxes = [s for s in spaces if s.role != "forbidden"]
    ts = np.linspace(0.0, 1.0, samples)[:, None]
    contained = []
    prot = np.zeros(len(capsules))
    for k, c in enumerate(capsules):
        pts = c.a + ts * (c.b - c.a)
        best = np.full(len(ts), np.inf)
        for box in boxes:
            best = np.minimum(best, box.outside_distance(pts))
        prot[k] = float(best.max()) if boxes else np.inf
        contained.append(prot[k] <= 0.0)
    return ContainmentReport(contained, prot)
