"""Catalog of fully parallel leg-chain families.

Each family describes one robot class: how many legs, which joint sequence a
leg carries, how the geometry parameter vector maps onto anchor frames, link
lengths and joint-axis alignments, plus parameter bounds for synthesis.

Universal joints are modeled as two stacked revolute coordinates and
spherical joints as three, so every leg is internally a serial revolute
chain.  The actuated joint is always the base-proximal revolute (index 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .frames import X, Y, Z, rot_x, rot_y, rot_z

REVOLUTE = "revolute"
UNIVERSAL = "universal"
SPHERICAL = "spherical"

# Default joint coordinate ranges [rad] by joint class.  The first
# coordinate of a universal joint acts as the elbow hinge and gets a
# revolute-like range; the second coordinate (and the spherical
# mid-coordinate) stays clear of its 90-deg representation singularity.
_DEFAULT_LIMITS = {
    "actuated": 2.97,
    REVOLUTE: 2.62,
    UNIVERSAL: 2.62,
    "universal_mid": 1.48,
    "spherical_mid": 1.31,
    SPHERICAL: 2.97,
}


@dataclass(eq=False)
class JointSpec:
    """One revolute coordinate of a leg chain.

    ``align`` is a fixed rotation applied before the joint rotation about
    the local coordinate axis ``axis``; ``link`` is the link vector that
    follows the joint, expressed in the rotated frame.
    """

    axis: int
    link: np.ndarray
    kind: str
    actuated: bool = False
    align: np.ndarray | None = None
    limit: float = 0.0

    def __post_init__(self):
        self.link = np.asarray(self.link, dtype=float)
        if self.align is not None:
            self.align = np.asarray(self.align, dtype=float)
        if self.limit == 0.0:
            if self.actuated:
                self.limit = _DEFAULT_LIMITS["actuated"]
            elif self.kind == UNIVERSAL and self.axis == Y:
                self.limit = _DEFAULT_LIMITS["universal_mid"]
            else:
                self.limit = _DEFAULT_LIMITS[self.kind]


@dataclass
class ParamSpec:
    name: str
    lower: float
    upper: float
    is_length: bool


@dataclass
class Anchors:
    """World base-joint frames and platform-local coupling frames."""

    base_pos: np.ndarray  # (L, 3)
    base_rot: np.ndarray  # (L, 3, 3)
    plat_pos: np.ndarray  # (L, 3) platform-frame anchor positions
    plat_rot: np.ndarray  # (L, 3, 3) platform-frame anchor orientations


class Family:
    """A leg-chain family: joint layout, parameter schema and bounds."""

    def __init__(self, name: str, dof: int, legs: int, params: list[ParamSpec],
                 chain_builder, anchor_builder, planar: bool = False):
        self.name = name
        self.dof = dof
        self.legs = legs
        self.params = params
        self.planar = planar
        self._chain_builder = chain_builder
        self._anchor_builder = anchor_builder
        self.actuated_index = 0

    # -- parameter handling ------------------------------------------------
    @property
    def param_names(self) -> list[str]:
        return [p.name for p in self.params]

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([p.lower for p in self.params])
        hi = np.array([p.upper for p in self.params])
        return lo, hi

    def resolve(self, p: np.ndarray) -> dict[str, float]:
        """Parameter vector -> named values with the overall scale applied
        to all length-type entries (the scale entry itself is a pure
        multiplier)."""
        p = np.asarray(p, dtype=float)
        if p.shape != (len(self.params),):
            raise ValueError(
                f"family {self.name} expects {len(self.params)} parameters, got {p.shape}")
        vals = {}
        scale = 1.0
        for spec, v in zip(self.params, p):
            if spec.name == "scale":
                scale = float(v)
        for spec, v in zip(self.params, p):
            vals[spec.name] = float(v) * (scale if spec.is_length else 1.0)
        return vals

    def validate(self, p: np.ndarray) -> None:
        vals = self.resolve(p)
        for spec in self.params:
            if spec.is_length and vals[spec.name] <= 0:
                raise ValueError(f"{self.name}: parameter {spec.name} must be positive")
        if vals.get("scale", 1.0) <= 0:
            raise ValueError(f"{self.name}: scale must be positive")

    # -- geometry ----------------------------------------------------------
    def chain(self, p: np.ndarray) -> list[JointSpec]:
        return self._chain_builder(self.resolve(p))

    def anchors(self, p: np.ndarray) -> Anchors:
        return self._anchor_builder(self.resolve(p), self.legs)

    def coords_per_leg(self, p: np.ndarray | None = None) -> int:
        return len(self.chain(p if p is not None else self.default_params()))

    def default_params(self) -> np.ndarray:
        lo, hi = self.bounds()
        return 0.5 * (lo + hi)

    def joint_kinds(self) -> list[str]:
        return [j.kind for j in self.chain(self.default_params())]

    def mobility_per_leg(self) -> int:
        return len(self.chain(self.default_params()))


# ---------------------------------------------------------------------------
# anchor layouts


def _pair_layout(radius: float, pair_dist: float, start: float, z: float,
                 down: float, tilt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Anchor positions and frames for three joint pairs on a circle.

    Pair members sit at +- half the pair distance along the pair-center
    tangent; both share the pair-center frame, so the two joint axes of a
    pair are parallel (z along the tangent, x pointing toward the
    workspace)."""
    centers = start + np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
    pos = np.empty((6, 3))
    rot = np.empty((6, 3, 3))
    for k, c in enumerate(centers):
        radial = np.array([np.cos(c), np.sin(c), 0.0])
        tangent = np.array([-np.sin(c), np.cos(c), 0.0])
        xa = np.array([0.0, 0.0, down])
        frame = np.column_stack([xa, np.cross(tangent, xa), tangent]) @ tilt
        for s, sign in enumerate((-1.0, 1.0)):
            i = 2 * k + s
            pos[i] = radius * radial + sign * 0.5 * pair_dist * tangent
            pos[i, 2] = z
            rot[i] = frame
    return pos, rot


def _spatial_anchors(v: dict[str, float], legs: int) -> Anchors:
    tilt_b = rot_x(v["base_tilt1"]) @ rot_y(v["base_tilt2"])
    tilt_p = rot_x(v["plat_tilt1"]) @ rot_y(v["plat_tilt2"])
    base_pos, base_rot = _pair_layout(v["base_radius"], v["base_pair_dist"],
                                      0.0, v["base_z"], -1.0, tilt_b)
    plat_pos, plat_rot = _pair_layout(v["platform_radius"], v["plat_pair_dist"],
                                      np.pi / 3, 0.0, -1.0, tilt_p)
    # zig-zag wiring: leg i couples to platform anchor (i - 1) mod 6
    order = (np.arange(6) - 1) % 6
    return Anchors(base_pos, base_rot, plat_pos[order], plat_rot[order])


def _planar_anchors(v: dict[str, float], legs: int) -> Anchors:
    ang = np.deg2rad(np.array([90.0, 210.0, 330.0]))
    base_pos = np.stack([v["base_radius"] * np.cos(ang),
                         v["base_radius"] * np.sin(ang), np.zeros(3)], axis=-1)
    plat_pos = np.stack([v["platform_radius"] * np.cos(ang),
                         v["platform_radius"] * np.sin(ang), np.zeros(3)], axis=-1)
    eye = np.broadcast_to(np.eye(3), (3, 3, 3)).copy()
    return Anchors(base_pos, eye.copy(), plat_pos, eye)


# ---------------------------------------------------------------------------
# chain layouts

_Z3 = (0.0, 0.0, 0.0)


def _chain_rus(v):
    return [
        JointSpec(Z, (v["l1"], 0, 0), REVOLUTE, actuated=True),
        JointSpec(Z, _Z3, UNIVERSAL),
        JointSpec(Y, (v["l2"], 0, 0), UNIVERSAL),
        JointSpec(Z, _Z3, SPHERICAL),
        JointSpec(Y, _Z3, SPHERICAL, limit=_DEFAULT_LIMITS["spherical_mid"]),
        JointSpec(X, _Z3, SPHERICAL),
    ]


def _chain_rrrs(v):
    return [
        JointSpec(Z, (v["l1"], 0, 0), REVOLUTE, actuated=True),
        JointSpec(Z, (v["l2"], 0, 0), REVOLUTE, align=rot_x(v["alpha12"])),
        JointSpec(Z, (v["l3"], 0, 0), REVOLUTE, align=rot_x(v["alpha23"])),
        JointSpec(Z, _Z3, SPHERICAL),
        JointSpec(Y, _Z3, SPHERICAL, limit=_DEFAULT_LIMITS["spherical_mid"]),
        JointSpec(X, _Z3, SPHERICAL),
    ]


def _chain_rruu(v):
    return [
        JointSpec(Z, (v["l1"], 0, 0), REVOLUTE, actuated=True),
        JointSpec(Z, (v["l2"], 0, 0), REVOLUTE, align=rot_x(v["alpha12"])),
        JointSpec(Z, _Z3, UNIVERSAL),
        JointSpec(Y, (v["l3"], 0, 0), UNIVERSAL),
        JointSpec(Z, _Z3, UNIVERSAL),
        JointSpec(Y, _Z3, UNIVERSAL),
    ]


def _chain_ruru(v):
    return [
        JointSpec(Z, (v["l1"], 0, 0), REVOLUTE, actuated=True),
        JointSpec(Z, _Z3, UNIVERSAL),
        JointSpec(Y, (v["l2"], 0, 0), UNIVERSAL),
        JointSpec(Z, (v["l3"], 0, 0), REVOLUTE, align=rot_x(v["alpha2"])),
        JointSpec(Z, _Z3, UNIVERSAL),
        JointSpec(Y, _Z3, UNIVERSAL),
    ]


def _chain_ruur(v):
    return [
        JointSpec(Z, (v["l1"], 0, 0), REVOLUTE, actuated=True),
        JointSpec(Z, _Z3, UNIVERSAL),
        JointSpec(Y, (v["l2"], 0, 0), UNIVERSAL),
        JointSpec(Z, _Z3, UNIVERSAL),
        JointSpec(Y, (v["l3"], 0, 0), UNIVERSAL),
        JointSpec(Z, _Z3, REVOLUTE),
    ]


def _chain_planar_rrr(v):
    return [
        JointSpec(Z, (v["l1"], 0, 0), REVOLUTE, actuated=True),
        JointSpec(Z, (v["l2"], 0, 0), REVOLUTE),
        JointSpec(Z, _Z3, REVOLUTE),
    ]


# ---------------------------------------------------------------------------
# registry

def _spatial_common() -> list[ParamSpec]:
    return [
        ParamSpec("scale", 0.7, 1.3, False),
        ParamSpec("base_radius", 0.15, 0.55, True),
        ParamSpec("platform_radius", 0.06, 0.30, True),
        ParamSpec("base_pair_dist", 0.08, 0.30, True),
        ParamSpec("plat_pair_dist", 0.08, 0.25, True),
        ParamSpec("base_z", 2.30, 2.70, False),
    ]


def _tilts() -> list[ParamSpec]:
    return [
        ParamSpec("base_tilt1", -0.5, 0.5, False),
        ParamSpec("base_tilt2", -0.5, 0.5, False),
        ParamSpec("plat_tilt1", -0.5, 0.5, False),
        ParamSpec("plat_tilt2", -0.5, 0.5, False),
    ]


FAMILIES: dict[str, Family] = {}


def _register(fam: Family) -> Family:
    FAMILIES[fam.name] = fam
    return fam


RUS = _register(Family(
    "RUS", 6, 6,
    _spatial_common() + [
        ParamSpec("l1", 0.30, 0.70, True),
        ParamSpec("l2", 1.00, 1.70, True),
    ] + _tilts(),
    _chain_rus, _spatial_anchors))

RRRS = _register(Family(
    "RRRS", 6, 6,
    _spatial_common() + [
        ParamSpec("l1", 0.15, 0.60, True),
        ParamSpec("l2", 0.30, 1.00, True),
        ParamSpec("l3", 0.30, 1.20, True),
        ParamSpec("alpha12", np.pi / 2 - 0.5, np.pi / 2 + 0.5, False),
        ParamSpec("alpha23", -0.5, 0.5, False),
    ] + _tilts(),
    _chain_rrrs, _spatial_anchors))

RRUU = _register(Family(
    "RRUU", 6, 6,
    _spatial_common() + [
        ParamSpec("l1", 0.15, 0.60, True),
        ParamSpec("l2", 0.30, 1.00, True),
        ParamSpec("l3", 0.40, 1.40, True),
        ParamSpec("alpha12", np.pi / 2 - 0.5, np.pi / 2 + 0.5, False),
    ] + _tilts(),
    _chain_rruu, _spatial_anchors))

RURU = _register(Family(
    "RURU", 6, 6,
    _spatial_common() + [
        ParamSpec("l1", 0.15, 0.70, True),
        ParamSpec("l2", 0.30, 1.20, True),
        ParamSpec("l3", 0.30, 1.20, True),
        ParamSpec("alpha2", -0.5, 0.5, False),
    ] + _tilts(),
    _chain_ruru, _spatial_anchors))

RUUR = _register(Family(
    "RUUR", 6, 6,
    _spatial_common() + [
        ParamSpec("l1", 0.15, 0.70, True),
        ParamSpec("l2", 0.30, 1.20, True),
        ParamSpec("l3", 0.30, 1.20, True),
    ] + _tilts(),
    _chain_ruur, _spatial_anchors))

PLANAR_RRR = _register(Family(
    "planar-RRR", 3, 3,
    [
        ParamSpec("scale", 0.8, 1.2, False),
        ParamSpec("base_radius", 0.30, 0.80, True),
        ParamSpec("platform_radius", 0.05, 0.25, True),
        ParamSpec("l1", 0.20, 0.80, True),
        ParamSpec("l2", 0.20, 0.80, True),
    ],
    _chain_planar_rrr, _planar_anchors, planar=True))


def get_family(name: str) -> Family:
    try:
        return FAMILIES[name]
    except KeyError:
        raise KeyError(f"unknown leg-chain family {name!r}; "
                       f"available: {sorted(FAMILIES)}") from None
