"""Robot model: a leg-chain family plus one geometry parameter vector."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .families import Anchors, Family, JointSpec, get_family

ALUMINUM_DENSITY = 2700.0  # kg/m^3
ALUMINUM_YIELD = 240e6     # Pa
ALUMINUM_E = 70e9          # Pa


def tube_linear_density(diameter: float, wall: float) -> float:
    """Mass per length of an aluminum tube [kg/m]."""
    wall = min(wall, diameter / 2)
    area = np.pi * (diameter * wall - wall * wall)
    return ALUMINUM_DENSITY * area


def tube_section_modulus(diameter: float, wall: float) -> float:
    """Bending section modulus of a tube [m^3]."""
    d_in = max(diameter - 2 * wall, 0.0)
    inertia = np.pi * (diameter**4 - d_in**4) / 64.0
    return inertia / (diameter / 2)


def tube_area(diameter: float, wall: float) -> float:
    wall = min(wall, diameter / 2)
    return np.pi * (diameter * wall - wall * wall)


@dataclass
class RobotModel:
    """Parameterized geometric and inertial description of one robot.

    ``p`` follows the family's parameter schema (see ``family.param_names``);
    the structural cross-section is carried separately so the inner design
    optimization can adjust it without touching the kinematic geometry.
    """

    family: Family
    p: np.ndarray
    tube_diameter: float = 0.025
    tube_wall: float = 0.002
    platform_extra_mass: float = 0.0

    def __post_init__(self):
        if isinstance(self.family, str):
            self.family = get_family(self.family)
        self.p = np.asarray(self.p, dtype=float)
        self.family.validate(self.p)
        if self.tube_diameter <= 0 or self.tube_wall <= 0:
            raise ValueError("tube section must be positive")
        self._chain: list[JointSpec] | None = None
        self._anchors: Anchors | None = None

    # -- derived geometry (cached; the model is treated as immutable) -------
    @property
    def n(self) -> int:
        return self.family.dof

    @property
    def legs(self) -> int:
        return self.family.legs

    @property
    def chain(self) -> list[JointSpec]:
        if self._chain is None:
            self._chain = self.family.chain(self.p)
        return self._chain

    @property
    def anchors(self) -> Anchors:
        if self._anchors is None:
            self._anchors = self.family.anchors(self.p)
        return self._anchors

    @property
    def coords_per_leg(self) -> int:
        return len(self.chain)

    @property
    def n_q(self) -> int:
        return self.legs * self.coords_per_leg

    @property
    def planar(self) -> bool:
        return self.family.planar

    @property
    def params(self) -> dict[str, float]:
        return self.family.resolve(self.p)

    @property
    def platform_radius(self) -> float:
        return self.params["platform_radius"]

    @property
    def link_density(self) -> float:
        return tube_linear_density(self.tube_diameter, self.tube_wall)

    def segment_joints(self) -> list[int]:
        """Joint indices whose trailing link has nonzero length (one per
        physical leg segment, base to platform order)."""
        return [j for j, spec in enumerate(self.chain)
                if float(np.linalg.norm(spec.link)) > 0.0]

    def segment_lengths(self) -> np.ndarray:
        return np.array([float(np.linalg.norm(self.chain[j].link))
                         for j in self.segment_joints()])

    def joint_limits(self) -> np.ndarray:
        """(coords_per_leg, 2) coordinate ranges."""
        return np.array([[-spec.limit, spec.limit] for spec in self.chain])

    def with_section(self, diameter: float, wall: float) -> "RobotModel":
        return RobotModel(self.family, self.p.copy(), diameter, wall,
                          self.platform_extra_mass)
