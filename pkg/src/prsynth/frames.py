"""Rotation and pose helpers shared by the kinematics and dynamics code.

All rotations are 3x3 matrices acting on column vectors; poses combine a
world position with an intrinsic x-y-z Euler orientation.  Functions accept
batched inputs (leading axes) wherever the shape comments say so.
"""

from __future__ import annotations

import numpy as np

X, Y, Z = 0, 1, 2

_AXIS_VECS = np.eye(3)


def unit(axis: int) -> np.ndarray:
    return _AXIS_VECS[axis]


def rot_axis(axis: int, theta) -> np.ndarray:
    """Rotation matrix about a coordinate axis; ``theta`` may be batched."""
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    o, z = np.ones_like(c), np.zeros_like(c)
    if axis == X:
        rows = [o, z, z, z, c, -s, z, s, c]
    elif axis == Y:
        rows = [c, z, s, z, o, z, -s, z, c]
    elif axis == Z:
        rows = [c, -s, z, s, c, z, z, z, o]
    else:
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    return np.stack(rows, axis=-1).reshape(theta.shape + (3, 3))


def rot_x(a) -> np.ndarray:
    return rot_axis(X, a)


def rot_y(a) -> np.ndarray:
    return rot_axis(Y, a)


def rot_z(a) -> np.ndarray:
    return rot_axis(Z, a)


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix; batched over leading axes of ``v``."""
    v = np.asarray(v, dtype=float)
    m = np.zeros(v.shape[:-1] + (3, 3))
    m[..., 0, 1] = -v[..., 2]
    m[..., 0, 2] = v[..., 1]
    m[..., 1, 0] = v[..., 2]
    m[..., 1, 2] = -v[..., 0]
    m[..., 2, 0] = -v[..., 1]
    m[..., 2, 1] = v[..., 0]
    return m


def skew_vee(m: np.ndarray) -> np.ndarray:
    """Vector of the skew part of ``m``: vee(0.5 (m - m^T)); batched."""
    return 0.5 * np.stack(
        [
            m[..., 2, 1] - m[..., 1, 2],
            m[..., 0, 2] - m[..., 2, 0],
            m[..., 1, 0] - m[..., 0, 1],
        ],
        axis=-1,
    )


def euler_xyz_matrix(e: np.ndarray) -> np.ndarray:
    """R = Rx(e0) @ Ry(e1) @ Rz(e2) (intrinsic x-y-z convention)."""
    e = np.asarray(e, dtype=float)
    return rot_x(e[..., 0]) @ rot_y(e[..., 1]) @ rot_z(e[..., 2])


def euler_xyz_rates_map(e: np.ndarray) -> np.ndarray:
    """Matrix E with world angular velocity = E @ de/dt for x-y-z Euler angles.

    Columns are the instantaneous world-frame rotation axes of the three
    angles.  Singular at e1 = +-pi/2 (documented gimbal limit; scenarios
    restrict tilt well below that).
    """
    e = np.asarray(e, dtype=float)
    rx = rot_x(e[..., 0])
    rxry = rx @ rot_y(e[..., 1])
    col0 = np.broadcast_to(_AXIS_VECS[0], e[..., 0].shape + (3,))
    return np.stack([col0, rx[..., :, 1], rxry[..., :, 2]], axis=-1)


def euler_zyx_from_matrix(m: np.ndarray) -> tuple[float, float, float]:
    """Angles (a, b, c) with m = Rz(a) @ Ry(b) @ Rx(c), cos(b) >= 0 branch."""
    b = float(np.arcsin(np.clip(-m[2, 0], -1.0, 1.0)))
    a = float(np.arctan2(m[1, 0], m[0, 0]))
    c = float(np.arctan2(m[2, 1], m[2, 2]))
    return a, b, c


def wrap_angle(theta):
    """Wrap to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(theta, dtype=float), 2.0 * np.pi)
