"""Time-sampled reference trajectories.

A trajectory stores pose, velocity and acceleration samples on a uniform
time grid.  Point-to-point pieces use trapezoidal speed profiles whose
phase durations are quantized to the grid, which makes the stored samples
exactly consistent under the discrete forward-Taylor rule

    x[k+1] = x[k] + v[k] dt + 0.5 a[k] dt^2
    v[k+1] = v[k] + a[k] dt

(acceleration values are right-hand limits at phase boundaries).  The
consistency check below verifies that rule and is what scenario loading
enforces on hand-edited files.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_DT = 0.01          # s
DEFAULT_MAX_SPEED = 1.0    # m/s along the dominant coordinate path
DEFAULT_MAX_ACCEL = 5.0    # m/s^2
ANGLE_LENGTH_SCALE = 0.5   # m per rad when orientation dominates a segment

CONSISTENCY_TOL = 1e-6


@dataclass
class Trajectory:
    t: np.ndarray     # (N,)
    x: np.ndarray     # (N, n)
    xd: np.ndarray    # (N, n)
    xdd: np.ndarray   # (N, n)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.x = np.asarray(self.x, dtype=float)
        self.xd = np.asarray(self.xd, dtype=float)
        self.xdd = np.asarray(self.xdd, dtype=float)
        n = self.t.shape[0]
        if not (self.x.shape[0] == self.xd.shape[0] == self.xdd.shape[0] == n):
            raise ValueError("trajectory arrays must share the sample count")
        if n >= 2 and not np.all(np.diff(self.t) > 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self) >= 2 else 0.0

    def consistency_errors(self) -> np.ndarray:
        """(N-1, 2) forward-Taylor defects of (position, velocity)."""
        dt = np.diff(self.t)[:, None]
        ex = self.x[1:] - self.x[:-1] - self.xd[:-1] * dt - 0.5 * self.xdd[:-1] * dt**2
        ev = self.xd[1:] - self.xd[:-1] - self.xdd[:-1] * dt
        return np.stack([np.abs(ex).max(axis=1), np.abs(ev).max(axis=1)], axis=1)

    def first_inconsistent_sample(self, tol: float = CONSISTENCY_TOL) -> int | None:
        if len(self) < 2:
            return None
        err = self.consistency_errors()
        bad = np.nonzero(err.max(axis=1) > tol)[0]
        return int(bad[0]) if bad.size else None


def _quantize_up(duration: float, dt: float) -> float:
    k = max(1, int(np.ceil(duration / dt - 1e-12)))
    return k * dt


def _trapezoid_phase_times(length: float, vmax: float, amax: float,
                           dt: float) -> tuple[float, float, float, float]:
    """Grid-aligned (t_acc, t_flat, peak_velocity, peak_acceleration)."""
    t_acc = vmax / amax
    if length <= vmax * t_acc:           # triangular profile
        t_acc = float(np.sqrt(length / amax))
        t_flat = 0.0
    else:
        t_flat = length / vmax - t_acc
    t_acc = _quantize_up(t_acc, dt)
    t_flat = _quantize_up(t_flat, dt) if t_flat > 1e-12 else 0.0
    v = length / (t_acc + t_flat)
    return t_acc, t_flat, v, v / t_acc


def _profile_samples(length: float, vmax: float, amax: float, dt: float):
    """Path-parameter samples (s, sd, sdd) with s in [0, length]."""
    if length <= 1e-12:
        return (np.array([0.0]), np.array([0.0]), np.array([0.0]))
    t_acc, t_flat, v, a = _trapezoid_phase_times(length, vmax, amax, dt)
    n_acc = int(round(t_acc / dt))
    n_flat = int(round(t_flat / dt))
    n_total = 2 * n_acc + n_flat
    k = np.arange(n_total + 1)
    t = k * dt
    s = np.empty(n_total + 1)
    sd = np.empty(n_total + 1)
    sdd = np.empty(n_total + 1)
    acc = k < n_acc
    flat = (k >= n_acc) & (k < n_acc + n_flat)
    dec = k >= n_acc + n_flat
    s[acc] = 0.5 * a * t[acc] ** 2
    sd[acc] = a * t[acc]
    sdd[acc] = a
    s_acc = 0.5 * a * t_acc**2
    s[flat] = s_acc + v * (t[flat] - t_acc)
    sd[flat] = v
    sdd[flat] = 0.0
    td = t[dec] - t_acc - t_flat
    s[dec] = s_acc + v * t_flat + v * td - 0.5 * a * td**2
    sd[dec] = v - a * td
    sdd[dec] = -a
    # final sample comes to rest exactly
    s[-1] = length
    sd[-1] = 0.0
    sdd[-1] = 0.0
    return s, sd, sdd


def point_to_point(waypoints: np.ndarray, dt: float = DEFAULT_DT,
                   max_speed: float = DEFAULT_MAX_SPEED,
                   max_accel: float = DEFAULT_MAX_ACCEL) -> Trajectory:
    """Rest-to-rest trapezoidal motion through the given pose waypoints.

    Position and orientation coordinates share one path parameter per
    segment; the speed limit applies to the dominant coordinate distance
    (orientation weighted by ``ANGLE_LENGTH_SCALE``)."""
    waypoints = np.asarray(waypoints, dtype=float)
    if waypoints.ndim != 2 or waypoints.shape[0] < 2:
        raise ValueError("need at least two waypoints")
    n = waypoints.shape[1]
    pos_dims = 3 if n == 6 else 2
    xs = [waypoints[0][None, :]]
    xds = [np.zeros((1, n))]
    xdds = [np.zeros((1, n))]
    for w0, w1 in zip(waypoints[:-1], waypoints[1:]):
        delta = w1 - w0
        lin = float(np.linalg.norm(delta[:pos_dims]))
        ang = float(np.linalg.norm(delta[pos_dims:])) * ANGLE_LENGTH_SCALE
        length = max(lin, ang)
        if length <= 1e-12:
            continue
        s, sd, sdd = _profile_samples(length, max_speed, max_accel, dt)
        u = delta / length
        xs.append(w0 + s[1:, None] * u)
        xds.append(sd[1:, None] * u)
        xdds.append(sdd[1:, None] * u)
        # re-anchor the acceleration sample entering this segment: the
        # previous rest sample carries this segment's initial acceleration
        xdds[-2][-1] = sdd[0] * u
    x = np.concatenate(xs, axis=0)
    xd = np.concatenate(xds, axis=0)
    xdd = np.concatenate(xdds, axis=0)
    t = np.arange(x.shape[0]) * dt
    return Trajectory(t, x, xd, xdd)


def static_pose(x: np.ndarray, n_samples: int = 3, dt: float = DEFAULT_DT) -> Trajectory:
    """A dwell at a single pose (useful for statics checks)."""
    x = np.asarray(x, dtype=float)
    t = np.arange(n_samples) * dt
    zeros = np.zeros((n_samples, x.shape[0]))
    return Trajectory(t, np.tile(x, (n_samples, 1)), zeros, zeros)
