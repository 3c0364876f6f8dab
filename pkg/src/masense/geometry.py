"""Angles, direction vectors, trajectories, and trajectory covariance.

Shared geometric primitives for movable-antenna direction sensing: the
physical elevation/azimuth angle pair, its unit direction vector on the
sphere, the tangent frame spanning the sphere's tangent plane at that
direction, rotations aligning the z-axis with a target direction,
sampled antenna trajectories, and the 3x3 position covariance matrix
that every estimation bound downstream consumes.

Conventions: elevation ``theta`` in [0, pi] measured from the +z axis,
azimuth ``phi`` in [0, 2*pi] measured from the +x axis.  Lengths are
meters, times are seconds.  Angles outside their domain are rejected,
never wrapped silently.

All types are immutable; every operation is a pure function of its
inputs, so values can be shared freely across threads.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AngleVector",
    "DirectionVector",
    "TangentFrame",
    "Trajectory",
    "CovarianceMatrix",
    "MovementRegion",
    "FeasibilityReport",
    "direction_from_angles",
    "angles_from_direction",
    "tangent_frame",
    "rotation_to_target",
    "trajectory_from_velocities",
    "apv_covariance",
    "position_covariance",
    "position_covariance_quadratic",
    "check_feasibility",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "FLOAT_FORMAT",
]

#: Decimal float format used in all CSV output (17 significant digits,
#: enough to round-trip IEEE doubles exactly).
FLOAT_FORMAT = ".17g"

_UNIT_TOL = 1e-12


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AngleVector:
    """Physical elevation/azimuth pair, in radians.

    ``theta`` must lie in [0, pi] and ``phi`` in [0, 2*pi]; out-of-range
    values raise ``ValueError`` rather than being wrapped, since silent
    wrapping would mask bookkeeping errors in callers.
    """

    theta: float
    phi: float

    def __post_init__(self):
        theta = float(self.theta)
        phi = float(self.phi)
        if not np.isfinite(theta) or not 0.0 <= theta <= np.pi:
            raise ValueError(f"theta must be in [0, pi], got {theta!r}")
        if not np.isfinite(phi) or not 0.0 <= phi <= 2.0 * np.pi:
            raise ValueError(f"phi must be in [0, 2*pi], got {phi!r}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_degrees(cls, theta_deg, phi_deg):
        return cls(np.deg2rad(theta_deg), np.deg2rad(phi_deg))


@dataclass(frozen=True, eq=False)
class DirectionVector:
    """Unit 3-vector on the sphere encoding a physical direction."""

    components: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.components, dtype=float).reshape(3).copy()
        norm = np.linalg.norm(c)
        if abs(norm - 1.0) > _UNIT_TOL:
            raise ValueError(f"direction vector must have unit norm, got {norm!r}")
        object.__setattr__(self, "components", _readonly(c))


@dataclass(frozen=True, eq=False)
class TangentFrame:
    """Orthonormal basis (f, g) of the sphere's tangent plane at a direction.

    ``f`` points along increasing elevation, ``g`` along increasing
    azimuth (scaled so that g*sin(theta) is the azimuth derivative).
    """

    f: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float).reshape(3).copy()
        g = np.asarray(self.g, dtype=float).reshape(3).copy()
        if abs(np.linalg.norm(f) - 1.0) > _UNIT_TOL:
            raise ValueError("f must be a unit vector")
        if abs(np.linalg.norm(g) - 1.0) > _UNIT_TOL:
            raise ValueError("g must be a unit vector")
        if abs(float(f @ g)) > _UNIT_TOL:
            raise ValueError("f and g must be orthogonal")
        object.__setattr__(self, "f", _readonly(f))
        object.__setattr__(self, "g", _readonly(g))

    @property
    def basis(self):
        """3x2 matrix [f, g]."""
        return np.column_stack([self.f, self.g])


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled antenna trajectory over N snapshots.

    Positions are always *derived* from the initial position and the
    velocity matrix through the cumulative-sum relation
    ``r_n = r_1 + Ts * sum_{m<n} v_m``; they are never independent
    state, so the relation holds exactly by construction.

    Parameters
    ----------
    r1 : (3,) array
        Initial position at the first snapshot, meters.
    velocities : (3, N-1) array
        Velocity between consecutive snapshots, m/s.
    sampling_period : float
        Snapshot spacing Ts, seconds.
    """

    r1: np.ndarray
    velocities: np.ndarray
    sampling_period: float
    positions: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        r1 = np.asarray(self.r1, dtype=float).reshape(3, 1)
        v = np.asarray(self.velocities, dtype=float)
        if v.ndim != 2 or v.shape[0] != 3 or v.shape[1] < 1:
            raise ValueError("velocities must be a 3 x (N-1) matrix with N >= 2")
        ts = float(self.sampling_period)
        if not ts > 0.0:
            raise ValueError(f"sampling_period must be positive, got {ts!r}")
        pos = np.empty((3, v.shape[1] + 1))
        pos[:, :1] = r1
        pos[:, 1:] = r1 + ts * np.cumsum(v, axis=1)
        object.__setattr__(self, "r1", _readonly(r1.reshape(3)))
        object.__setattr__(self, "velocities", _readonly(v))
        object.__setattr__(self, "sampling_period", ts)
        object.__setattr__(self, "positions", _readonly(pos))

    @property
    def n_snapshots(self):
        return self.positions.shape[1]

    @property
    def times(self):
        """Snapshot times t_n = (n-1)*Ts, seconds."""
        return np.arange(self.n_snapshots) * self.sampling_period

    @classmethod
    def from_positions(cls, positions, sampling_period):
        """Build a trajectory from a 3xN position matrix.

        Velocities are recovered as consecutive differences over the
        sampling period, so the stored positions satisfy the
        cumulative-sum relation exactly (up to float rounding of the
        round trip, well below 1e-12 of the coordinate scale).
        """
        pos = np.asarray(positions, dtype=float)
        if pos.ndim != 2 or pos.shape[0] != 3 or pos.shape[1] < 2:
            raise ValueError("positions must be a 3 x N matrix with N >= 2")
        ts = float(sampling_period)
        v = np.diff(pos, axis=1) / ts
        return cls(pos[:, 0], v, ts)

    def rotated(self, rotation):
        """Trajectory with positions mapped through a 3x3 rotation matrix."""
        q = np.asarray(rotation, dtype=float).reshape(3, 3)
        return Trajectory(q @ self.r1, q @ self.velocities, self.sampling_period)

    def translated(self, offset):
        off = np.asarray(offset, dtype=float).reshape(3)
        return Trajectory(self.r1 + off, self.velocities, self.sampling_period)

    def scaled(self, factor, center=None):
        """Scale positions about ``center`` (default: the origin)."""
        c = np.zeros(3) if center is None else np.asarray(center, dtype=float).reshape(3)
        r1 = c + float(factor) * (self.r1 - c)
        return Trajectory(r1, float(factor) * self.velocities, self.sampling_period)


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Symmetric PSD 3x3 covariance of the trajectory's position samples."""

    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float).reshape(3, 3).copy()
        scale = max(1.0, float(np.abs(u).max()))
        if np.abs(u - u.T).max() > 1e-12 * scale:
            raise ValueError("covariance matrix must be symmetric")
        u = 0.5 * (u + u.T)
        if np.linalg.eigvalsh(u).min() < -1e-12 * scale:
            raise ValueError("covariance matrix must be positive semi-definite")
        object.__setattr__(self, "u", _readonly(u))


@dataclass(frozen=True, eq=False)
class MovementRegion:
    """Axis-aligned box the antenna is allowed to move in."""

    center: np.ndarray
    half_extent: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(3).copy()
        h = np.asarray(self.half_extent, dtype=float).reshape(3).copy()
        if not np.all(h > 0.0):
            raise ValueError("half_extent must be positive on every axis")
        object.__setattr__(self, "center", _readonly(c))
        object.__setattr__(self, "half_extent", _readonly(h))

    @classmethod
    def cube(cls, size, center=(0.0, 0.0, 0.0)):
        """Cube of side ``size`` (so half-extent size/2 per axis)."""
        s = float(size)
        return cls(np.asarray(center, dtype=float), np.full(3, s / 2.0))

    def excess(self, positions):
        """Per-snapshot distance by which positions leave the box (0 inside)."""
        pos = np.asarray(positions, dtype=float)
        d = np.abs(pos - self.center[:, None]) - self.half_extent[:, None]
        return np.maximum(d, 0.0).max(axis=0)


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of checking a trajectory against speed and region limits.

    Violations are reported, not raised: index lists give the offending
    velocity/snapshot indices (0-based) with the excess magnitude in
    m/s and meters respectively.
    """

    feasible: bool
    speed_violations: tuple
    region_violations: tuple
    worst_speed_excess: float
    worst_region_excess: float


def direction_from_angles(chi: AngleVector) -> DirectionVector:
    """Unit direction vector [sin(t)cos(p), sin(t)sin(p), cos(t)]."""
    st, ct = np.sin(chi.theta), np.cos(chi.theta)
    sp, cp = np.sin(chi.phi), np.cos(chi.phi)
    return DirectionVector(np.array([st * cp, st * sp, ct]))


def angles_from_direction(eta) -> AngleVector:
    """Inverse of :func:`direction_from_angles`.

    At the poles the azimuth is undefined; 0 is returned there.
    """
    e = eta.components if isinstance(eta, DirectionVector) else np.asarray(eta, float).reshape(3)
    theta = float(np.arccos(np.clip(e[2], -1.0, 1.0)))
    phi = float(np.arctan2(e[1], e[0])) % (2.0 * np.pi)
    return AngleVector(theta, phi)


def tangent_frame(chi: AngleVector) -> TangentFrame:
    """Tangent-plane basis at chi: f along elevation, g along azimuth."""
    st, ct = np.sin(chi.theta), np.cos(chi.theta)
    sp, cp = np.sin(chi.phi), np.cos(chi.phi)
    f = np.array([ct * cp, ct * sp, -st])
    g = np.array([-sp, cp, 0.0])
    return TangentFrame(f, g)


def rotation_to_target(chi: AngleVector) -> np.ndarray:
    """Orthonormal rotation with rows [f; g; eta].

    Applying it to positions re-expresses them in a frame whose z-axis
    points along the direction encoded by ``chi``:
    ``Q @ eta == [0, 0, 1]``.
    """
    frame = tangent_frame(chi)
    eta = direction_from_angles(chi)
    return np.vstack([frame.f, frame.g, eta.components])


def trajectory_from_velocities(r1, velocities, sampling_period) -> Trajectory:
    """Trajectory whose positions follow the cumulative-sum relation exactly."""
    return Trajectory(r1, velocities, sampling_period)


def position_covariance(positions) -> np.ndarray:
    """3x3 covariance of position samples, from centered column sums.

    Runs in O(N) and never materializes an N x N weighting matrix, so
    it stays cheap for snapshot counts in the tens of thousands.
    """
    pos = np.asarray(positions, dtype=float)
    centered = pos - pos.mean(axis=1, keepdims=True)
    return (centered @ centered.T) / pos.shape[1]


def position_covariance_quadratic(positions) -> np.ndarray:
    """Same covariance through the quadratic (second-moment) identity.

    Computes U = R R^T / N - mu mu^T, an algebraically different route
    than :func:`position_covariance`; the two agree to float rounding
    and serve as mutual cross-checks.
    """
    pos = np.asarray(positions, dtype=float)
    n = pos.shape[1]
    mu = pos.mean(axis=1, keepdims=True)
    return (pos @ pos.T) / n - mu @ mu.T


def apv_covariance(traj: Trajectory) -> CovarianceMatrix:
    """Covariance matrix of the trajectory's position samples."""
    return CovarianceMatrix(position_covariance(traj.positions))


def check_feasibility(traj: Trajectory, region: MovementRegion, vmax) -> FeasibilityReport:
    """Report every speed and region violation of a trajectory.

    Constraints are non-strict (boundary inclusive); a relative slack
    of 1e-12 absorbs float rounding so that trajectories constructed
    exactly on the boundary are judged feasible.
    """
    vmax = float(vmax)
    speeds = np.linalg.norm(traj.velocities, axis=0)
    tol_v = 1e-12 * max(1.0, vmax)
    speed_idx = np.nonzero(speeds > vmax + tol_v)[0]
    speed_viol = tuple((int(i), float(speeds[i] - vmax)) for i in speed_idx)

    excess = region.excess(traj.positions)
    tol_r = 1e-12 * max(1.0, float(region.half_extent.max()))
    region_idx = np.nonzero(excess > tol_r)[0]
    region_viol = tuple((int(i), float(excess[i])) for i in region_idx)

    return FeasibilityReport(
        feasible=not speed_viol and not region_viol,
        speed_violations=speed_viol,
        region_violations=region_viol,
        worst_speed_excess=float(max((m for _, m in speed_viol), default=0.0)),
        worst_region_excess=float(max((m for _, m in region_viol), default=0.0)),
    )


def write_trajectory_csv(traj: Trajectory, path):
    """Write a trajectory as CSV with header n,t,x,y,z,vx,vy,vz.

    Velocities are blank on the last row (there are N-1 of them for N
    snapshots).  Floats carry 17 significant digits so the file
    round-trips bit-exactly.
    """
    fmt = lambda x: format(x, FLOAT_FORMAT)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "t", "x", "y", "z", "vx", "vy", "vz"])
        pos, vel, ts = traj.positions, traj.velocities, traj.sampling_period
        n = traj.n_snapshots
        for i in range(n):
            row = [str(i + 1), fmt(i * ts)] + [fmt(pos[k, i]) for k in range(3)]
            if i < n - 1:
                row += [fmt(vel[k, i]) for k in range(3)]
            else:
                row += ["", "", ""]
            writer.writerow(row)


def read_trajectory_csv(path) -> Trajectory:
    """Parse a trajectory CSV written by :func:`write_trajectory_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["n", "t", "x", "y", "z", "vx", "vy", "vz"]:
            raise ValueError(f"unexpected trajectory CSV header: {header!r}")
        rows = [row for row in reader if row]
    if len(rows) < 2:
        raise ValueError("trajectory CSV must contain at least 2 snapshots")
    times = np.array([float(r[1]) for r in rows])
    r1 = np.array([float(rows[0][k]) for k in (2, 3, 4)])
    vel = np.array([[float(r[k]) for r in rows[:-1]] for k in (5, 6, 7)])
    ts = float(times[1] - times[0])
    return Trajectory(r1, vel, ts)
