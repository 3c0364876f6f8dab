"""Reference trajectories and fixed-array layouts used as baselines.

Every generator returns an origin-centered :class:`Trajectory` whose
consecutive steps respect the speed budget implied by its step length,
so the outputs drop directly into feasibility checks and bound
evaluations alongside optimized trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Trajectory

__all__ = [
    "BenchmarkSpec",
    "generate",
    "gen_upg",
    "gen_circle",
    "gen_circle3",
    "gen_fpa",
    "circle_radius",
    "circle3_radius",
]

FPA_ANTENNAS = 16


def circle_radius(n, delta):
    """Radius delta / (2 sin(pi/n)) making all n chords exactly delta."""
    return float(delta) / (2.0 * np.sin(np.pi / n))


def circle3_radius(n, delta):
    """Shared radius delta / (2 sin(3 pi/n)) of the three-circle path."""
    return float(delta) / (2.0 * np.sin(3.0 * np.pi / n))


@dataclass(frozen=True)
class BenchmarkSpec:
    """Declarative description of one benchmark layout.

    kind is one of UPG | Circle | Circle3 | FpaUpa | FpaCpa; ``delta``
    is the per-step travel distance (max speed times the sampling
    period) for moving-antenna kinds, ``wavelength`` sizes the fixed
    arrays, and ``antennas`` applies to FPA kinds only.
    """

    kind: str
    n: int
    delta: float = 0.0
    wavelength: float = 0.0
    antennas: int = FPA_ANTENNAS

    def __post_init__(self):
        kinds = ("UPG", "Circle", "Circle3", "FpaUpa", "FpaCpa")
        if self.kind not in kinds:
            raise ValueError(f"kind must be one of {kinds}, got {self.kind!r}")
        if self.kind == "UPG":
            root = int(round(np.sqrt(self.n)))
            if root * root != self.n:
                raise ValueError("UPG requires a perfect-square snapshot count")
        if self.kind == "Circle" and self.n < 3:
            raise ValueError("Circle requires at least 3 snapshots")
        if self.kind == "Circle3" and self.n % 12 != 0:
            raise ValueError("Circle3 requires a snapshot count divisible by 12")
        if self.kind in ("FpaUpa", "FpaCpa"):
            if self.antennas != FPA_ANTENNAS:
                raise ValueError(f"FPA layouts are defined for {FPA_ANTENNAS} antennas")
            if self.n < 1:
                raise ValueError("FPA kinds require at least one snapshot")
            if not self.wavelength > 0:
                raise ValueError("FPA kinds require a positive wavelength")
        elif not self.delta > 0:
            raise ValueError("moving-antenna kinds require a positive step length")


def generate(spec: BenchmarkSpec, sampling_period=1.0) -> Trajectory:
    """Materialize a benchmark spec as a trajectory."""
    if spec.kind == "UPG":
        return gen_upg(spec.n, spec.delta, sampling_period)
    if spec.kind == "Circle":
        return gen_circle(spec.n, spec.delta, sampling_period)
    if spec.kind == "Circle3":
        return gen_circle3(spec.n, spec.delta, sampling_period)
    return gen_fpa(spec.kind, spec.n, spec.wavelength, sampling_period)


def gen_upg(n, delta, sampling_period=1.0) -> Trajectory:
    """Serpentine sweep of a sqrt(n) x sqrt(n) grid in the x-y plane.

    Rows are traversed boustrophedon (alternating direction) so every
    consecutive pair of snapshots is exactly ``delta`` apart and the
    grid is covered at constant speed.  The grid is centered at the
    origin with z = 0 everywhere.
    """
    root = int(round(np.sqrt(n)))
    if root * root != n:
        raise ValueError(f"snapshot count {n} is not a perfect square")
    delta = float(delta)
    offset = (root - 1) / 2.0
    pts = np.zeros((3, n))
    idx = 0
    for row in range(root):
        cols = range(root) if row % 2 == 0 else range(root - 1, -1, -1)
        for col in cols:
            pts[0, idx] = (col - offset) * delta
            pts[1, idx] = (row - offset) * delta
            idx += 1
    return Trajectory.from_positions(pts, sampling_period)


def gen_circle(n, delta, sampling_period=1.0) -> Trajectory:
    """n uniformly spaced points on an origin-centered x-y circle.

    The radius delta / (2 sin(pi/n)) makes every consecutive chord
    exactly ``delta`` long.
    """
    if n < 3:
        raise ValueError("a circle needs at least 3 snapshots")
    r = circle_radius(n, delta)
    ang = 2.0 * np.pi * np.arange(n) / n
    pts = np.vstack([r * np.cos(ang), r * np.sin(ang), np.zeros(n)])
    return Trajectory.from_positions(pts, sampling_period)


def gen_circle3(n, delta, sampling_period=1.0) -> Trajectory:
    """Closed tour of three mutually orthogonal circles of equal radius.

    Starting on the +x axis the path runs one full loop in the x-z
    plane, three quarters of a loop in the x-y plane to reach the +y
    axis, one full loop in the y-z plane, and a final quarter loop in
    the x-y plane whose last chord closes the tour back at the start.
    Each circle ends up sampled at exactly n/3 uniform angles, which
    makes the position covariance a scaled identity to machine
    precision; all n - 1 traversed chords have length ``delta``.

    The two axis crossing points are shared vertices between segments,
    so the final snapshot sits one chord short of the starting point
    (the closing step would be the n-th chord of an n-snapshot tour).
    """
    if n % 12 != 0:
        raise ValueError(f"snapshot count {n} must be divisible by 12")
    m = n // 3
    r = circle3_radius(n, delta)
    step = 2.0 * np.pi / m
    pts = np.empty((3, n))
    idx = 0
    # full loop in x-z, starting at (r, 0, 0)
    ang = step * np.arange(m)
    pts[:, idx : idx + m] = np.vstack([r * np.cos(ang), np.zeros(m), r * np.sin(ang)])
    idx += m
    # 3/4 loop in x-y, clockwise from (r, 0, 0) down to just past the +y axis
    ang = -step * np.arange(3 * m // 4)
    pts[:, idx : idx + 3 * m // 4] = np.vstack(
        [r * np.cos(ang), r * np.sin(ang), np.zeros(3 * m // 4)]
    )
    idx += 3 * m // 4
    # full loop in y-z, starting at (0, r, 0)
    ang = step * np.arange(m)
    pts[:, idx : idx + m] = np.vstack([np.zeros(m), r * np.cos(ang), r * np.sin(ang)])
    idx += m
    # 1/4 loop in x-y from (0, r, 0) back toward the start
    ang = np.pi / 2.0 - step * np.arange(m // 4)
    pts[:, idx : idx + m // 4] = np.vstack(
        [r * np.cos(ang), r * np.sin(ang), np.zeros(m // 4)]
    )
    return Trajectory.from_positions(pts, sampling_period)


def _upa_positions(wavelength):
    coords = (np.arange(4) - 1.5) * (wavelength / 2.0)
    xx, yy = np.meshgrid(coords, coords, indexing="ij")
    return np.vstack([xx.ravel(), yy.ravel(), np.zeros(16)])


def _cpa_positions(wavelength):
    # coprime coordinate set (lambda/2) * {0, 2, 3, 4} on both axes; the
    # spanned aperture is 2 lambda per side even though the set is often
    # quoted larger
    coords = np.array([0.0, 2.0, 3.0, 4.0]) * (wavelength / 2.0)
    coords -= coords.mean()
    xx, yy = np.meshgrid(coords, coords, indexing="ij")
    return np.vstack([xx.ravel(), yy.ravel(), np.zeros(16)])


def gen_fpa(kind, n, wavelength, sampling_period=1.0) -> Trajectory:
    """Static 16-antenna array replicated over n snapshots.

    Returns the antenna positions tiled into a 3 x (16 n) sample set:
    each snapshot contributes one independent observation per antenna,
    so bound evaluations should use 16 n as the effective sample count.
    The covariance is unchanged by the replication.
    """
    if kind == "FpaUpa":
        base = _upa_positions(wavelength)
    elif kind == "FpaCpa":
        base = _cpa_positions(wavelength)
    else:
        raise ValueError(f"unknown FPA kind {kind!r}")
    if n < 1:
        raise ValueError("at least one snapshot is required")
    pts = np.tile(base, (1, n))
    return Trajectory.from_positions(pts, sampling_period)
