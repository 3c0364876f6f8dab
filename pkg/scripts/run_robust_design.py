#!/usr/bin/env python3
"""Robust trajectory design over an angular cone, with baseline comparison.

Runs the min-max optimizer on the desk-scale configuration, then
evaluates the worst-case bound of the optimized trajectory against the
isotropic three-circle tour with the same kinematics and region.

Usage: python scripts/run_robust_design.py [outdir]
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from masense.benchmarks import circle3_radius, gen_circle3
from masense.cli import main as cli_main
from masense.geometry import position_covariance, read_trajectory_csv
from masense.metrics import geometry_factor
from masense.optimizer import AngularRegion, discretize_region

ROOT = pathlib.Path(__file__).resolve().parents[1]


def worst_factor(traj, grid):
    u = position_covariance(traj.positions)
    return max(geometry_factor(u, chi) for chi in grid)


def run(outdir="out/robust_design"):
    out = pathlib.Path(outdir)
    cfg = ROOT / "configs" / "optimize_desk.cfg"
    rc = cli_main(["optimize", str(cfg), "--out", str(out), "--plot"])
    if rc != 0:
        return rc

    optimized = read_trajectory_csv(out / "trajectory.csv")
    n, ts = optimized.n_snapshots, optimized.sampling_period
    delta = 10.0 * ts
    half = 0.125

    n_tour = (n // 12) * 12
    tour = gen_circle3(n_tour, delta, ts)
    r_tour = circle3_radius(n_tour, delta)
    if r_tour > half:
        tour = tour.scaled(half / r_tour)

    region = AngularRegion((0.0, np.deg2rad(80.0)), (0.0, 2 * np.pi), 1000)
    grid = discretize_region(region)
    worst_opt = worst_factor(optimized, grid)
    worst_tour = worst_factor(tour, grid)
    print(f"worst-case factor, optimized:     {worst_opt:10.2f} 1/m^2")
    print(f"worst-case factor, 3-circle tour: {worst_tour:10.2f} 1/m^2")
    print(f"improvement: {worst_tour / worst_opt:.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(run(*sys.argv[1:]))
