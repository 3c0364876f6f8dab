#!/usr/bin/env python3
"""Single-direction design and benchmark bound comparison.

Optimizes a trajectory for one known target direction, confirms it
stays in the plane orthogonal to that direction, and tabulates its
error bound against the planar benchmarks and fixed arrays at the same
sensing budget.

Usage: python scripts/run_single_direction.py [outdir]
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from masense.benchmarks import circle_radius, gen_circle, gen_fpa, gen_upg
from masense.cli import main as cli_main
from masense.geometry import (
    AngleVector,
    direction_from_angles,
    position_covariance,
    read_trajectory_csv,
)
from masense.metrics import SensingScenario, msaeb_from_covariance

ROOT = pathlib.Path(__file__).resolve().parents[1]
LAM = 0.05


def bound(traj, chi, samples, ts):
    scen = SensingScenario.from_snr_db(0.0, LAM, samples, sampling_period=ts)
    return msaeb_from_covariance(position_covariance(traj.positions), chi, scen).msaeb


def run(outdir="out/single_direction"):
    out = pathlib.Path(outdir)
    cfg = ROOT / "configs" / "optimize_single_desk.cfg"
    rc = cli_main(["optimize-single", str(cfg), "--out", str(out), "--plot"])
    if rc != 0:
        return rc

    chi = AngleVector.from_degrees(45.0, 45.0)
    traj = read_trajectory_csv(out / "trajectory.csv")
    n, ts = traj.n_snapshots, traj.sampling_period
    delta = 10.0 * ts
    half = 0.25

    eta = direction_from_angles(chi).components
    along = np.var(eta @ traj.positions)
    total = np.trace(position_covariance(traj.positions))
    print(f"out-of-plane variance fraction: {along / total:.2e}")

    rows = [("optimized", bound(traj, chi, n, ts))]
    circle = gen_circle(n, delta, ts)
    r_nat = circle_radius(n, delta)
    if r_nat > half:
        circle = circle.scaled(half / r_nat)
    rows.append(("circle (x-y)", bound(circle, chi, n, ts)))
    square = int(np.sqrt(n)) ** 2
    rows.append(("upg", bound(gen_upg(square, delta, ts), chi, square, ts)))
    rows.append(("fpa-upa", bound(gen_fpa("FpaUpa", n, LAM, ts), chi, 16 * n, ts)))
    rows.append(("fpa-cpa", bound(gen_fpa("FpaCpa", n, LAM, ts), chi, 16 * n, ts)))

    base = rows[0][1]
    print(f"{'scheme':<14} {'bound (rad^2)':>14} {'vs optimized':>14}")
    for name, value in rows:
        print(f"{name:<14} {value:14.3e} {value / base:13.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(run(*sys.argv[1:]))
