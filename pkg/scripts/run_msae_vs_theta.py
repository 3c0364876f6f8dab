#!/usr/bin/env python3
"""Monte Carlo elevation sweep: flat isotropic curve vs planar divergence.

Drives the mc-sweep command with the desk-scale elevation-sweep
configuration and prints the flatness/divergence summary from the
emitted dataset.

Usage: python scripts/run_msae_vs_theta.py [outdir]
"""

import csv
import pathlib
import sys
from collections import defaultdict

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from masense.cli import main as cli_main

ROOT = pathlib.Path(__file__).resolve().parents[1]


def run(outdir="out/msae_vs_theta"):
    out = pathlib.Path(outdir)
    cfg = ROOT / "configs" / "sweep_theta_desk.cfg"
    rc = cli_main(["mc-sweep", str(cfg), "--out", str(out), "--plot"])
    if rc != 0:
        return rc

    curves = defaultdict(list)
    with open(out / "msae_vs_theta.csv") as fh:
        for row in csv.DictReader(fh):
            curves[row["source"]].append(float(row["msae_rad2"]))
    for name, values in curves.items():
        print(f"{name}: msae max/min over elevations = {max(values) / min(values):.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(run(*sys.argv[1:]))
