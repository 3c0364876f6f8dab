"""Batch command-line front-end.

Subcommands: ``optimize`` (min-max trajectory design over an angular
region), ``optimize-single`` (one target direction), ``benchmark``
(reference trajectory generation), ``msaeb-map`` (bound over an angle
grid), ``mc-sweep`` (Monte Carlo experiments), and ``verify`` (the
invariant suite).  Experiments are configured through flat
``key = value`` parameter files; unknown keys are rejected so typos
cannot silently fall back to defaults.

Every run writes a ``manifest.txt`` with the fully resolved
configuration, library versions, seed, and wall time.  Exit codes:
0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time

import numpy as np

from . import __version__
from . import benchmarks, svgplot
from .geometry import (
    AngleVector,
    MovementRegion,
    position_covariance,
    read_trajectory_csv,
    write_trajectory_csv,
    FLOAT_FORMAT,
)
from .metrics import (
    SensingScenario,
    isotropy_report,
    msaeb_from_covariance,
    write_angle_map_csv,
)
from .optimizer import AngularRegion, OptimizationProblem, optimize_single_direction, sca_optimize
from .simulation import (
    McConfig,
    SWEEP_HEADERS,
    sweep_correlation,
    sweep_msae_vs_snr,
    sweep_msae_vs_theta,
    write_sweep_csv,
)
from .verification import run_all

LARGE_N = 5000

_BENCH_KINDS = {
    "upg": "UPG",
    "circle": "Circle",
    "circle3": "Circle3",
    "fpa-upa": "FpaUpa",
    "fpa-cpa": "FpaCpa",
}


class ConfigError(Exception):
    pass


def _parse_kv_file(path):
    """Flat key = value file; '#' starts a comment; blank lines ignored."""
    values = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
                key, value = (part.strip() for part in line.split("=", 1))
                if key in values:
                    raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
                values[key] = value
    except OSError as exc:
        raise ConfigError(f"cannot read parameter file: {exc}") from exc
    return values


def _bool(text):
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _float_list(text):
    return tuple(float(part) for part in text.split(",") if part.strip())


def _resolve(schema, raw, path):
    """Typed config resolution; unknown keys and missing required keys error."""
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s): {', '.join(sorted(unknown))}")
    out = {}
    for key, (parser, default) in schema.items():
        if key in raw:
            try:
                out[key] = parser(raw[key])
            except ValueError as exc:
                raise ConfigError(f"{path}: bad value for {key!r}: {exc}") from exc
        elif default is _REQUIRED:
            raise ConfigError(f"{path}: missing required key {key!r}")
        else:
            out[key] = default
    return out


_REQUIRED = object()

_PROBLEM_SCHEMA = {
    "N": (int, _REQUIRED),
    "Ts": (float, _REQUIRED),
    "vmax": (float, _REQUIRED),
    "region_A": (float, _REQUIRED),
    "theta_lo_deg": (float, _REQUIRED),
    "theta_hi_deg": (float, _REQUIRED),
    "phi_lo_deg": (float, _REQUIRED),
    "phi_hi_deg": (float, _REQUIRED),
    "Q": (int, _REQUIRED),
    "velocity_block": (int, 1),
    "epsilon": (float, 1e-4),
    "max_iters": (int, 50),
    "seed": (int, 0),
    "grid_layout": (str, "product"),
}

_MAP_SCHEMA = {
    "source": (str, _REQUIRED),
    "N": (int, 1200),
    "Ts": (float, 1e-5),
    "vmax": (float, 10.0),
    "wavelength": (float, 0.05),
    "snr_db": (float, 0.0),
    "theta_step_deg": (float, 2.0),
    "phi_step_deg": (float, 2.0),
    "value": (str, "msaeb"),
    "seed": (int, 0),
}

_SWEEP_SCHEMA = {
    "experiment": (str, _REQUIRED),
    "sources": (str, _REQUIRED),
    "N": (int, _REQUIRED),
    "Ts": (float, 1e-3),
    "vmax": (float, 10.0),
    "wavelength": (float, 0.05),
    "seed": (int, 0),
    "trials": (int, 100),
    "grid_resolution_deg": (float, 1.0),
    "refine_levels": (int, 2),
    "search_theta_max_deg": (float, 180.0),
    "random_phase_pilot": (_bool, False),
    "theta_deg": (float, 45.0),
    "phi_deg": (float, 45.0),
    "snr_db": (_float_list, (0.0,)),
    "theta_list_deg": (_float_list, tuple(float(t) for t in range(5, 90, 10))),
    "map_resolution_deg": (float, 1.0),
}


def _apply_seed_override(config):
    env = os.environ.get("MASENSE_SEED")
    if env is not None and "seed" in config:
        config["seed"] = int(env)
    return config


def _write_manifest(out_dir, command, config, seed, started):
    import cvxpy

    lines = [f"command = {command}"]
    for key in sorted(config):
        lines.append(f"{key} = {config[key]}")
    lines.append(f"seed = {seed}")
    lines.append(f"masense_version = {__version__}")
    lines.append(f"numpy_version = {np.__version__}")
    lines.append(f"cvxpy_version = {cvxpy.__version__}")
    lines.append(f"python_version = {sys.version.split()[0]}")
    lines.append(f"wall_seconds = {time.perf_counter() - started:.3f}")
    with open(os.path.join(out_dir, "manifest.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_trace_csv(path, trace):
    fmt = lambda x: format(float(x), FLOAT_FORMAT)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "delta_grid", "delta_dense", "seconds"])
        for it in trace.iterations:
            writer.writerow([str(it.index), fmt(it.delta_grid), fmt(it.delta_dense), f"{it.seconds:.3f}"])


def _problem_from_config(cfg):
    region = MovementRegion.cube(cfg["region_A"])
    angular = AngularRegion(
        (np.deg2rad(cfg["theta_lo_deg"]), np.deg2rad(cfg["theta_hi_deg"])),
        (np.deg2rad(cfg["phi_lo_deg"]), np.deg2rad(cfg["phi_hi_deg"])),
        cfg["Q"],
    )
    return OptimizationProblem(
        region=region,
        vmax=cfg["vmax"],
        sampling_period=cfg["Ts"],
        n_snapshots=cfg["N"],
        angular=angular,
        velocity_block=cfg["velocity_block"],
        sca_tol=cfg["epsilon"],
        max_outer_iters=cfg["max_iters"],
        grid_layout=cfg["grid_layout"],
    )


def _guard_large(n, allow_large, what):
    if n <= LARGE_N or allow_large:
        if n > LARGE_N:
            est = n / 16000.0
            print(f"note: large run (N={n}); expect on the order of {10 * est:.0f}+ minutes for {what}")
        return
    raise ConfigError(
        f"N={n} exceeds the desk-scale guard ({LARGE_N}); pass --allow-large to proceed ({what})"
    )


def _source_trajectory(token, n, delta, wavelength, ts):
    if token.startswith("csv:"):
        return read_trajectory_csv(token[4:])
    low = token.strip().lower()
    if low not in _BENCH_KINDS:
        raise ConfigError(
            f"unknown source {token!r}; use one of {sorted(_BENCH_KINDS)} or csv:<path>"
        )
    kind = _BENCH_KINDS[low]
    spec = benchmarks.BenchmarkSpec(kind=kind, n=n, delta=delta, wavelength=wavelength)
    return benchmarks.generate(spec, sampling_period=ts)


def _cmd_optimize(args, single):
    started = time.perf_counter()
    cfg = _apply_seed_override(_resolve(_PROBLEM_SCHEMA, _parse_kv_file(args.params), args.params))
    _guard_large(cfg["N"], args.allow_large, "trajectory optimization")
    problem = _problem_from_config(cfg)
    if single:
        if cfg["Q"] != 1:
            raise ConfigError("optimize-single requires Q = 1 (a single target direction)")
        traj, trace = optimize_single_direction(problem)
    else:
        traj, trace = sca_optimize(problem)
    os.makedirs(args.out, exist_ok=True)
    write_trajectory_csv(traj, os.path.join(args.out, "trajectory.csv"))
    _write_trace_csv(os.path.join(args.out, "trace.csv"), trace)
    _write_manifest(args.out, "optimize-single" if single else "optimize", cfg, cfg["seed"], started)
    if args.plot:
        iters = [it.index for it in trace.iterations]
        svgplot.line_chart(
            {
                "grid worst-case": (iters, [it.delta_grid for it in trace.iterations]),
                "dense worst-case": (iters, [it.delta_dense for it in trace.iterations]),
            },
            os.path.join(args.out, "trace.svg"),
            title="convergence",
            xlabel="outer iteration",
            ylabel="worst-case factor (1/m^2)",
        )
    print(
        f"{'optimize-single' if single else 'optimize'}: {trace.stop_reason} after "
        f"{len(trace.iterations) - 1} iterations, worst-case factor {trace.final_delta:.6g} 1/m^2"
    )
    return 0


def _cmd_benchmark(args):
    started = time.perf_counter()
    kind = _BENCH_KINDS[args.kind]
    delta = args.delta if args.delta is not None else 2e-3 * args.wavelength
    spec = benchmarks.BenchmarkSpec(
        kind=kind, n=args.N, delta=delta, wavelength=args.wavelength
    )
    traj = benchmarks.generate(spec, sampling_period=args.ts)
    os.makedirs(args.out, exist_ok=True)
    write_trajectory_csv(traj, os.path.join(args.out, "trajectory.csv"))
    report = isotropy_report(position_covariance(traj.positions))
    with open(os.path.join(args.out, "isotropy.txt"), "w") as fh:
        fh.write(f"kind = {args.kind}\n")
        fh.write(f"samples = {traj.n_snapshots}\n")
        fh.write(f"is_isotropic = {report.is_isotropic}\n")
        fh.write(f"tau = {format(report.tau, FLOAT_FORMAT)}\n")
        fh.write(f"deviation = {format(report.deviation, FLOAT_FORMAT)}\n")
    config = {
        "kind": args.kind,
        "N": args.N,
        "delta": delta,
        "wavelength": args.wavelength,
        "Ts": args.ts,
    }
    _write_manifest(args.out, "benchmark", config, 0, started)
    print(
        f"benchmark {args.kind}: {traj.n_snapshots} samples, isotropy deviation "
        f"{report.deviation:.3e} ({'isotropic' if report.is_isotropic else 'not isotropic'})"
    )
    return 0


def _cmd_msaeb_map(args):
    started = time.perf_counter()
    cfg = _apply_seed_override(_resolve(_MAP_SCHEMA, _parse_kv_file(args.params), args.params))
    if cfg["value"] not in ("msaeb", "factor"):
        raise ConfigError("value must be 'msaeb' or 'factor'")
    delta = cfg["vmax"] * cfg["Ts"]
    traj = _source_trajectory(cfg["source"], cfg["N"], delta, cfg["wavelength"], cfg["Ts"])
    _guard_large(traj.n_snapshots, args.allow_large, "bound map")
    u = position_covariance(traj.positions)
    scen = SensingScenario.from_snr_db(
        cfg["snr_db"], cfg["wavelength"], traj.n_snapshots, sampling_period=cfg["Ts"]
    )
    theta_deg = np.arange(0.0, 180.0 + cfg["theta_step_deg"] / 2.0, cfg["theta_step_deg"])
    phi_deg = np.arange(0.0, 360.0 + cfg["phi_step_deg"] / 2.0, cfg["phi_step_deg"])
    values = np.empty((theta_deg.size, phi_deg.size))
    for i, t in enumerate(theta_deg):
        for j, p in enumerate(phi_deg):
            res = msaeb_from_covariance(u, AngleVector.from_degrees(t, p), scen)
            values[i, j] = res.msaeb if cfg["value"] == "msaeb" else res.f_value
    os.makedirs(args.out, exist_ok=True)
    out_csv = os.path.join(args.out, "map.csv")
    write_angle_map_csv(out_csv, theta_deg, phi_deg, values)
    _write_manifest(args.out, "msaeb-map", cfg, cfg["seed"], started)
    if args.plot:
        svgplot.heatmap(
            phi_deg,
            theta_deg,
            values.tolist(),
            os.path.join(args.out, "map.svg"),
            title=f"{cfg['value']} over angles ({cfg['source']})",
            xlabel="phi (deg)",
            ylabel="theta (deg)",
        )
    print(f"msaeb-map: wrote {values.size} grid values to {out_csv}")
    return 0


def _cmd_mc_sweep(args):
    started = time.perf_counter()
    cfg = _apply_seed_override(_resolve(_SWEEP_SCHEMA, _parse_kv_file(args.params), args.params))
    experiment = cfg["experiment"]
    if experiment not in SWEEP_HEADERS:
        raise ConfigError(f"unknown experiment {cfg['experiment']!r}; use one of {sorted(SWEEP_HEADERS)}")
    _guard_large(cfg["N"], args.allow_large, "Monte Carlo sweeps")
    delta = cfg["vmax"] * cfg["Ts"]
    sources = []
    for token in cfg["sources"].split(","):
        token = token.strip()
        if token:
            sources.append((token, _source_trajectory(token, cfg["N"], delta, cfg["wavelength"], cfg["Ts"])))
    if not sources:
        raise ConfigError("sources must name at least one trajectory")
    mc = McConfig(
        trials=cfg["trials"],
        snr_db=cfg["snr_db"],
        grid_resolution_deg=cfg["grid_resolution_deg"],
        refine_levels=cfg["refine_levels"],
        rng_seed=cfg["seed"],
        search_theta_max_deg=cfg["search_theta_max_deg"],
        random_phase_pilot=cfg["random_phase_pilot"],
        threads=args.threads,
    )
    chi = AngleVector.from_degrees(cfg["theta_deg"], cfg["phi_deg"])
    if experiment == "msae_vs_snr":
        rows = sweep_msae_vs_snr(sources, chi, cfg["wavelength"], cfg["snr_db"], mc, cfg["Ts"])
    elif experiment == "msae_vs_theta":
        rows = sweep_msae_vs_theta(
            sources, cfg["theta_list_deg"], cfg["phi_deg"], cfg["snr_db"][0], cfg["wavelength"], mc, cfg["Ts"]
        )
    else:
        rows = sweep_correlation(sources, chi, cfg["map_resolution_deg"], cfg["wavelength"])
    os.makedirs(args.out, exist_ok=True)
    out_csv = os.path.join(args.out, f"{experiment}.csv")
    write_sweep_csv(out_csv, SWEEP_HEADERS[experiment], rows)
    _write_manifest(args.out, "mc-sweep", cfg, cfg["seed"], started)
    if args.plot and experiment in ("msae_vs_snr", "msae_vs_theta"):
        _plot_sweep(experiment, rows, os.path.join(args.out, f"{experiment}.svg"))
    print(f"mc-sweep {experiment}: wrote {len(rows)} rows to {out_csv}")
    return 0


def _plot_sweep(experiment, rows, path):
    x_col = 0
    series = {}
    for row in rows:
        name = row[1]
        x = float(row[x_col])
        if not np.isfinite(x):
            continue
        series.setdefault(name, ([], []))
        series[name][0].append(x)
        series[name][1].append(float(row[2]))
    xlabel = "SNR (dB)" if experiment == "msae_vs_snr" else "theta (deg)"
    svgplot.line_chart(series, path, title=experiment, xlabel=xlabel, ylabel="MSAE (rad^2)", log_y=True)


def _cmd_verify(args):
    started = time.perf_counter()
    seed = int(os.environ.get("MASENSE_SEED", args.seed))
    results = run_all(seed)
    os.makedirs(args.out, exist_ok=True)
    report_path = os.path.join(args.out, "verify_report.csv")
    with open(report_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["check", "passed", "metric", "threshold"])
        for res in results:
            writer.writerow(
                [res.name, str(res.passed), format(res.metric, ".6e"), format(res.threshold, ".6e")]
            )
    width = max(len(r.name) for r in results)
    print(f"{'check'.ljust(width)}  result  metric")
    print("-" * (width + 24))
    for res in results:
        flag = "PASS" if res.passed else "FAIL"
        print(f"{res.name.ljust(width)}  {flag}    {res.metric:.3e}")
    n_fail = sum(not r.passed for r in results)
    _write_manifest(args.out, "verify", {"checks": len(results)}, seed, started)
    print(f"{len(results) - n_fail}/{len(results)} checks passed")
    return 0 if n_fail == 0 else 2


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="masense",
        description="Direction-sensing error bounds and 3-D movable-antenna trajectory optimization",
    )
    parser.add_argument("--version", action="version", version=f"masense {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--plot", action="store_true", help="also render SVG plots")
        p.add_argument("--threads", type=int, default=1, help="parallel worker cap (default 1)")
        p.add_argument("--allow-large", action="store_true", help="permit full-scale snapshot counts")

    p_opt = sub.add_parser("optimize", help="min-max trajectory optimization over an angular region")
    p_opt.add_argument("params", help="flat key=value problem definition file")
    common(p_opt)

    p_single = sub.add_parser("optimize-single", help="trajectory optimization for one direction")
    p_single.add_argument("params", help="flat key=value problem definition file (Q = 1)")
    common(p_single)

    p_bench = sub.add_parser("benchmark", help="generate a reference trajectory or array")
    p_bench.add_argument("--kind", required=True, choices=sorted(_BENCH_KINDS))
    p_bench.add_argument("--N", required=True, type=int, help="snapshot count")
    p_bench.add_argument("--delta", type=float, default=None, help="per-step travel (default 2e-3 wavelength)")
    p_bench.add_argument("--wavelength", type=float, default=0.05)
    p_bench.add_argument("--ts", type=float, default=1e-5, help="sampling period (s)")
    common(p_bench)

    p_map = sub.add_parser("msaeb-map", help="bound or geometry factor over an angle grid")
    p_map.add_argument("params", help="flat key=value parameter file")
    common(p_map)

    p_mc = sub.add_parser("mc-sweep", help="Monte Carlo estimation experiments")
    p_mc.add_argument("params", help="flat key=value parameter file")
    common(p_mc)

    p_ver = sub.add_parser("verify", help="run the invariant verification suite")
    p_ver.add_argument("--seed", type=int, default=20240801)
    common(p_ver)

    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "optimize":
            return _cmd_optimize(args, single=False)
        if args.command == "optimize-single":
            return _cmd_optimize(args, single=True)
        if args.command == "benchmark":
            return _cmd_benchmark(args)
        if args.command == "msaeb-map":
            return _cmd_msaeb_map(args)
        if args.command == "mc-sweep":
            return _cmd_mc_sweep(args)
        if args.command == "verify":
            return _cmd_verify(args)
        parser.error(f"unknown command {args.command!r}")
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
