"""``sblimp`` command-line entry point.

Exit codes: 0 stable (or saturated-degraded) run, 2 diverged, 3 configuration
error, 4 verification failure.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, default_ini, load_config
from .experiments import (DIVERGED, calibrate_drag, classify_stability, divergence_onset,
                          linear_fit, metrics, saturation_onset, sweep)
from .simulator import run
from .spatial import spatial_run
from .verify import run_checks

EXIT_OK, EXIT_DIVERGED, EXIT_CONFIG, EXIT_VERIFY = 0, 2, 3, 4
OUT_ENV = "SBLIMP_OUT"


def _overrides(args) -> dict:
    out = {}
    if getattr(args, "integrator", None):
        out[("sim", "integrator")] = args.integrator
    if getattr(args, "decimate", None) is not None:
        out[("sim", "decimate")] = args.decimate
    if getattr(args, "parallel", None) is not None:
        out[("sweep", "parallel")] = args.parallel
    return out


def _out_dir(args, cfg: RunConfig) -> Path:
    if args.out:
        return Path(args.out)
    if cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(os.environ.get(OUT_ENV, "sblimp_out")) / args.command


def _load(args) -> RunConfig:
    """Load the config; any problem is reported as a configuration error."""
    try:
        return load_config(args.config, _overrides(args))
    except ValueError as exc:  # ConfigError and InvalidDesignError alike
        raise ConfigError(str(exc)) from exc


def _write_trace(out: Path, log, spatial: bool) -> None:
    label = "x y" if spatial else "x z"
    np.savetxt(out / "trace.dat",
               np.column_stack([log.positions[:, :2], log.p_ref[:, :2]]),
               fmt="%.9g", header=f"{label} (actual) {label} (reference)")
    a, b = label.split()
    (out / "trace.gp").write_text(
        "set terminal pngcairo size 700,700\n"
        "set output 'trace.png'\n"
        "set size ratio -1\n"
        f"set xlabel '{a} [m]'\nset ylabel '{b} [m]'\n"
        "plot 'trace.dat' u 1:2 w l t 'actual', '' u 3:4 w l dt 2 t 'reference'\n"
    )


def cmd_simulate(args) -> int:
    cfg = _load(args)
    if cfg.spatial:
        log = spatial_run(cfg.params, cfg.gains, cfg.sim, cfg.trajectory, cfg.a_y, cfg.z_share)
    else:
        log = run(cfg.params, cfg.gains, cfg.sim, cfg.trajectory)
    transient = cfg.sim.transient
    cls = classify_stability(log, transient)
    m = metrics(log, transient)

    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    log.to_csv(out / "log.csv")
    (out / "resolved_config.ini").write_text(cfg.to_ini())
    _write_trace(out, log, cfg.spatial)
    lines = [
        f"model: {cfg.model}",
        f"trajectory: {cfg.trajectory.kind}",
        f"status: {log.status}",
        f"class: {cls}",
        f"duration: {log.t[-1]:.6g} s",
        f"samples: {len(log)}",
    ]
    lines += [f"{k}: {getattr(m, k):.6g}" for k in
              ("max_verr", "avg_verr", "max_aerr", "avg_aerr", "max_perr", "avg_perr", "sat_frac")]
    if cls == DIVERGED:
        lines.append(f"DIVERGED: {log.status} at t = {log.t[-1]:.6g} s")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    if cls == DIVERGED:
        print(f"error: run diverged ({log.status}) at t = {log.t[-1]:.6g} s", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    spec = cfg.sweep_spec()
    report = sweep(spec)

    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    report.to_csv(out / "sweep.csv")
    report.write_plot_data(out)
    report.write_gnuplot(out)
    (out / "resolved_config.ini").write_text(cfg.to_ini())

    classes = report.classes()
    lines = [f"parameter: {spec.parameter}",
             f"grid: {spec.start:g}..{spec.stop:g} step {spec.step:g} ({len(classes)} points)"]
    lines += [f"count {c}: {classes.count(c)}" for c in sorted(set(classes))]
    onset, div = saturation_onset(report), divergence_onset(report)
    lines.append(f"saturation_onset: {onset if onset is not None else 'none'}")
    lines.append(f"divergence_onset: {div if div is not None else 'none'}")
    if spec.parameter == "speed" and onset is not None:
        x = report.values()
        pre = x < onset
        if pre.sum() >= 3:
            slope, icpt, r2 = linear_fit(x[pre], report.column("avg_verr")[pre])
            lines.append(f"pre_saturation_fit: slope={slope:.6g} intercept={icpt:.6g} r2={r2:.6f}")
    lines += [f"anomaly: {a}" for a in report.anomalies]
    if args.calibrate:
        cal = calibrate_drag(cfg.params, cfg.gains, target=args.target, sim=cfg.sim,
                             axes=args.axes)
        lines += [f"calibration_{k}: {v}" for k, v in cal.to_dict().items()]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        cfg = load_config(args.config, _overrides(args))
    except ConfigError:
        raise
    except ValueError as exc:
        print(f"FAIL design invariants: {exc}")
        return EXIT_VERIFY
    results = run_checks(cfg.params, cfg.gains, cfg.sim.seed)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file (defaults apply when omitted)")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV}/<command>)")
    common.add_argument("--decimate", type=int, help="log every n-th integration step")
    common.add_argument("--parallel", type=int, help="worker processes for sweeps")
    common.add_argument("--integrator", choices=("rk4", "euler"))

    parser = argparse.ArgumentParser(prog="sblimp", description=__doc__.splitlines()[0])
    parser.add_argument("--print-defaults", action="store_true",
                        help="print the fully defaulted configuration and exit")
    sub = parser.add_subparsers(dest="command")
    sub.add_parser("simulate", parents=[common], help="run one closed-loop simulation")
    sp = sub.add_parser("sweep", parents=[common], help="sweep one parameter over a grid")
    sp.add_argument("--calibrate", action="store_true",
                    help="also fit the drag that places saturation onset at --target")
    sp.add_argument("--target", type=float, default=0.6, help="onset speed target [m/s]")
    sp.add_argument("--axes", choices=("x", "xz"), default="xz",
                    help="drag coefficients varied during calibration")
    sub.add_parser("verify", parents=[common], help="run the built-in verification suite")
    return parser


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_defaults:
        print(default_ini())
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
