"""Command-line front end.

    cotrans run <scenario> [-o DIR] [--dt X] [--t-end X] [--seed K]
    cotrans sweep <scenario> --param P --values a,b,c [-o DIR]
    cotrans check <scenario>

`run` integrates one scenario and writes trajectory.csv, errors.csv,
velocities.csv, two SVG figures, and report.json into the output
directory. `sweep` repeats a run across parameter values and adds a
summary CSV. `check` validates and certifies without integrating.

Exit codes: 0 success, 1 configuration error, 2 runtime failure (early
termination), 3 output I/O error. COTRANS_LOG={error|warn|info|debug}
controls verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .analysis import certify_scenario, empirical_delta, sampled_delta_bound
from .dynamics import estimate_force_lipschitz
from .emitters import (
    certificate_dict,
    metrics_dict,
    plot_curves_svg,
    plot_trajectory_svg,
    write_errors_csv,
    write_report_json,
    write_trajectory_csv,
    write_velocities_csv,
)
from .qp import estimate_solution_lipschitz
from .scenario_io import ParseError, SchemaError, config_echo, parse_scenario
from .simulation import HardInvalid, metrics, run, validate_scenario

__all__ = ["RunReport", "run_command", "sweep_command", "check_command", "main"]

logger = logging.getLogger(__name__)

SWEEP_PARAMETERS = ("k_p", "k_v", "eps", "dt")

_ESTIMATE_SAMPLES = 10_000


@dataclass(eq=False)
class RunReport:
    """Everything `run` learned, mirrored into report.json."""

    label: str
    config: dict
    warnings: list[str] = field(default_factory=list)
    metrics: dict | None = None
    certificate: dict | None = None
    estimates: dict = field(default_factory=dict)
    manifest: list[str] = field(default_factory=list)
    termination: str | None = None
    runtime_seconds: float = 0.0
    exit_code: int = 0

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "config": self.config,
            "warnings": self.warnings,
            "metrics": self.metrics,
            "certificate": self.certificate,
            "estimates": self.estimates,
            "manifest": self.manifest,
            "termination": self.termination,
            "runtime_seconds": self.runtime_seconds,
            "exit_code": self.exit_code,
            "backend": _kernels.BACKEND,
        }


def _apply_overrides(cfg, dt=None, t_end=None, seed=None):
    updates = {}
    if dt is not None:
        updates["dt"] = dt
    if t_end is not None:
        updates["t_end"] = t_end
    if seed is not None:
        updates["seed"] = seed
    return cfg.with_overrides(**updates) if updates else cfg


def _estimates_for(cfg, log=None) -> tuple[dict, float | None]:
    """Empirical constants for certification; delta comes from the run when
    one is available, from the a-priori residual bound otherwise."""
    gains, geom = cfg.gains, cfg.geom
    l_f = estimate_force_lipschitz(
        geom,
        robot_count=1,
        separation_floor=0.5 * geom.contact_distance,
        samples=_ESTIMATE_SAMPLES,
        seed=cfg.seed,
        dimension=cfg.n,
    )
    l_phi = estimate_solution_lipschitz(
        gains.directions,
        geom.stiffness,
        gains.eps,
        gains.k_v,
        sample_box=2.0,
        samples=_ESTIMATE_SAMPLES,
        seed=cfg.seed,
    )
    delta = None
    source = "none"
    if log is not None:
        delta = empirical_delta(log)
        source = "measured residual ratio"
    if delta is None:
        delta = sampled_delta_bound(gains.directions, geom.stiffness, gains.eps, seed=cfg.seed)
        source = "sampled a-priori bound"
        if delta <= 0.0:
            delta = None
            source = "unavailable"
    estimates = {
        "L_f_hat": l_f,
        "L_phi_hat": l_phi,
        "delta_hat": delta,
        "delta_source": source,
        "samples": _ESTIMATE_SAMPLES,
        "seed": cfg.seed,
    }
    return estimates, delta


def _certificate_for(cfg, estimates, delta) -> dict | None:
    if delta is None or not 0.0 < delta < 1.0:
        return None
    cert = certify_scenario(cfg, delta, estimates["L_f_hat"], estimates["L_phi_hat"])
    return certificate_dict(cert)


def run_command(
    scenario_path,
    out_dir,
    dt: float | None = None,
    t_end: float | None = None,
    seed: int | None = None,
) -> RunReport:
    """Parse, validate, integrate, certify, and write all outputs.

    Raises ParseError/SchemaError/HardInvalid for configuration problems
    and OSError for output failures; early termination is reported on the
    returned RunReport (exit_code 2), not raised.
    """
    cfg = _apply_overrides(parse_scenario(scenario_path), dt, t_end, seed)
    report = _run_prepared(cfg, out_dir)
    _print_run_summary(report)
    return report


def _print_run_summary(report: RunReport) -> None:
    print(
        f"{report.label}: exit {report.exit_code}, backend {_kernels.BACKEND}, "
        f"runtime {report.runtime_seconds:.2f} s"
    )
    for warning in report.warnings:
        print(f"  warning: {warning}")
    if report.termination:
        print(f"  terminated early: {report.termination}")
    if report.metrics:
        print(
            f"  tail-mean vel error {report.metrics['vel_error_tail_mean']:.4g}, "
            f"tail-mean pos error {report.metrics['pos_error_tail_mean']:.4g}"
        )
        if report.metrics["circle_radius"] is not None:
            print(
                f"  circle fit: radius {report.metrics['circle_radius']:.4f}, "
                f"rms {report.metrics['circle_rms']:.4g}"
            )
    if report.certificate is not None:
        lhs = report.certificate["small_gain_lhs"]
        state = "ok" if report.certificate["small_gain_ok"] else "NOT satisfied"
        lhs_text = "infeasible" if lhs is None else f"{lhs:.4g}"
        print(f"  small-gain: {state} (lhs {lhs_text})")
    for path in report.manifest:
        print(f"  wrote {path}")


def sweep_command(scenario_path, parameter: str, values, out_dir) -> list[RunReport]:
    """One run per value into isolated subdirectories plus sweep.csv.

    Per-run failures are recorded on their reports and the sweep continues;
    only configuration errors in the base scenario or the value list raise.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise SchemaError(f"--param must be one of {', '.join(SWEEP_PARAMETERS)}")
    values = list(values)
    if not values:
        raise SchemaError("--values must list at least one value")

    base = parse_scenario(scenario_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    reports: list[RunReport] = []
    rows: list[dict] = []
    for value in values:
        sub_dir = out_dir / f"{parameter}_{value:g}"
        if parameter == "dt":
            cfg = base.with_overrides(dt=value)
        else:
            cfg = base.with_overrides(gains=replace(base.gains, **{parameter: value}))
        row = {"parameter": parameter, "value": value, "out_dir": str(sub_dir)}
        try:
            report = _run_prepared(cfg, sub_dir)
        except (ParseError, SchemaError, HardInvalid, ValueError) as exc:
            logger.error("sweep value %s=%g failed: %s", parameter, value, exc)
            report = RunReport(
                label=f"{base.label}[{parameter}={value:g}]",
                config=config_echo(cfg),
                warnings=[f"failed: {exc}"],
                exit_code=1,
            )
        reports.append(report)
        row["exit_code"] = report.exit_code
        row["error"] = report.termination or ("; ".join(report.warnings) if report.exit_code else "")
        metric = report.metrics or {}
        row["vel_error_tail_mean"] = metric.get("vel_error_tail_mean")
        row["pos_error_tail_mean"] = metric.get("pos_error_tail_mean")
        row["circle_rms"] = metric.get("circle_rms")
        row["saturation_count"] = metric.get("saturation_count")
        rows.append(row)

    _write_sweep_csv(rows, out_dir / "sweep.csv")
    print(f"sweep over {parameter}: {len(rows)} runs, summary in {out_dir / 'sweep.csv'}")
    return reports


def _run_prepared(cfg, out_dir) -> RunReport:
    """run_command body for an already-parsed config (sweep runs)."""
    validation = validate_scenario(cfg)
    report = RunReport(label=cfg.label, config=config_echo(cfg))
    report.warnings.extend(validation.warnings)

    started = time.perf_counter()
    log = run(cfg)
    report.runtime_seconds = time.perf_counter() - started
    report.termination = log.termination

    summary = metrics(log) if len(log) else None
    if summary is not None:
        report.metrics = metrics_dict(summary)
        if summary.saturation_count:
            report.warnings.append(
                f"allocation saturated on {summary.saturation_count} of {len(log)} steps"
            )

    estimates, delta = _estimates_for(cfg, log)
    report.estimates = estimates
    report.certificate = _certificate_for(cfg, estimates, delta)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(log, out_dir / "trajectory.csv")
    write_errors_csv(log, out_dir / "errors.csv")
    write_velocities_csv(log, out_dir / "velocities.csv")
    report.manifest = [
        str(out_dir / "trajectory.csv"),
        str(out_dir / "errors.csv"),
        str(out_dir / "velocities.csv"),
    ]
    if len(log):
        plot_trajectory_svg(log, cfg.geom, out_dir / "trajectory.svg")
        plot_curves_svg(log, out_dir / "curves.svg")
        report.manifest += [str(out_dir / "trajectory.svg"), str(out_dir / "curves.svg")]
    report.exit_code = 2 if log.termination else 0
    write_report_json(report.to_dict(), out_dir / "report.json")
    return report


def _write_sweep_csv(rows: list[dict], path) -> None:
    import csv

    columns = [
        "parameter",
        "value",
        "exit_code",
        "vel_error_tail_mean",
        "pos_error_tail_mean",
        "circle_rms",
        "saturation_count",
        "out_dir",
        "error",
    ]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            record = []
            for name in columns:
                value = row.get(name)
                if isinstance(value, float):
                    record.append(repr(value))
                elif value is None:
                    record.append("")
                else:
                    record.append(str(value))
            writer.writerow(record)


def check_command(scenario_path) -> int:
    """Validate and certify without integrating; prints the findings."""
    cfg = parse_scenario(scenario_path)
    validation = validate_scenario(cfg)

    print(f"{cfg.label}: structure ok (n={cfg.n}, N={cfg.N})")
    for warning in validation.warnings:
        print(f"  warning: {warning}")
    for i, deviation in enumerate(validation.deviations):
        print(f"  robot {i + 1} initial touch-point deviation: {deviation:.6g}")
    print(f"  initial object speed: {validation.initial_speed:.6g}")

    estimates, delta = _estimates_for(cfg, log=None)
    print(
        f"  estimates: L_f {estimates['L_f_hat']:.6g}, L_phi {estimates['L_phi_hat']:.6g}, "
        f"delta {estimates['delta_hat']} ({estimates['delta_source']})"
    )
    certificate = _certificate_for(cfg, estimates, delta)
    if certificate is None:
        print("  certificate: unavailable (no usable delta estimate)")
    else:
        lhs = certificate["small_gain_lhs"]
        lhs_text = "infeasible" if lhs is None else f"{lhs:.6g}"
        state = "satisfied" if certificate["small_gain_ok"] else "NOT satisfied"
        print(
            f"  small-gain condition {state}: lhs {lhs_text}, "
            f"k_p threshold {certificate['kp_threshold']:.6g}, "
            f"Hurwitz {certificate['hurwitz']}"
        )
    return 0


def _parse_values(text: str) -> list[float]:
    tokens = [tok for tok in text.split(",") if tok.strip()]
    try:
        return [float(tok) for tok in tokens]
    except ValueError as exc:
        raise SchemaError(f"--values: not a number in {text!r}") from exc


def _setup_logging() -> None:
    levels = {
        "error": logging.ERROR,
        "warn": logging.WARNING,
        "info": logging.INFO,
        "debug": logging.DEBUG,
    }
    name = os.environ.get("COTRANS_LOG", "warn").strip().lower()
    logging.basicConfig(
        level=levels.get(name, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cotrans",
        description="Cooperative object transport: simulate, sweep, certify.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="integrate a scenario and write outputs")
    run_p.add_argument("scenario", help="scenario file path")
    run_p.add_argument("-o", "--out-dir", default="out", help="output directory (default: out)")
    run_p.add_argument("--dt", type=float, default=None, help="override integration step")
    run_p.add_argument("--t-end", type=float, default=None, help="override duration")
    run_p.add_argument("--seed", type=int, default=None, help="override estimator seed")

    sweep_p = sub.add_parser("sweep", help="run a scenario across parameter values")
    sweep_p.add_argument("scenario", help="scenario file path")
    sweep_p.add_argument("--param", required=True, choices=SWEEP_PARAMETERS)
    sweep_p.add_argument("--values", required=True, help="comma-separated values")
    sweep_p.add_argument("-o", "--out-dir", default="sweep", help="output directory")

    check_p = sub.add_parser("check", help="validate and certify without running")
    check_p.add_argument("scenario", help="scenario file path")
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            report = run_command(
                args.scenario, args.out_dir, dt=args.dt, t_end=args.t_end, seed=args.seed
            )
            return report.exit_code
        if args.command == "sweep":
            # Per-run failures live in sweep.csv; the sweep itself succeeded.
            sweep_command(args.scenario, args.param, _parse_values(args.values), args.out_dir)
            return 0
        if args.command == "check":
            return check_command(args.scenario)
    except (ParseError, SchemaError, HardInvalid) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
