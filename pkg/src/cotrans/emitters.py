"""Run outputs: CSV series, SVG figures, and the JSON run report.

All numbers are written with repr(), the shortest decimal that round-trips
to the same float, so re-parsing a CSV recovers the series bit-exactly and
identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .dynamics import BodyGeometry
from .simulation import MetricsSummary, TrajectoryLog

__all__ = [
    "write_trajectory_csv",
    "write_errors_csv",
    "write_velocities_csv",
    "read_csv_columns",
    "plot_trajectory_svg",
    "plot_curves_svg",
    "metrics_dict",
    "certificate_dict",
    "write_report_json",
]

_AXES = ("x", "y", "z")


def _fmt(value: float) -> str:
    return repr(float(value))


def _axis_names(prefix: str, n: int) -> list[str]:
    return [f"{prefix}_{_AXES[c]}" for c in range(n)]


def write_trajectory_csv(log: TrajectoryLog, path) -> None:
    """One row per step: t, object pose, then per-robot position, target,
    allocated penetration, and contact force."""
    n = log.p_o.shape[1]
    count = log.p.shape[1]
    header = ["t"] + _axis_names("p_o", n) + _axis_names("v_o", n)
    for i in range(1, count + 1):
        header += _axis_names(f"p_{i}", n)
        header += _axis_names(f"p_star_{i}", n)
        header.append(f"s_star_{i}")
        header += _axis_names(f"force_{i}", n)

    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for k in range(len(log)):
            row = [_fmt(log.times[k])]
            row += [_fmt(v) for v in log.p_o[k]]
            row += [_fmt(v) for v in log.v_o[k]]
            for i in range(count):
                row += [_fmt(v) for v in log.p[k, i]]
                row += [_fmt(v) for v in log.p_star[k, i]]
                row.append(_fmt(log.s_star[k, i]))
                row += [_fmt(v) for v in log.contact_forces[k, i]]
            writer.writerow(row)


def write_errors_csv(log: TrajectoryLog, path) -> None:
    """Tracking error series: t, vel_error_norm, pos_error_norm_max,
    qp_residual, saturated (0/1)."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", "vel_error_norm", "pos_error_norm_max", "qp_residual", "saturated"])
        for k in range(len(log)):
            writer.writerow(
                [
                    _fmt(log.times[k]),
                    _fmt(log.vel_error_norm[k]),
                    _fmt(log.pos_error_norm_max[k]),
                    _fmt(log.qp_residual[k]),
                    str(int(log.saturation_flags[k])),
                ]
            )


def write_velocities_csv(log: TrajectoryLog, path) -> None:
    """Velocity series: t, command, object, then per-robot commanded velocity."""
    n = log.p_o.shape[1]
    count = log.p.shape[1]
    header = ["t"] + _axis_names("v_c", n) + _axis_names("v_o", n)
    for i in range(1, count + 1):
        header += _axis_names(f"v_{i}", n)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for k in range(len(log)):
            row = [_fmt(log.times[k])]
            row += [_fmt(v) for v in log.v_c[k]]
            row += [_fmt(v) for v in log.v_o[k]]
            for i in range(count):
                row += [_fmt(v) for v in log.robot_velocities[k, i]]
            writer.writerow(row)


def read_csv_columns(path) -> dict[str, np.ndarray]:
    """Read an emitted CSV back into {column: float array}."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        rows = [[float(cell) for cell in row] for row in reader]
    data = np.array(rows) if rows else np.empty((0, len(header)))
    return {name: data[:, j] for j, name in enumerate(header)}


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "cotrans"
    return plt


_SVG_METADATA = {"Date": None, "Creator": "cotrans"}


def plot_trajectory_svg(log: TrajectoryLog, geom: BodyGeometry, path, snapshots: int = 5) -> None:
    """Workspace view: object and robot paths plus body outlines at a few
    sampled instants. Planar logs only; higher dimensions plot x-y."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 6.4))

    ax.plot(log.p_o[:, 0], log.p_o[:, 1], color="tab:blue", lw=1.6, label="object")
    count = log.p.shape[1]
    for i in range(count):
        ax.plot(
            log.p[:, i, 0],
            log.p[:, i, 1],
            lw=0.8,
            alpha=0.8,
            label=f"robot {i + 1}" if i < 4 else None,
        )

    marks = np.unique(np.linspace(0, len(log) - 1, max(snapshots, 2)).astype(int))
    for k in marks:
        ax.add_patch(
            plt.Circle(log.p_o[k, :2], geom.object_radius, fill=False, color="tab:blue", lw=0.9)
        )
        for i in range(count):
            ax.add_patch(
                plt.Circle(log.p[k, i, :2], geom.robot_radius, fill=False, color="0.4", lw=0.6)
            )

    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)


def plot_curves_svg(log: TrajectoryLog, path) -> None:
    """Stacked time series: tracking errors, object vs command velocity,
    and per-robot commanded velocities."""
    plt = _pyplot()
    n = log.p_o.shape[1]
    count = log.p.shape[1]
    fig, axes = plt.subplots(3, 1, figsize=(7.2, 8.4), sharex=True)

    axes[0].plot(log.times, log.pos_error_norm_max, label=r"$\max_i |p_i - p_i^*|$", lw=1.1)
    axes[0].plot(log.times, log.vel_error_norm, label=r"$|v_o - v_c|$", lw=1.1)
    axes[0].set_ylabel("tracking errors")
    axes[0].legend(fontsize=8)

    for c in range(n):
        axes[1].plot(log.times, log.v_o[:, c], lw=1.1, label=f"v_o {_AXES[c]}")
        axes[1].plot(log.times, log.v_c[:, c], lw=0.9, ls="--", label=f"v_c {_AXES[c]}")
    axes[1].set_ylabel("object velocity")
    axes[1].legend(fontsize=8, ncol=2)

    for i in range(count):
        for c in range(n):
            axes[2].plot(log.times, log.robot_velocities[:, i, c], lw=0.7)
    axes[2].set_ylabel("robot velocities")
    axes[2].set_xlabel("t [s]")

    for ax in axes:
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)


def metrics_dict(summary: MetricsSummary) -> dict:
    return {
        "vel_error_max": summary.vel_error_max,
        "vel_error_mean": summary.vel_error_mean,
        "vel_error_tail_mean": summary.vel_error_tail_mean,
        "pos_error_max": summary.pos_error_max,
        "pos_error_mean": summary.pos_error_mean,
        "pos_error_tail_mean": summary.pos_error_tail_mean,
        "saturation_count": summary.saturation_count,
        "circle_center": None if summary.circle_center is None else summary.circle_center.tolist(),
        "circle_radius": summary.circle_radius,
        "circle_rms": summary.circle_rms,
    }


def certificate_dict(cert) -> dict:
    lhs = cert.small_gain_lhs
    return {
        "A": cert.A.tolist(),
        "eigenvalues": [[float(e.real), float(e.imag)] for e in cert.eigenvalues],
        "hurwitz": cert.hurwitz,
        # JSON has no infinity; None marks an infeasible interconnection
        "small_gain_lhs": lhs if np.isfinite(lhs) else None,
        "small_gain_ok": cert.small_gain_ok,
        "kp_threshold": cert.kp_threshold,
        "basis": "empirical estimates; evidence, not a proof",
    }


def write_report_json(report: dict, path) -> None:
    with open(path, "w") as handle:
        json.dump(report, handle, indent=2, sort_keys=True, allow_nan=False)
        handle.write("\n")
