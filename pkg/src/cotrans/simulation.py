"""Closed-loop integration: scenario validation, fixed-step RK4 run, metrics.

The loop is a strict recurrence: log the controller output at the step
start, then advance the coupled state one dt with classic RK4, re-evaluating
the whole feedback path (command sample, allocation QP, robot velocity law,
contact forces) at every substage. Runs are deterministic; the log
preallocates one row per step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import NDArray

from . import _kernels
from .controller import CommandSignal, ControllerGains, command_signal, control_step
from .dynamics import BodyGeometry, CenterCoincidence, SystemState, per_robot_forces
from .geometry import (
    UNIT_NORM_TOL,
    is_nwise_independent,
    is_positively_spanning,
)
from .qp import MaxIterations, NotPositiveDefinite, assemble_qp

__all__ = [
    "ScenarioConfig",
    "ValidationReport",
    "TrajectoryLog",
    "MetricsSummary",
    "HardInvalid",
    "validate_scenario",
    "step",
    "run",
    "metrics",
    "fit_circle",
]

logger = logging.getLogger(__name__)


class HardInvalid(Exception):
    """Scenario violates a structural requirement; running it is meaningless."""


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """Everything a run needs. Plain container; validate_scenario judges it."""

    n: int
    N: int
    geom: BodyGeometry
    gains: ControllerGains
    command: CommandSignal
    initial_state: SystemState
    dt: float = 1e-3
    t_end: float = 60.0
    seed: int = 0
    label: str = ""

    def with_overrides(self, **kwargs) -> "ScenarioConfig":
        return replace(self, **kwargs)


@dataclass(frozen=True, eq=False)
class ValidationReport:
    """Advisory findings plus the measured initial conditions.

    deviations[i] = |p_i(0) - p_o(0) - l_i * contact_distance|, the gap to
    robot i's zero-penetration touch point; initial_speed = |v_o(0)|. There
    is no universally safe cutoff for either, so they are reported, not
    judged.
    """

    warnings: list[str]
    deviations: NDArray[np.float64]
    initial_speed: float

    @property
    def ok(self) -> bool:
        return not self.warnings


def validate_scenario(cfg: ScenarioConfig) -> ValidationReport:
    """Check structure (raising HardInvalid) and report advisory findings.

    Hard failures: inconsistent dimensions, n outside {2, 3}, nonpositive
    gains / radii / stiffness / eps, non-unit push directions, dt or t_end
    out of range, and initial center separations at or below the
    coincidence guard. Positive spanning and n-wise independence are
    warnings: a scenario may legitimately study their absence.
    """
    geom, gains, state = cfg.geom, cfg.gains, cfg.initial_state
    dirs = gains.directions

    if cfg.n not in (2, 3):
        raise HardInvalid(f"n must be 2 or 3, got {cfg.n}")
    if state.dimension != cfg.n or dirs.dimension != cfg.n:
        raise HardInvalid(
            f"dimension mismatch: n={cfg.n}, state n={state.dimension}, "
            f"directions n={dirs.dimension}"
        )
    if getattr(cfg.command, "dimension", cfg.n) != cfg.n:
        raise HardInvalid(f"command dimension {cfg.command.dimension} != n={cfg.n}")
    if cfg.N != state.robot_count or cfg.N != dirs.count:
        raise HardInvalid(
            f"robot count mismatch: N={cfg.N}, state N={state.robot_count}, "
            f"directions N={dirs.count}"
        )
    if cfg.dt <= 0.0:
        raise HardInvalid(f"dt must be positive, got {cfg.dt}")
    if cfg.t_end < cfg.dt:
        raise HardInvalid(f"t_end must be >= dt, got t_end={cfg.t_end}, dt={cfg.dt}")
    for name, value in (
        ("k_v", gains.k_v),
        ("k_p", gains.k_p),
        ("eps", gains.eps),
        ("robot_radius", geom.robot_radius),
        ("object_radius", geom.object_radius),
        ("stiffness", geom.stiffness),
    ):
        if value <= 0.0:
            raise HardInvalid(f"{name} must be positive, got {value}")
    if dirs.unit_norm_deviation() > UNIT_NORM_TOL:
        raise HardInvalid(
            f"push directions must be unit norm within {UNIT_NORM_TOL}, "
            f"worst deviation {dirs.unit_norm_deviation():.3e}"
        )
    separations = np.linalg.norm(state.p - state.p_o[np.newaxis, :], axis=1)
    if np.any(separations <= 1e-9):
        bad = int(np.argmin(separations))
        raise HardInvalid(
            f"robot {bad} starts at separation {separations[bad]:.3e} from the object center"
        )

    warnings: list[str] = []
    if not is_positively_spanning(dirs):
        warnings.append(
            "push directions do not positively span the workspace; "
            "some commands cannot be realized"
        )
    if not is_nwise_independent(dirs):
        warnings.append("push directions are not n-wise independent")

    touch = state.p_o[np.newaxis, :] + dirs.vectors * geom.contact_distance
    deviations = np.linalg.norm(state.p - touch, axis=1)
    return ValidationReport(
        warnings=warnings,
        deviations=deviations,
        initial_speed=float(np.linalg.norm(state.v_o)),
    )


@dataclass(eq=False)
class TrajectoryLog:
    """Per-step time series, one row per controller evaluation.

    All arrays share leading length T. On early termination the arrays are
    truncated to the completed rows and `termination` carries the reason.
    """

    times: NDArray[np.float64]
    p_o: NDArray[np.float64]
    v_o: NDArray[np.float64]
    p: NDArray[np.float64]
    s_star: NDArray[np.float64]
    p_star: NDArray[np.float64]
    robot_velocities: NDArray[np.float64]
    v_c: NDArray[np.float64]
    vel_error_norm: NDArray[np.float64]
    pos_error_norm_max: NDArray[np.float64]
    qp_residual: NDArray[np.float64]
    u_norm: NDArray[np.float64]
    contact_forces: NDArray[np.float64]
    saturation_flags: NDArray[np.bool_]
    command_period: float | None = None
    termination: str | None = None

    def __len__(self) -> int:
        return self.times.shape[0]

    def state_at(self, index: int) -> SystemState:
        return SystemState(
            p_o=self.p_o[index].copy(),
            v_o=self.v_o[index].copy(),
            p=self.p[index].copy(),
        )


def _quadratic_term(cfg: ScenarioConfig) -> NDArray[np.float64]:
    # Constant across a run; same bits as every control_step solve.
    zero = np.zeros(cfg.n)
    return assemble_qp(
        cfg.gains.directions, cfg.geom.stiffness, cfg.gains.eps,
        cfg.gains.k_v, zero, zero,
    ).R


def _stage_commands(
    cfg: ScenarioConfig, t: float
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    # Command samples at t, t + dt/2, t + dt for the RK4 substages.
    vc3 = np.empty((3, cfg.n))
    dvc3 = np.empty((3, cfg.n))
    for j, tau in enumerate((t, t + 0.5 * cfg.dt, t + cfg.dt)):
        v_c, dv_c, _ = command_signal(cfg.command, tau)
        vc3[j] = v_c
        dvc3[j] = dv_c
    return vc3, dvc3


def _advance(
    cfg: ScenarioConfig, R: NDArray[np.float64], state: SystemState, t: float
) -> SystemState:
    vc3, dvc3 = _stage_commands(cfg, t)
    p_o, v_o, p, status, bad = _kernels.closed_loop_rk4_step(
        state.p_o,
        state.v_o,
        state.p,
        R,
        cfg.gains.directions.vectors,
        cfg.geom.stiffness,
        cfg.geom.contact_distance,
        cfg.gains.k_v,
        cfg.gains.k_p,
        vc3,
        dvc3,
        cfg.dt,
        100 * cfg.N,
    )
    if status == _kernels.STEP_CENTER_COINCIDENCE:
        raise CenterCoincidence(
            f"robot {bad} center coincided with the object during step at t={t:.6f}",
            robot_index=bad,
        )
    if status == _kernels.STEP_QP_NOT_POSITIVE_DEFINITE:
        raise NotPositiveDefinite(f"QP lost positive definiteness during step at t={t:.6f}")
    if status == _kernels.STEP_QP_MAX_ITERATIONS:
        raise MaxIterations(f"QP failed to converge during step at t={t:.6f}")
    return SystemState(p_o=p_o, v_o=v_o, p=p)


def step(cfg: ScenarioConfig, state: SystemState, t: float) -> SystemState:
    """Advance one dt with classic RK4 on the coupled closed loop.

    The feedback path (command sample, allocation QP, virtual positions,
    robot velocity law) and the contact forces are re-evaluated at each of
    the four substages, so the recurrence integrates the continuous-time
    loop rather than holding the step-start control."""
    return _advance(cfg, _quadratic_term(cfg), state, t)


def _step_count(dt: float, t_end: float) -> int:
    # floor with a small guard so t_end = k*dt lands on exactly k intervals
    return int(np.floor(t_end / dt + 1e-9)) + 1


def run(cfg: ScenarioConfig) -> TrajectoryLog:
    """Integrate from t = 0 to t_end, logging every step.

    CenterCoincidence ends the run early with the log truncated to the
    rows already completed and the diagnostic recorded on the log.
    """
    validate_scenario(cfg)

    total = _step_count(cfg.dt, cfg.t_end)
    n, count = cfg.n, cfg.N
    times = np.arange(total) * cfg.dt

    p_o = np.empty((total, n))
    v_o = np.empty((total, n))
    p = np.empty((total, count, n))
    s_star = np.empty((total, count))
    p_star = np.empty((total, count, n))
    robot_velocities = np.empty((total, count, n))
    v_c = np.empty((total, n))
    vel_error_norm = np.empty(total)
    pos_error_norm_max = np.empty(total)
    qp_residual = np.empty(total)
    u_norm = np.empty(total)
    contact_forces = np.empty((total, count, n))
    saturation_flags = np.zeros(total, dtype=bool)

    state = cfg.initial_state
    R = _quadratic_term(cfg)
    termination = None
    rows = 0
    for k in range(total):
        t = float(times[k])
        try:
            out = control_step(cfg.gains, cfg.geom, cfg.command, state, t)
            forces = per_robot_forces(cfg.geom, state)
        except CenterCoincidence as exc:
            termination = f"center coincidence (robot {exc.robot_index}) at t={t:.6f}"
            break

        p_o[k] = state.p_o
        v_o[k] = state.v_o
        p[k] = state.p
        s_star[k] = out.s_star
        p_star[k] = out.p_star
        robot_velocities[k] = out.robot_velocities
        v_c[k] = out.v_c
        vel_error = state.v_o - out.v_c
        vel_error_norm[k] = np.linalg.norm(vel_error)
        pos_error_norm_max[k] = np.max(np.linalg.norm(state.p - out.p_star, axis=1))
        qp_residual[k] = out.qp_residual
        u_norm[k] = np.linalg.norm(cfg.gains.k_v * vel_error - out.cmd_accel)
        contact_forces[k] = forces
        saturation_flags[k] = out.saturated
        rows = k + 1

        if k == total - 1:
            break
        try:
            state = _advance(cfg, R, state, t)
        except CenterCoincidence as exc:
            termination = f"center coincidence (robot {exc.robot_index}) during step at t={t:.6f}"
            break

    if termination is not None:
        logger.error("run terminated early: %s", termination)

    sl = slice(0, rows)
    return TrajectoryLog(
        times=times[sl].copy(),
        p_o=p_o[sl].copy(),
        v_o=v_o[sl].copy(),
        p=p[sl].copy(),
        s_star=s_star[sl].copy(),
        p_star=p_star[sl].copy(),
        robot_velocities=robot_velocities[sl].copy(),
        v_c=v_c[sl].copy(),
        vel_error_norm=vel_error_norm[sl].copy(),
        pos_error_norm_max=pos_error_norm_max[sl].copy(),
        qp_residual=qp_residual[sl].copy(),
        u_norm=u_norm[sl].copy(),
        contact_forces=contact_forces[sl].copy(),
        saturation_flags=saturation_flags[sl].copy(),
        command_period=getattr(cfg.command, "period", None),
        termination=termination,
    )


@dataclass(frozen=True, eq=False)
class MetricsSummary:
    """Aggregates of a log. Tail statistics cover the last quarter of the
    horizon; the circle fit covers the final command period (None for
    commands without one or logs too short to fit)."""

    vel_error_max: float
    vel_error_mean: float
    vel_error_tail_mean: float
    pos_error_max: float
    pos_error_mean: float
    pos_error_tail_mean: float
    saturation_count: int
    circle_center: NDArray[np.float64] | None = None
    circle_radius: float | None = None
    circle_rms: float | None = None


def fit_circle(points: NDArray[np.float64]) -> tuple[NDArray[np.float64], float, float]:
    """Least-squares circle through planar points: (center, radius, rms).

    Algebraic fit: |q|^2 = 2 c.q + (R^2 - |c|^2) is linear in the unknowns.
    Degenerate clouds (near-zero spread) raise ValueError.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError(f"need (M, 2) points, got {points.shape}")
    if points.shape[0] < 3:
        raise ValueError("need at least 3 points")
    spread = np.max(points, axis=0) - np.min(points, axis=0)
    if float(np.max(spread)) < 1e-9:
        raise ValueError("points are coincident; no circle is defined")

    design = np.column_stack((2.0 * points, np.ones(points.shape[0])))
    rhs = np.sum(points * points, axis=1)
    coef, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    center = coef[:2]
    radius = float(np.sqrt(max(coef[2] + center @ center, 0.0)))
    dists = np.linalg.norm(points - center[np.newaxis, :], axis=1)
    rms = float(np.sqrt(np.mean((dists - radius) ** 2)))
    return center, radius, rms


def metrics(log: TrajectoryLog) -> MetricsSummary:
    """Summarize a non-empty log; see MetricsSummary for window definitions."""
    if len(log) == 0:
        raise ValueError("empty log")

    tail_start = log.times[-1] - 0.25 * (log.times[-1] - log.times[0])
    tail = log.times >= tail_start

    center = radius = rms = None
    if log.command_period is not None and log.p_o.shape[1] == 2:
        window = log.times >= log.times[-1] - log.command_period
        if int(np.sum(window)) >= 3:
            try:
                fitted = fit_circle(log.p_o[window])
            except ValueError:
                fitted = None
            if fitted is not None:
                center, radius, rms = fitted

    return MetricsSummary(
        vel_error_max=float(np.max(log.vel_error_norm)),
        vel_error_mean=float(np.mean(log.vel_error_norm)),
        vel_error_tail_mean=float(np.mean(log.vel_error_norm[tail])),
        pos_error_max=float(np.max(log.pos_error_norm_max)),
        pos_error_mean=float(np.mean(log.pos_error_norm_max)),
        pos_error_tail_mean=float(np.mean(log.pos_error_norm_max[tail])),
        saturation_count=int(np.sum(log.saturation_flags)),
        circle_center=center,
        circle_radius=radius,
        circle_rms=rms,
    )
