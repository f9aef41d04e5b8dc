"""Velocity-tracking transport controller.

Each cycle allocates nonnegative penetration depths s via the QP, places a
virtual target at center distance contact_distance - s_i along each push
direction, and commands robots toward their targets with a proportional
law feedforward-compensated by the object velocity.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Protocol

import numpy as np
from numpy.typing import NDArray

from .dynamics import BodyGeometry, SystemState
from .geometry import DirectionSet
from .qp import assemble_qp, solve_qp

__all__ = [
    "ControllerGains",
    "ControlOutput",
    "CommandSignal",
    "CircularCommand",
    "ConstantCommand",
    "ZeroCommand",
    "command_signal",
    "virtual_positions",
    "robot_velocity_commands",
    "control_step",
]

logger = logging.getLogger(__name__)


class CommandSignal(Protocol):
    """Velocity command with two derivatives, evaluated pointwise in time."""

    dimension: int

    def evaluate(
        self, t: float
    ) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
        """Return (v_c, dv_c, ddv_c) at time t, each shape (dimension,)."""
        ...


@dataclass(frozen=True)
class CircularCommand:
    """v_c(t) = -amplitude * [cos(w t), sin(w t)], w = 2 pi / period.

    Tracks a circle of radius amplitude * period / (2 pi). Only the first
    two coordinates are driven; higher dimensions stay zero.
    """

    amplitude: float = 1.0
    period: float = 20.0
    dimension: int = 2

    def evaluate(self, t: float):
        w = 2.0 * np.pi / self.period
        c, s = np.cos(w * t), np.sin(w * t)
        v = np.zeros(self.dimension)
        dv = np.zeros(self.dimension)
        ddv = np.zeros(self.dimension)
        v[0], v[1] = -self.amplitude * c, -self.amplitude * s
        dv[0], dv[1] = self.amplitude * w * s, -self.amplitude * w * c
        ddv[0], ddv[1] = self.amplitude * w * w * c, self.amplitude * w * w * s
        return v, dv, ddv


@dataclass(frozen=True, eq=False)
class ConstantCommand:
    """Fixed velocity command; derivatives vanish."""

    value: NDArray[np.float64]

    def __post_init__(self):
        value = np.asarray(self.value, dtype=float)
        if value.ndim != 1:
            raise ValueError("value must be a flat (n,) vector")
        object.__setattr__(self, "value", value)

    @property
    def dimension(self) -> int:
        return self.value.shape[0]

    def evaluate(self, t: float):
        zero = np.zeros_like(self.value)
        return self.value.copy(), zero, zero.copy()


@dataclass(frozen=True)
class ZeroCommand:
    """Hold the object still."""

    dimension: int = 2

    def evaluate(self, t: float):
        zero = np.zeros(self.dimension)
        return zero, zero.copy(), zero.copy()


def command_signal(command: CommandSignal, t: float):
    """Evaluate (v_c, dv_c, ddv_c) at time t."""
    return command.evaluate(float(t))


@dataclass(frozen=True, eq=False)
class ControllerGains:
    """Gain bundle: k_v (velocity loop), k_p (position loop), eps (QP
    regularization), and the push-direction set."""

    k_v: float
    k_p: float
    eps: float
    directions: DirectionSet


@dataclass(frozen=True, eq=False)
class ControlOutput:
    """One controller evaluation.

    qp_residual is || stiffness * L s* - u ||, the gap between allocated
    and requested force; saturated flags any s*_i at or past the contact
    distance, where the virtual target crosses the object center.
    """

    robot_velocities: NDArray[np.float64]
    p_star: NDArray[np.float64]
    s_star: NDArray[np.float64]
    qp_residual: float
    v_c: NDArray[np.float64]
    cmd_accel: NDArray[np.float64]
    saturated: bool


def virtual_positions(
    gains: ControllerGains,
    geom: BodyGeometry,
    p_o: NDArray[np.float64],
    v_o: NDArray[np.float64],
    v_c: NDArray[np.float64],
    cmd_accel: NDArray[np.float64],
) -> tuple[NDArray[np.float64], NDArray[np.float64], float]:
    """Allocate penetrations and place virtual targets.

    Returns (p_star, s_star, qp_residual) with p_star_i = p_o +
    l_i * (contact_distance - s*_i) exactly.
    """
    p_o = np.asarray(p_o, dtype=float)
    v_o = np.asarray(v_o, dtype=float)
    vel_error = v_o - np.asarray(v_c, dtype=float)
    cmd_accel = np.asarray(cmd_accel, dtype=float)

    problem = assemble_qp(
        gains.directions, geom.stiffness, gains.eps, gains.k_v, vel_error, cmd_accel
    )
    solution = solve_qp(problem)
    s_star = solution.s_star

    reach = geom.contact_distance - s_star
    p_star = p_o[np.newaxis, :] + gains.directions.vectors * reach[:, np.newaxis]

    u = gains.k_v * vel_error - cmd_accel
    allocated = geom.stiffness * (gains.directions.matrix @ s_star)
    qp_residual = float(np.linalg.norm(allocated - u))

    if np.any(s_star >= geom.contact_distance):
        worst = int(np.argmax(s_star))
        logger.warning(
            "allocation saturated: s*[%d] = %.4f exceeds contact distance %.4f",
            worst,
            float(s_star[worst]),
            geom.contact_distance,
        )
    return p_star, s_star, qp_residual


def robot_velocity_commands(
    gains: ControllerGains, state: SystemState, p_star: NDArray[np.float64]
) -> NDArray[np.float64]:
    """v_i = -k_p (p_i - p*_i) + v_o for every robot."""
    return -gains.k_p * (state.p - p_star) + state.v_o[np.newaxis, :]


def control_step(
    gains: ControllerGains,
    geom: BodyGeometry,
    command: CommandSignal,
    state: SystemState,
    t: float,
) -> ControlOutput:
    """Full controller evaluation at time t for the given plant state.

    The allocation feedforward uses dv_c, the commanded acceleration; the
    second derivative exists on the signal for the analysis bounds only.
    """
    v_c, dv_c, _ddv_c = command_signal(command, t)
    p_star, s_star, qp_residual = virtual_positions(
        gains, geom, state.p_o, state.v_o, v_c, dv_c
    )
    velocities = robot_velocity_commands(gains, state, p_star)
    return ControlOutput(
        robot_velocities=velocities,
        p_star=p_star,
        s_star=s_star,
        qp_residual=qp_residual,
        v_c=v_c,
        cmd_accel=dv_c,
        saturated=bool(np.any(s_star >= geom.contact_distance)),
    )
