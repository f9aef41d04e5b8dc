"""Penalty contact between spherical robots and a spherical unit-mass object.

A robot overlapping the object pushes it along the center line with force
proportional to the penetration depth; separated bodies exert exactly zero
force. Robots are velocity-controlled, so only the object carries dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "BodyGeometry",
    "SystemState",
    "CenterCoincidence",
    "contact_force",
    "per_robot_forces",
    "net_force",
    "state_derivative",
    "estimate_force_lipschitz",
]

COINCIDENCE_TOL = 1e-9


class CenterCoincidence(Exception):
    """Robot and object centers closer than COINCIDENCE_TOL; the contact
    direction is undefined there."""

    def __init__(self, message: str, robot_index: int = -1):
        super().__init__(message)
        self.robot_index = robot_index


@dataclass(frozen=True)
class BodyGeometry:
    """Radii and penalty stiffness. All three must be positive (enforced by
    the scenario validator; this is a plain container)."""

    robot_radius: float
    object_radius: float
    stiffness: float

    @property
    def contact_distance(self) -> float:
        """Center separation at which contact begins."""
        return self.robot_radius + self.object_radius


@dataclass(frozen=True, eq=False)
class SystemState:
    """Object pose and robot positions: p_o, v_o shape (n,), p shape (N, n)."""

    p_o: NDArray[np.float64]
    v_o: NDArray[np.float64]
    p: NDArray[np.float64]

    def __post_init__(self):
        p_o = np.asarray(self.p_o, dtype=float)
        v_o = np.asarray(self.v_o, dtype=float)
        p = np.atleast_2d(np.asarray(self.p, dtype=float))
        if p_o.ndim != 1 or v_o.shape != p_o.shape:
            raise ValueError("p_o and v_o must be matching (n,) vectors")
        if p.ndim != 2 or p.shape[1] != p_o.shape[0]:
            raise ValueError(f"p must have shape (N, {p_o.shape[0]}), got {p.shape}")
        object.__setattr__(self, "p_o", p_o)
        object.__setattr__(self, "v_o", v_o)
        object.__setattr__(self, "p", p)

    @property
    def robot_count(self) -> int:
        return self.p.shape[0]

    @property
    def dimension(self) -> int:
        return self.p_o.shape[0]


def contact_force(geom: BodyGeometry, rel: NDArray[np.float64]) -> NDArray[np.float64]:
    """Force on the object from one robot at center offset rel = p_i - p_o.

    Magnitude stiffness * max(contact_distance - |rel|, 0), directed from
    robot toward object (along -rel). Exactly zero outside contact.
    """
    rel = np.asarray(rel, dtype=float)
    dist = float(np.linalg.norm(rel))
    if dist <= COINCIDENCE_TOL:
        raise CenterCoincidence(f"center separation {dist:.3e} below {COINCIDENCE_TOL}")
    pen = geom.contact_distance - dist
    if pen <= 0.0:
        return np.zeros_like(rel)
    return (-geom.stiffness * pen / dist) * rel


def per_robot_forces(geom: BodyGeometry, state: SystemState) -> NDArray[np.float64]:
    """(N, n) array of each robot's contact force on the object."""
    rel = state.p - state.p_o[np.newaxis, :]
    dist = np.linalg.norm(rel, axis=1)
    if np.any(dist <= COINCIDENCE_TOL):
        bad = int(np.argmin(dist))
        raise CenterCoincidence(
            f"robot {bad} center separation {dist[bad]:.3e} below {COINCIDENCE_TOL}",
            robot_index=bad,
        )
    pen = np.maximum(geom.contact_distance - dist, 0.0)
    coef = -geom.stiffness * pen / dist
    return coef[:, np.newaxis] * rel


def net_force(geom: BodyGeometry, state: SystemState) -> NDArray[np.float64]:
    """Total contact force on the object (unit mass, so also acceleration)."""
    return per_robot_forces(geom, state).sum(axis=0)


def state_derivative(
    geom: BodyGeometry, state: SystemState, robot_velocities: NDArray[np.float64]
) -> SystemState:
    """Time derivative packaged as a state: (v_o, net force, robot velocities)."""
    robot_velocities = np.asarray(robot_velocities, dtype=float)
    if robot_velocities.shape != state.p.shape:
        raise ValueError("robot_velocities must match state.p in shape")
    return SystemState(
        p_o=state.v_o.copy(),
        v_o=net_force(geom, state),
        p=robot_velocities.copy(),
    )


def estimate_force_lipschitz(
    geom: BodyGeometry,
    robot_count: int,
    separation_floor: float,
    samples: int = 10_000,
    seed: int = 0,
    dimension: int = 2,
    max_radius: float | None = None,
) -> float:
    """Sampled Lipschitz bound of robot offsets -> net force.

    Offsets rel_i are drawn with uniform direction and center distance
    uniform in [separation_floor, max_radius] (default 1.5 x contact
    distance). The ratio uses the sum of per-robot offset changes in the
    denominator, so a single robot bounds each robot's contribution.
    Deterministic for a fixed seed.
    """
    if separation_floor <= COINCIDENCE_TOL:
        raise ValueError("separation_floor must exceed the coincidence guard")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if max_radius is None:
        max_radius = 1.5 * geom.contact_distance
    if max_radius < separation_floor:
        raise ValueError("max_radius must be >= separation_floor")

    rng = np.random.default_rng(seed)

    def draw() -> NDArray[np.float64]:
        raw = rng.normal(size=(robot_count, dimension))
        raw /= np.linalg.norm(raw, axis=1)[:, np.newaxis]
        radii = rng.uniform(separation_floor, max_radius, robot_count)
        return radii[:, np.newaxis] * raw

    def total(rel: NDArray[np.float64]) -> NDArray[np.float64]:
        dist = np.linalg.norm(rel, axis=1)
        pen = np.maximum(geom.contact_distance - dist, 0.0)
        coef = -geom.stiffness * pen / dist
        return coef @ rel

    best = 0.0
    for _ in range(samples):
        rel_a = draw()
        rel_b = draw()
        gap = float(np.sum(np.linalg.norm(rel_a - rel_b, axis=1)))
        if gap < 1e-12:
            continue
        ratio = float(np.linalg.norm(total(rel_a) - total(rel_b))) / gap
        if ratio > best:
            best = ratio
    return best
