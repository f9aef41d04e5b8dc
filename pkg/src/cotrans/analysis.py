"""Gain certification via a two-state comparison system and small-gain test.

The velocity-error and position-error subsystems are interconnected; their
bounding linear comparison matrix is

    A = [ -(1 - delta) k_v,            L_f              ]
        [  N L_phi k_v,      -k_p + N L_phi L_f         ]

with delta the allocation residual ratio and L_f, L_phi Lipschitz bounds of
the contact force and the QP solution map. The loop is certified when the
product of the subsystem gains stays below one. All inputs here are
empirical estimates, so a certificate is evidence, not proof.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .geometry import NoPositiveBasis, positive_combination_basis
from .simulation import ScenarioConfig, TrajectoryLog

__all__ = [
    "GainCertificateInput",
    "GainCertificate",
    "comparison_matrix",
    "check_small_gain",
    "certify_scenario",
    "empirical_delta",
    "sampled_delta_bound",
]


@dataclass(frozen=True)
class GainCertificateInput:
    """Gains plus empirical constants. delta must lie in (0, 1) for the
    certificate to mean anything; L_f and L_phi are nonnegative."""

    k_v: float
    k_p: float
    delta: float
    L_f: float
    L_phi: float
    N: int

    def __post_init__(self):
        if self.k_v <= 0.0 or self.k_p <= 0.0:
            raise ValueError(f"gains must be positive, got k_v={self.k_v}, k_p={self.k_p}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.L_f < 0.0 or self.L_phi < 0.0:
            raise ValueError("Lipschitz estimates must be nonnegative")
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")


@dataclass(frozen=True, eq=False)
class GainCertificate:
    """Outcome of the small-gain test.

    small_gain_lhs is infinity when the interconnection is infeasible
    (k_p <= N L_phi L_f); small_gain_ok requires feasibility and lhs < 1.
    kp_threshold is the stricter k_p bound that additionally forces the
    comparison matrix Hurwitz.
    """

    A: NDArray[np.float64]
    eigenvalues: NDArray[np.complex128]
    hurwitz: bool
    small_gain_lhs: float
    small_gain_ok: bool
    kp_threshold: float


def comparison_matrix(inp: GainCertificateInput) -> NDArray[np.float64]:
    """The 2x2 comparison matrix for the interconnected error system."""
    return np.array(
        [
            [-(1.0 - inp.delta) * inp.k_v, inp.L_f],
            [inp.N * inp.L_phi * inp.k_v, -inp.k_p + inp.N * inp.L_phi * inp.L_f],
        ]
    )


def check_small_gain(inp: GainCertificateInput) -> GainCertificate:
    """Evaluate the small-gain condition and the Hurwitz property.

    The velocity subsystem has gain L_f / ((1-delta) k_v); the position
    subsystem has gain N L_phi k_v / (k_p - N L_phi L_f), defined only when
    k_p exceeds the interconnection term. Certified when the product < 1.
    """
    A = comparison_matrix(inp)
    eigenvalues = np.linalg.eigvals(A)
    hurwitz = bool(np.all(eigenvalues.real < 0.0))

    interconnect = inp.N * inp.L_phi * inp.L_f
    if inp.k_p > interconnect:
        lhs = (inp.L_f / ((1.0 - inp.delta) * inp.k_v)) * (
            inp.N * inp.L_phi * inp.k_v / (inp.k_p - interconnect)
        )
    else:
        lhs = float("inf")

    kp_threshold = (2.0 - inp.delta) / (1.0 - inp.delta) * interconnect
    return GainCertificate(
        A=A,
        eigenvalues=eigenvalues,
        hurwitz=hurwitz,
        small_gain_lhs=float(lhs),
        small_gain_ok=bool(np.isfinite(lhs) and lhs < 1.0),
        kp_threshold=float(kp_threshold),
    )


def certify_scenario(
    cfg: ScenarioConfig, delta_hat: float, L_f_hat: float, L_phi_hat: float
) -> GainCertificate:
    """Certify a scenario's gains against supplied empirical estimates."""
    inp = GainCertificateInput(
        k_v=cfg.gains.k_v,
        k_p=cfg.gains.k_p,
        delta=delta_hat,
        L_f=L_f_hat,
        L_phi=L_phi_hat,
        N=cfg.N,
    )
    return check_small_gain(inp)


def empirical_delta(log: TrajectoryLog, u_floor: float = 1e-6) -> float | None:
    """Largest observed qp_residual / ||u|| over steps with ||u|| > u_floor.

    None when no step clears the floor (e.g., a resting equilibrium run).
    """
    valid = log.u_norm > u_floor
    if not np.any(valid):
        return None
    return float(np.max(log.qp_residual[valid] / log.u_norm[valid]))


def sampled_delta_bound(
    dirs, stiffness: float, eps: float, samples: int = 1024, seed: int = 0
) -> float:
    """A priori residual-ratio bound, maximized over sampled directions.

    For a unit force target u with positive-combination basis M, the
    allocation residual satisfies ||stiffness * L s* - u|| <=
    sqrt(eps) * ||inv(M)|| / stiffness * ||u||. Sampling unit targets and
    maximizing the right side bounds the ratio without running anything.
    Targets outside every positive cone are skipped.
    """
    rng = np.random.default_rng(seed)
    best = 0.0
    scale = float(np.sqrt(eps) / stiffness)
    for _ in range(samples):
        target = rng.normal(size=dirs.dimension)
        norm = float(np.linalg.norm(target))
        if norm < 1e-12:
            continue
        target /= norm
        try:
            idx, _coeffs = positive_combination_basis(dirs, target)
        except NoPositiveBasis:
            continue
        basis = dirs.vectors[idx].T
        bound = scale * float(np.linalg.norm(np.linalg.inv(basis), 2))
        if bound > best:
            best = bound
    return best
