"""Strictly convex QP over the nonnegative orthant.

The force-allocation problem is

    minimize   0.5 * s' R s + r' s    subject to  s >= 0,

with R symmetric positive definite, so the minimizer is unique. solve_qp
runs a primal active-set method (hot kernel, numba or numpy backend);
solve_qp_oracle enumerates all active sets and is the slow reference the
solver is tested against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from . import _kernels
from .geometry import DirectionSet

__all__ = [
    "QpProblem",
    "QpSolution",
    "NotPositiveDefinite",
    "MaxIterations",
    "NoKktPoint",
    "Ambiguous",
    "assemble_qp",
    "solve_qp",
    "solve_qp_oracle",
    "kkt_residuals",
    "estimate_solution_lipschitz",
]

KKT_TOL = 1e-8
CLAMP_TOL = 1e-12


class NotPositiveDefinite(Exception):
    """Hessian failed the positive-definiteness check."""


class MaxIterations(Exception):
    """Active-set iteration limit exhausted without a KKT point."""


class NoKktPoint(Exception):
    """Oracle enumeration found no candidate satisfying the KKT system."""


class Ambiguous(Exception):
    """Oracle enumeration found distinct KKT candidates (non-convex input?)."""


@dataclass(frozen=True, eq=False)
class QpProblem:
    """Problem data. R must be symmetric (checked) positive definite
    (checked at solve time via Cholesky)."""

    R: NDArray[np.float64]
    r: NDArray[np.float64]

    def __post_init__(self):
        R = np.array(self.R, dtype=float)
        r = np.array(self.r, dtype=float)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ValueError(f"R must be square, got shape {R.shape}")
        if r.shape != (R.shape[0],):
            raise ValueError(f"r shape {r.shape} does not match R {R.shape}")
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(r))):
            raise ValueError("problem data must be finite")
        if R.size and np.max(np.abs(R - R.T)) > 1e-12:
            raise ValueError("R must be symmetric within 1e-12")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "r", r)

    @property
    def size(self) -> int:
        return self.r.shape[0]


@dataclass(frozen=True, eq=False)
class QpSolution:
    """Minimizer plus its KKT certificate.

    multipliers holds mu = R s* + r on the active set (zero elsewhere);
    active_set is the indices pinned at zero.
    """

    s_star: NDArray[np.float64]
    multipliers: NDArray[np.float64]
    active_set: frozenset[int]
    objective_value: float
    iterations: int


def _finish(problem: QpProblem, s, mult, iterations) -> QpSolution:
    s = np.asarray(s, dtype=float).copy()
    # Arithmetic can land a hair below zero; clamp within CLAMP_TOL only.
    tiny = (s < 0.0) & (s >= -CLAMP_TOL)
    s[tiny] = 0.0
    active = frozenset(int(i) for i in np.where(s == 0.0)[0])
    objective = float(0.5 * s @ problem.R @ s + problem.r @ s)
    return QpSolution(
        s_star=s,
        multipliers=np.asarray(mult, dtype=float).copy(),
        active_set=active,
        objective_value=objective,
        iterations=int(iterations),
    )


def solve_qp(problem: QpProblem, max_iter: int | None = None) -> QpSolution:
    """Solve the QP with the active-set kernel.

    Starts from s = 0 with every constraint active, alternating free-set
    Newton targets with constraint releases chosen by most-negative
    multiplier. Terminates at the unique KKT point.

    Raises NotPositiveDefinite if R fails Cholesky, MaxIterations if the
    iteration cap (default 100 * size) is hit.
    """
    if max_iter is None:
        max_iter = 100 * problem.size
    s, mult, _active, iters, status = _kernels.qp_active_set(
        problem.R, problem.r, max_iter
    )
    if status == _kernels.QP_NOT_POSITIVE_DEFINITE:
        raise NotPositiveDefinite("R is not positive definite")
    if status == _kernels.QP_MAX_ITERATIONS:
        raise MaxIterations(f"no KKT point within {max_iter} iterations")
    return _finish(problem, s, mult, iters)


def solve_qp_oracle(problem: QpProblem) -> QpSolution:
    """Reference solver: try every active set, keep the KKT-consistent one.

    For each of the 2^N subsets A, solve the equality-constrained problem
    with s_A = 0, then screen primal feasibility (s >= -1e-9) and dual
    feasibility (mu_A >= -1e-9). Candidates agreeing within 1e-8 are the
    same point; anything else raises Ambiguous, and an empty candidate
    list raises NoKktPoint. Exponential in N, test use only.
    """
    R, r = problem.R, problem.r
    size = problem.size
    candidates: list[tuple[np.ndarray, np.ndarray, int]] = []
    for mask in range(2 ** size):
        active = np.array([(mask >> i) & 1 == 1 for i in range(size)])
        free = ~active
        s = np.zeros(size)
        if np.any(free):
            try:
                s[free] = np.linalg.solve(R[np.ix_(free, free)], -r[free])
            except np.linalg.LinAlgError:
                continue
        if np.min(s) < -1e-9:
            continue
        mu = R @ s + r
        if np.any(mu[active] < -1e-9):
            continue
        # Stationarity on the free set should be solver-exact; screen anyway.
        if np.any(free) and np.max(np.abs(mu[free])) > KKT_TOL:
            continue
        candidates.append((s, np.where(active, mu, 0.0), mask))

    if not candidates:
        raise NoKktPoint("no active set produced a KKT-consistent point")

    base = candidates[0][0]
    for s, _mu, _mask in candidates[1:]:
        if np.max(np.abs(s - base)) > 1e-8:
            raise Ambiguous("distinct KKT candidates found")

    # Same minimizer under several labelings; prefer the largest active set
    # so boundary-with-zero-multiplier components count as active.
    s, mu, _mask = max(candidates, key=lambda c: bin(c[2]).count("1"))
    return _finish(problem, s, mu, iterations=2 ** size)


def kkt_residuals(problem: QpProblem, solution: QpSolution) -> dict[str, float]:
    """Certificate numbers: stationarity, complementarity, worst signs."""
    s = solution.s_star
    mu = solution.multipliers
    return {
        "stationarity": float(np.max(np.abs(problem.R @ s + problem.r - mu))),
        "complementarity": float(np.max(np.abs(mu * s))),
        "primal_min": float(np.min(s)) if s.size else 0.0,
        "dual_min": float(np.min(mu)) if mu.size else 0.0,
    }


def assemble_qp(
    dirs: DirectionSet,
    stiffness: float,
    eps: float,
    k_v: float,
    vel_error: NDArray[np.float64],
    cmd_accel: NDArray[np.float64],
) -> QpProblem:
    """Build the force-allocation QP from the current tracking state.

    With L the (n, N) direction matrix, the allocation seeks s >= 0 making
    stiffness * L s match u = k_v * vel_error - cmd_accel; eps adds strict
    convexity. Expanded:

        R = 2 * eps * I + 2 * stiffness^2 * L' L
        r = 2 * stiffness * L' (-u)
    """
    if stiffness <= 0.0:
        raise ValueError(f"stiffness must be positive, got {stiffness}")
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    if k_v <= 0.0:
        raise ValueError(f"k_v must be positive, got {k_v}")
    vel_error = np.asarray(vel_error, dtype=float)
    cmd_accel = np.asarray(cmd_accel, dtype=float)
    if vel_error.shape != (dirs.dimension,) or cmd_accel.shape != (dirs.dimension,):
        raise ValueError("vel_error and cmd_accel must have shape (n,)")

    L = dirs.matrix
    gram = L.T @ L
    R = 2.0 * eps * np.eye(dirs.count) + 2.0 * stiffness**2 * gram
    R = 0.5 * (R + R.T)
    u = k_v * vel_error - cmd_accel
    r = 2.0 * stiffness * (L.T @ (-u))
    return QpProblem(R=R, r=r)


def estimate_solution_lipschitz(
    dirs: DirectionSet,
    stiffness: float,
    eps: float,
    k_v: float,
    sample_box: float = 2.0,
    samples: int = 10_000,
    seed: int = 0,
) -> float:
    """Sampled Lipschitz bound of (vel_error, cmd_accel) -> s*.

    Draws pairs of inputs uniformly from [-sample_box, sample_box]^(2n),
    solves both QPs, and returns the largest ratio
    ||s*(a) - s*(b)|| / ||a - b||. Deterministic for a fixed seed;
    coincident pairs are skipped.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    dim = dirs.dimension
    best = 0.0
    for _ in range(samples):
        a = rng.uniform(-sample_box, sample_box, 2 * dim)
        b = rng.uniform(-sample_box, sample_box, 2 * dim)
        gap = float(np.linalg.norm(a - b))
        if gap < 1e-12:
            continue
        sol_a = solve_qp(assemble_qp(dirs, stiffness, eps, k_v, a[:dim], a[dim:]))
        sol_b = solve_qp(assemble_qp(dirs, stiffness, eps, k_v, b[:dim], b[dim:]))
        ratio = float(np.linalg.norm(sol_a.s_star - sol_b.s_star)) / gap
        if ratio > best:
            best = ratio
    return best
