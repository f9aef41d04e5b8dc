"""Push-direction sets: positive spanning tests and positive-combination bases.

A direction set collects the unit vectors l_1..l_N along which robots can
push the object. Force closure of the team reduces to the set positively
spanning R^n; per-target force decompositions come from picking n of the
directions that reproduce the target with nonnegative coefficients.
"""

from __future__ import annotations

import itertools

import numpy as np
from numpy.typing import NDArray

from scipy.optimize import linprog

__all__ = [
    "DirectionSet",
    "NoPositiveBasis",
    "evenly_spaced_directions",
    "is_positively_spanning",
    "is_nwise_independent",
    "positive_combination_basis",
]

UNIT_NORM_TOL = 1e-12
DET_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-9
COEFF_TOL = 1e-12


class NoPositiveBasis(Exception):
    """No n-subset reproduces the target with nonnegative coefficients."""


class DirectionSet:
    """Immutable (N, n) array of push directions, one unit vector per row.

    Parameters
    ----------
    vectors : array_like, shape (N, n)
        Direction rows. Must be finite with n >= 2; unit norm is expected
        by the spanning and basis routines but is checked by the scenario
        validator, not here.
    """

    __slots__ = ("_vectors",)

    def __init__(self, vectors):
        arr = np.array(vectors, dtype=float)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-d (N, n) array, got ndim={arr.ndim}")
        if arr.shape[1] < 2:
            raise ValueError(f"need dimension n >= 2, got n={arr.shape[1]}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("directions must be finite")
        arr.setflags(write=False)
        self._vectors = arr

    @property
    def vectors(self) -> NDArray[np.float64]:
        """(N, n) read-only view, directions as rows."""
        return self._vectors

    @property
    def count(self) -> int:
        return self._vectors.shape[0]

    @property
    def dimension(self) -> int:
        return self._vectors.shape[1]

    @property
    def matrix(self) -> NDArray[np.float64]:
        """(n, N) matrix with directions as columns (the map s -> L s)."""
        return self._vectors.T.copy()

    def unit_norm_deviation(self) -> float:
        """max_i | ||l_i|| - 1 |, for validation against UNIT_NORM_TOL."""
        return float(np.max(np.abs(np.linalg.norm(self._vectors, axis=1) - 1.0)))

    def __repr__(self):
        return f"DirectionSet(count={self.count}, dimension={self.dimension})"


def evenly_spaced_directions(count: int) -> DirectionSet:
    """Planar directions at angles 2*pi*(i-1)/count, i = 1..count."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    angles = 2.0 * np.pi * np.arange(count) / count
    return DirectionSet(np.column_stack((np.cos(angles), np.sin(angles))))


def _normalized_rows(dirs: DirectionSet) -> NDArray[np.float64]:
    rows = dirs.vectors
    norms = np.linalg.norm(rows, axis=1)
    if np.any(norms <= 0.0):
        raise ValueError("zero-length direction")
    return rows / norms[:, np.newaxis]


def is_positively_spanning(dirs: DirectionSet) -> bool:
    """Whether nonnegative combinations of the directions cover all of R^n.

    n = 2 uses the exact angular-gap test: sorted direction angles must
    leave no gap of pi or more. Higher n solves the feasibility program
    "find lambda >= 1 with sum_i lambda_i l_i = 0", which has a solution
    iff the set positively spans (given full rank, checked first).
    """
    rows = _normalized_rows(dirs)
    count, dim = rows.shape
    if count < dim + 1:
        return False
    if np.linalg.matrix_rank(rows, tol=1e-12) < dim:
        return False
    if dim == 2:
        angles = np.sort(np.arctan2(rows[:, 1], rows[:, 0]))
        gaps = np.diff(angles)
        wrap = angles[0] + 2.0 * np.pi - angles[-1]
        return float(max(np.max(gaps), wrap)) < np.pi
    result = linprog(
        c=np.zeros(count),
        A_eq=rows.T,
        b_eq=np.zeros(dim),
        bounds=[(1.0, None)] * count,
        method="highs",
    )
    return bool(result.status == 0)


def is_nwise_independent(dirs: DirectionSet) -> bool:
    """Whether every n of the directions are linearly independent.

    Determinants are taken on normalized vectors so the cutoff DET_TOL
    acts on a scale-free quantity. Vacuously true when N < n.
    """
    rows = _normalized_rows(dirs)
    dim = rows.shape[1]
    for subset in itertools.combinations(range(rows.shape[0]), dim):
        if abs(np.linalg.det(rows[list(subset)].T)) <= DET_TOL:
            return False
    return True


def positive_combination_basis(
    dirs: DirectionSet, target: NDArray[np.float64]
) -> tuple[NDArray[np.intp], NDArray[np.float64]]:
    """First n-subset (lexicographic by index) reproducing the target.

    Returns (indices, coefficients) with ``dirs.vectors[indices].T @
    coefficients == target`` to within RECONSTRUCTION_TOL and all
    coefficients >= -COEFF_TOL.

    Raises
    ------
    ValueError
        If the target is zero.
    NoPositiveBasis
        If no subset qualifies (the set does not positively span, or the
        target sits outside every candidate cone).
    """
    target = np.asarray(target, dtype=float)
    if target.shape != (dirs.dimension,):
        raise ValueError(f"target shape {target.shape} does not match n={dirs.dimension}")
    if np.linalg.norm(target) == 0.0:
        raise ValueError("target must be nonzero")

    dim = dirs.dimension
    rows = dirs.vectors
    for subset in itertools.combinations(range(dirs.count), dim):
        basis = rows[list(subset)].T
        if abs(np.linalg.det(basis)) <= DET_TOL:
            continue
        coeffs = np.linalg.solve(basis, target)
        if np.min(coeffs) < -COEFF_TOL:
            continue
        if np.linalg.norm(basis @ coeffs - target) <= RECONSTRUCTION_TOL:
            return np.array(subset, dtype=np.intp), coeffs
    raise NoPositiveBasis(
        f"no {dim}-subset of {dirs.count} directions reproduces the target "
        "with nonnegative coefficients"
    )
