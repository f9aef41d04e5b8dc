import itertools

import numpy as np
import pytest

from cotrans import (
    DirectionSet,
    NoPositiveBasis,
    evenly_spaced_directions,
    is_nwise_independent,
    is_positively_spanning,
    positive_combination_basis,
)

from support import TRIPLE


def nnls_reconstructs(dirs, target, tol=1e-9):
    from scipy.optimize import nnls

    coeffs, residual = nnls(dirs.matrix, target)
    return residual < tol


def spans_by_sampling(dirs, samples):
    """Brute-force spanning check: every sampled unit target must be a
    nonnegative combination."""
    rng = np.random.default_rng(99)
    raw = rng.normal(size=(samples, dirs.dimension))
    raw /= np.linalg.norm(raw, axis=1)[:, np.newaxis]
    return all(nnls_reconstructs(dirs, t) for t in raw)


class TestDirectionSet:
    def test_evenly_spaced_triple(self):
        vecs = TRIPLE.vectors
        expected = np.array(
            [[1.0, 0.0], [-0.5, np.sqrt(3.0) / 2.0], [-0.5, -np.sqrt(3.0) / 2.0]]
        )
        assert np.allclose(vecs, expected, atol=1e-15)
        assert TRIPLE.count == 3
        assert TRIPLE.dimension == 2
        assert TRIPLE.matrix.shape == (2, 3)
        assert np.array_equal(TRIPLE.matrix, vecs.T)
        assert TRIPLE.unit_norm_deviation() <= 1e-12

    def test_vectors_are_read_only(self):
        with pytest.raises(ValueError):
            TRIPLE.vectors[0, 0] = 2.0

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            DirectionSet(np.zeros((3, 2, 1)))
        with pytest.raises(ValueError):
            DirectionSet(np.array([[np.nan, 0.0]]))


class TestPositiveSpanning:
    def test_triple_spans(self):
        assert is_positively_spanning(TRIPLE)
        assert spans_by_sampling(TRIPLE, 10_000)

    def test_opposite_pair_does_not_span(self):
        pair = DirectionSet(np.array([[1.0, 0.0], [-1.0, 0.0]]))
        assert not is_positively_spanning(pair)
        assert not nnls_reconstructs(pair, np.array([0.0, 1.0]))

    def test_fewer_than_n_plus_one_never_spans(self):
        two = DirectionSet(np.array([[1.0, 0.0], [0.0, 1.0]]))
        assert not is_positively_spanning(two)

    def test_minimal_set_breaks_without_any_member(self):
        for sets in (TRIPLE, simplex_3d()):
            assert is_positively_spanning(sets)
            for drop in range(sets.count):
                keep = [i for i in range(sets.count) if i != drop]
                reduced = DirectionSet(sets.vectors[keep])
                assert not is_positively_spanning(reduced)

    def test_octahedron_spans_in_3d(self):
        octa = DirectionSet(np.vstack((np.eye(3), -np.eye(3))))
        assert is_positively_spanning(octa)
        assert spans_by_sampling(octa, 10_000)

    def test_positive_octant_does_not_span(self):
        octant = DirectionSet(np.eye(3))
        assert not is_positively_spanning(octant)
        assert not nnls_reconstructs(octant, np.array([-1.0, 0.0, 0.0]))

    def test_agrees_with_sampled_oracle_on_random_sets(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            count = int(rng.integers(2, 7))
            raw = rng.normal(size=(count, 2))
            raw /= np.linalg.norm(raw, axis=1)[:, np.newaxis]
            dirs = DirectionSet(raw)
            sampled = spans_by_sampling(dirs, 2000)
            assert is_positively_spanning(dirs) == sampled


def simplex_3d():
    # Regular-tetrahedron directions: the minimal positive span of R^3.
    raw = np.array(
        [
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ]
    )
    return DirectionSet(raw / np.sqrt(3.0))


class TestNwiseIndependence:
    def test_triple_is_pairwise_independent(self):
        assert is_nwise_independent(TRIPLE)

    def test_duplicate_direction_fails(self):
        dirs = DirectionSet(np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
        assert not is_nwise_independent(dirs)

    def test_antipodal_pair_fails(self):
        dirs = DirectionSet(np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]]))
        assert not is_nwise_independent(dirs)

    def test_vacuous_when_fewer_than_n(self):
        assert is_nwise_independent(DirectionSet(np.array([[1.0, 0.0]])))

    def test_3d_simplex(self):
        assert is_nwise_independent(simplex_3d())


class TestPositiveCombinationBasis:
    def test_target_along_first_direction(self):
        indices, coeffs = positive_combination_basis(TRIPLE, np.array([1.0, 0.0]))
        assert tuple(indices) == (0, 1)
        assert np.allclose(coeffs, [1.0, 0.0], atol=1e-12)

    def test_target_opposite_first_direction(self):
        indices, coeffs = positive_combination_basis(TRIPLE, np.array([-1.0, 0.0]))
        assert tuple(indices) == (1, 2)
        assert np.allclose(coeffs, [1.0, 1.0], atol=1e-12)

    def test_target_up(self):
        indices, coeffs = positive_combination_basis(
            TRIPLE, np.array([0.0, 1.73205081])
        )
        assert tuple(indices) == (0, 1)
        assert np.allclose(coeffs, [1.0, 2.0], atol=1e-8)

    def test_lexicographic_tie_break(self):
        # [1, 1]-ish targets sit in the cone of (l_0, l_1); that subset comes
        # first in index order and must win.
        indices, _ = positive_combination_basis(TRIPLE, np.array([0.5, 0.5]))
        assert tuple(indices) == (0, 1)

    def test_random_unit_targets_reconstruct(self):
        rng = np.random.default_rng(11)
        raw = rng.normal(size=(1000, 2))
        raw /= np.linalg.norm(raw, axis=1)[:, np.newaxis]
        for target in raw:
            indices, coeffs = positive_combination_basis(TRIPLE, target)
            assert np.all(coeffs >= -1e-12)
            rebuilt = TRIPLE.vectors[list(indices)].T @ coeffs
            assert np.linalg.norm(rebuilt - target) < 1e-9

    def test_zero_target_rejected(self):
        with pytest.raises(ValueError):
            positive_combination_basis(TRIPLE, np.zeros(2))

    def test_unreachable_target(self):
        pair = DirectionSet(np.array([[1.0, 0.0], [-1.0, 0.0]]))
        with pytest.raises(NoPositiveBasis):
            positive_combination_basis(pair, np.array([0.0, 1.0]))

    def test_all_subsets_considered_in_order(self):
        # Sanity on the enumeration order itself.
        order = list(itertools.combinations(range(3), 2))
        assert order == [(0, 1), (0, 2), (1, 2)]
