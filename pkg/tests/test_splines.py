"""Tests for the splines module."""

import unittest

import numpy as np

from spacetime_pspline.data_model import Dataset
from spacetime_pspline.exceptions import ConfigurationError, DomainError
from spacetime_pspline.splines import (
    DimensionBasis,
    TensorBasisSpec,
    bspline_basis_1d,
    difference_matrix,
    difference_penalty,
    penalty_null_space_dim,
    tensor_design,
)


def small_spec(counts=(5, 4, 3), degree=2, penalty_order=1):
    return TensorBasisSpec.from_ranges(
        counts, [(0.0, 1.4), (0.0, 0.8), (0.0, 1.0)], degree=degree, penalty_order=penalty_order
    )


def cox_de_boor(x, knots, degree):
    """Dense B-spline values by the Cox-de Boor recursion."""
    x = np.asarray(x, dtype=float)[:, None]
    values = ((knots[:-1] <= x) & (x < knots[1:])).astype(float)
    for d in range(1, degree + 1):
        left = (x - knots[: -d - 1]) / (knots[d:-1] - knots[: -d - 1])
        right = (knots[d + 1 :] - x) / (knots[d + 1 :] - knots[1:-d])
        values = left * values[:, :-1] + right * values[:, 1:]
    return values


class TestBasis1D(unittest.TestCase):
    """Test cases for one-dimensional B-spline bases."""

    def test_knots_are_equally_spaced(self):
        knots = DimensionBasis(6, 2, 0.0, 2.0).knots()
        self.assertEqual(knots.size, 9)
        np.testing.assert_allclose(np.diff(knots), 0.5)
        self.assertEqual(knots[2], 0.0)
        self.assertEqual(knots[6], 2.0)

    def test_partition_of_unity_and_support(self):
        x = np.linspace(0.0, 1.0, 57)
        for degree in (0, 1, 2, 3):
            basis = bspline_basis_1d(x, 7, degree, (0.0, 1.0))
            self.assertEqual(basis.shape, (57, 7))
            np.testing.assert_allclose(np.asarray(basis.sum(axis=1)).ravel(), 1.0, atol=1e-12)
            self.assertLessEqual(np.diff(basis.indptr).max(), degree + 1)

    def test_values_match_cox_de_boor_recursion(self):
        """Basis values agree with the textbook recursion on half-open knot intervals."""
        x = np.sort(np.random.default_rng(3).uniform(0.0, 2.0, 40))
        for degree in (0, 1, 2, 3):
            knots = DimensionBasis(7, degree, 0.0, 2.0).knots()
            expected = cox_de_boor(x, knots, degree)
            basis = bspline_basis_1d(x, 7, degree, (0.0, 2.0)).toarray()
            np.testing.assert_allclose(basis, expected, atol=1e-12)
            end = bspline_basis_1d([2.0], 7, degree, (0.0, 2.0)).toarray()
            self.assertAlmostEqual(end.sum(), 1.0, places=12)

    def test_upper_end_is_included(self):
        basis = bspline_basis_1d([1.0], 4, 0, (0.0, 1.0)).toarray()
        np.testing.assert_array_equal(basis, [[0.0, 0.0, 0.0, 1.0]])

    def test_point_outside_range_raises(self):
        with self.assertRaises(DomainError) as cm:
            bspline_basis_1d([0.5, 1.2], 5, 2, (0.0, 1.0), axis="s2")
        self.assertEqual(cm.exception.axis, "s2")

    def test_tiny_overshoot_is_clipped(self):
        basis = bspline_basis_1d([1.0 + 1e-13], 5, 2, (0.0, 1.0))
        self.assertAlmostEqual(basis.sum(), 1.0)


class TestTensorBasisSpec(unittest.TestCase):
    """Test cases for basis configuration checks."""

    def test_counts_and_size(self):
        spec = small_spec()
        self.assertEqual(spec.counts, (5, 4, 3))
        self.assertEqual(spec.n_coefficients, 60)
        self.assertEqual(spec.degree, 2)

    def test_too_few_basis_functions(self):
        with self.assertRaises(ConfigurationError):
            small_spec(counts=(2, 4, 3), degree=2)

    def test_penalty_order_not_below_count(self):
        with self.assertRaises(ConfigurationError):
            small_spec(counts=(5, 4, 2), degree=1, penalty_order=2)

    def test_invalid_penalty_order(self):
        with self.assertRaises(ConfigurationError):
            small_spec(penalty_order=3)

    def test_empty_range(self):
        with self.assertRaises(ConfigurationError):
            TensorBasisSpec.from_ranges((4, 4, 4), [(0.0, 0.0), (0.0, 1.0), (0.0, 1.0)])

    def test_for_dataset_uses_data_ranges(self):
        ds = Dataset.from_arrays(["A", "B"], [0.2, 0.9], [0.1, 0.4], [3.0, 7.0], [1.0, 2.0])
        spec = TensorBasisSpec.for_dataset(ds, (4, 4, 4))
        self.assertEqual([(d.lo, d.hi) for d in spec.dims], [(0.2, 0.9), (0.1, 0.4), (3.0, 7.0)])


class TestTensorDesign(unittest.TestCase):
    """Test cases for the tensor-product design matrix."""

    def test_matches_dense_kronecker_rows(self):
        spec = small_spec()
        rng = np.random.default_rng(3)
        coords = np.column_stack(
            [rng.uniform(0, 1.4, 20), rng.uniform(0, 0.8, 20), rng.uniform(0, 1.0, 20)]
        )
        design = tensor_design(coords, spec).toarray()
        self.assertEqual(design.shape, (20, 60))
        b1 = bspline_basis_1d(coords[:, 0], 5, 2, (0.0, 1.4)).toarray()
        b2 = bspline_basis_1d(coords[:, 1], 4, 2, (0.0, 0.8)).toarray()
        b3 = bspline_basis_1d(coords[:, 2], 3, 2, (0.0, 1.0)).toarray()
        for i in range(20):
            # dimension 1 fastest: np.kron(b3, np.kron(b2, b1))
            expected = np.kron(b3[i], np.kron(b2[i], b1[i]))
            np.testing.assert_allclose(design[i], expected, atol=1e-14)
        np.testing.assert_allclose(design.sum(axis=1), 1.0, atol=1e-12)

    def test_nonzeros_per_row(self):
        spec = small_spec()
        coords = np.array([[0.7, 0.4, 0.5], [0.0, 0.0, 0.0]])
        design = tensor_design(coords, spec)
        self.assertLessEqual(np.diff(design.indptr).max(), 27)

    def test_wrong_column_count(self):
        with self.assertRaises(DomainError):
            tensor_design(np.zeros((3, 2)), small_spec())


class TestDifferencePenalty(unittest.TestCase):
    """Test cases for the stacked difference penalty."""

    def test_difference_matrix(self):
        np.testing.assert_array_equal(
            difference_matrix(4, 1).toarray(),
            [[-1, 1, 0, 0], [0, -1, 1, 0], [0, 0, -1, 1]],
        )
        np.testing.assert_array_equal(difference_matrix(4, 2).toarray(), [[1, -2, 1, 0], [0, 1, -2, 1]])

    def test_shape_and_gram(self):
        spec = small_spec()
        penalty = difference_penalty(spec)
        self.assertEqual(penalty.shape, (4 * 4 * 3 + 5 * 3 * 3 + 5 * 4 * 2, 60))
        gram = (penalty.T @ penalty).toarray()
        eye = np.eye
        d1, d2, d3 = (difference_matrix(p, 1).toarray() for p in (5, 4, 3))
        expected = (
            np.kron(eye(3), np.kron(eye(4), d1.T @ d1))
            + np.kron(eye(3), np.kron(d2.T @ d2, eye(5)))
            + np.kron(d3.T @ d3, np.kron(eye(4), eye(5)))
        )
        np.testing.assert_allclose(gram, expected)

    def test_first_order_penalty_annihilates_constants(self):
        penalty = difference_penalty(small_spec())
        np.testing.assert_allclose(penalty @ np.ones(60), 0.0)

    def test_second_order_penalty_annihilates_planes(self):
        spec = small_spec(penalty_order=2)
        j, k, l = np.meshgrid(np.arange(5), np.arange(4), np.arange(3), indexing="ij")
        # coefficient of (j, k, l) sits at j + 5 k + 20 l
        beta = np.zeros(60)
        beta[(j + 5 * k + 20 * l).ravel()] = (1.0 + 2.0 * j - 0.5 * k + 3.0 * l).ravel()
        np.testing.assert_allclose(difference_penalty(spec) @ beta, 0.0, atol=1e-12)

    def test_null_space_dimension(self):
        for q in (1, 2):
            spec = small_spec(penalty_order=q)
            gram = (difference_penalty(spec).T @ difference_penalty(spec)).toarray()
            rank = np.linalg.matrix_rank(gram)
            self.assertEqual(60 - rank, penalty_null_space_dim(spec))
        self.assertEqual(penalty_null_space_dim(small_spec(penalty_order=2)), 8)


if __name__ == "__main__":
    unittest.main()
