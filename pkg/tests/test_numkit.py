#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
test_numkit
----------------------------------

Tests for `gtbench.numkit` module.
"""

import unittest

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from gtbench import numkit
from gtbench.exceptions import InvalidInputError
from gtbench.exceptions import NumericError
from gtbench.exceptions import DegenerateMaskError


class TestNumkit(unittest.TestCase):

    def setUp(self):
        pass

    def tearDown(self):
        pass

    def test_as_matrix_rejects_non_2d(self):
        try:
            numkit.as_matrix([1.0, 2.0])
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('matrix must be 2-D, got shape (2,)', str(e))

    def test_as_matrix_rejects_nan(self):
        try:
            numkit.as_matrix([[1.0, np.nan]], name='x')
            self.fail('Expected NumericError')
        except NumericError as e:
            self.assertEqual('x contains non-finite values', str(e))

    def test_matmul(self):
        res = numkit.matmul([[1, 2], [3, 4]], [[1], [1]])
        self.assertTrue(np.array_equal(np.array([[3.0], [7.0]]), res))

    def test_matmul_dimension_mismatch(self):
        try:
            numkit.matmul(np.ones((2, 3)), np.ones((2, 3)))
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('Dimension mismatch: cannot multiply (2, 3) '
                             'by (2, 3)', str(e))

    def test_row_softmax_uniform_row(self):
        res = numkit.row_softmax(np.zeros((1, 4)))
        self.assertTrue(np.allclose(np.full((1, 4), 0.25), res))

    def test_row_softmax_masked_entries_get_exact_zero(self):
        res = numkit.row_softmax([[0.0, numkit.NEG_INF, 1.0]])
        self.assertEqual(0.0, res[0, 1])
        self.assertAlmostEqual(1.0, float(np.sum(res)), places=12)

    def test_row_softmax_large_scores_stay_finite(self):
        res = numkit.row_softmax([[1000.0, 1000.0]])
        self.assertTrue(np.allclose([[0.5, 0.5]], res))

    def test_row_softmax_fully_masked_row(self):
        try:
            numkit.row_softmax([[0.0, 1.0],
                                [numkit.NEG_INF, numkit.NEG_INF]])
            self.fail('Expected DegenerateMaskError')
        except DegenerateMaskError as e:
            self.assertEqual('Attention row is entirely masked', str(e))

    def test_row_softmax_rejects_nan(self):
        self.assertRaises(NumericError, numkit.row_softmax, [[np.nan, 0.0]])

    @given(st.lists(st.lists(st.floats(min_value=-50.0, max_value=50.0),
                             min_size=3, max_size=3),
                    min_size=1, max_size=5))
    def test_row_softmax_rows_are_distributions(self, rows):
        res = numkit.row_softmax(np.array(rows))
        self.assertTrue(np.all(res >= 0.0))
        self.assertTrue(np.allclose(np.sum(res, axis=1), 1.0, atol=1e-9))

    def test_layer_norm_zero_mean_unit_variance(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(5, 7)) * 3.0 + 2.0
        res = numkit.layer_norm(x, np.ones(7), np.zeros(7), eps=0.0)
        self.assertTrue(np.allclose(0.0, np.mean(res, axis=-1)))
        self.assertTrue(np.allclose(1.0, np.var(res, axis=-1)))

    def test_layer_norm_bad_gain(self):
        try:
            numkit.layer_norm(np.ones((2, 3)), np.ones(2), np.zeros(3))
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('layer_norm gain/bias length must be 3', str(e))

    def test_gelu_derivative_matches_finite_difference(self):
        x = np.linspace(-3.0, 3.0, 13)
        h = 1e-6
        fd = (numkit.gelu(x + h) - numkit.gelu(x - h)) / (2 * h)
        self.assertTrue(np.allclose(fd, numkit.gelu_derivative(x),
                                    atol=1e-8))

    def test_canonical_signs(self):
        vecs = np.array([[0.1, -0.9],
                         [-0.5, 0.2]])
        self.assertTrue(np.array_equal([-1.0, -1.0],
                                       numkit.canonical_signs(vecs)))

    def test_sym_eig_diagonal(self):
        res = numkit.sym_eig(np.diag([3.0, 1.0, 2.0]))
        self.assertTrue(np.allclose([1.0, 2.0, 3.0], res.eigenvalues))
        self.assertTrue(np.allclose(np.abs(res.eigenvectors),
                                    [[0, 0, 1], [1, 0, 0], [0, 1, 0]]))

    def test_sym_eig_random_symmetric(self):
        rng = np.random.default_rng(7)
        for n in (1, 2, 5, 9):
            b = rng.normal(size=(n, n))
            s = b + b.T
            res = numkit.sym_eig(s)
            v = res.eigenvectors
            self.assertTrue(np.allclose(np.eye(n), v.T @ v, atol=1e-10))
            recon = v @ np.diag(res.eigenvalues) @ v.T
            self.assertTrue(np.allclose(s, recon, atol=1e-8))
            self.assertTrue(np.all(np.diff(res.eigenvalues) >= 0))
            self.assertTrue(np.allclose(np.linalg.eigvalsh(s),
                                        res.eigenvalues, atol=1e-8))
            # largest magnitude entry of every column is positive
            idx = np.argmax(np.abs(v), axis=0)
            self.assertTrue(np.all(v[idx, np.arange(n)] > 0))

    def test_sym_eig_rejects_asymmetric(self):
        try:
            numkit.sym_eig([[1.0, 2.0], [0.0, 1.0]])
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('sym_eig requires a symmetric matrix', str(e))

    def test_sym_eig_rejects_non_square(self):
        self.assertRaises(InvalidInputError, numkit.sym_eig, np.ones((2, 3)))

    def test_svd_random(self):
        rng = np.random.default_rng(3)
        for shape in ((6, 4), (4, 6), (5, 5), (1, 3)):
            a = rng.normal(size=shape)
            res = numkit.svd(a)
            k = min(shape)
            self.assertEqual((shape[0], k), res.u.shape)
            self.assertEqual((k,), res.s.shape)
            self.assertEqual((shape[1], k), res.v.shape)
            self.assertTrue(np.allclose(a, res.u @ np.diag(res.s) @ res.v.T,
                                        atol=1e-8))
            self.assertTrue(np.allclose(np.eye(k), res.u.T @ res.u,
                                        atol=1e-8))
            self.assertTrue(np.allclose(np.eye(k), res.v.T @ res.v,
                                        atol=1e-10))
            self.assertTrue(np.allclose(np.linalg.svd(a, compute_uv=False),
                                        res.s, atol=1e-8))

    def test_svd_rank_deficient(self):
        a = np.outer([1.0, 2.0, 3.0], [1.0, -1.0])
        res = numkit.svd(a)
        self.assertAlmostEqual(0.0, res.s[1], places=8)
        self.assertTrue(np.allclose(np.eye(2), res.u.T @ res.u, atol=1e-8))
        self.assertTrue(np.allclose(a, res.u @ np.diag(res.s) @ res.v.T,
                                    atol=1e-8))

    def test_svd_zero_matrix(self):
        res = numkit.svd(np.zeros((3, 2)))
        self.assertTrue(np.array_equal(np.zeros(2), res.s))
        self.assertTrue(np.allclose(np.eye(2), res.u.T @ res.u))

    def test_truncated_svd_eckart_young(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            n = int(rng.integers(2, 9))
            a = rng.normal(size=(n, n))
            full = np.linalg.svd(a, compute_uv=False)
            for r in range(1, n + 1):
                res = numkit.truncated_svd(a, r)
                approx = res.u @ np.diag(res.s) @ res.v.T
                err = np.linalg.norm(a - approx)
                self.assertAlmostEqual(np.sqrt(np.sum(full[r:] ** 2)), err,
                                       delta=1e-8)

    def test_truncated_svd_rank_out_of_range(self):
        try:
            numkit.truncated_svd(np.ones((2, 3)), 3)
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('Truncation rank 3 outside [0, 2]', str(e))


if __name__ == '__main__':
    unittest.main()
