"""CSR construction, validation, and linear algebra against dense oracles."""

import numpy as np
import pytest

from gcnkit.errors import ShapeError, ValidationError
from gcnkit.tensor import (
    CSRMatrix,
    add,
    as_dense,
    csr_matmul,
    dense_matmul,
    hadamard,
    row_sum,
    scale,
    spmm,
    transpose,
)


def random_sparse_dense(n_rows, n_cols, density, seed):
    rng = np.random.default_rng(seed)
    mask = rng.random((n_rows, n_cols)) < density
    return np.where(mask, rng.standard_normal((n_rows, n_cols)), 0.0)


class TestAsDense:
    def test_accepts_lists(self):
        out = as_dense([[1, 2], [3, 4]])
        assert out.dtype == np.float64
        assert out.flags.c_contiguous
        np.testing.assert_array_equal(out, [[1.0, 2.0], [3.0, 4.0]])

    def test_rejects_1d(self):
        with pytest.raises(ShapeError):
            as_dense([1.0, 2.0])

    def test_rejects_nan(self):
        with pytest.raises(ValidationError):
            as_dense([[np.nan, 0.0]])

    def test_rejects_inf(self):
        with pytest.raises(ValidationError):
            as_dense([[np.inf, 0.0]])


class TestCSRConstruction:
    def test_round_trip(self):
        for seed in range(5):
            dense = random_sparse_dense(7, 5, 0.3, seed)
            np.testing.assert_array_equal(CSRMatrix.from_dense(dense).densify(), dense)

    def test_round_trip_empty_rows_and_cols(self):
        dense = np.zeros((4, 3))
        dense[1, 2] = 2.5
        mat = CSRMatrix.from_dense(dense)
        assert mat.nnz == 1
        np.testing.assert_array_equal(mat.densify(), dense)

    def test_all_zero(self):
        mat = CSRMatrix.from_dense(np.zeros((3, 4)))
        assert mat.nnz == 0
        assert mat.shape == (3, 4)

    def test_from_coo_sums_duplicates(self):
        mat = CSRMatrix.from_coo(2, 2, [0, 0, 1], [1, 1, 0], [1.0, 2.0, 5.0])
        np.testing.assert_array_equal(mat.densify(), [[0.0, 3.0], [5.0, 0.0]])

    def test_from_coo_matches_add_at_oracle(self):
        rng = np.random.default_rng(11)
        rows = rng.integers(0, 6, size=40)
        cols = rng.integers(0, 4, size=40)
        vals = rng.standard_normal(40)
        oracle = np.zeros((6, 4))
        np.add.at(oracle, (rows, cols), vals)
        mat = CSRMatrix.from_coo(6, 4, rows, cols, vals)
        np.testing.assert_allclose(mat.densify(), oracle, rtol=0, atol=1e-12)

    def test_from_coo_cancelling_duplicates_are_pruned(self):
        mat = CSRMatrix.from_coo(1, 2, [0, 0], [1, 1], [1.5, -1.5])
        assert mat.nnz == 0

    def test_explicit_zero_pruned(self):
        mat = CSRMatrix(2, 2, [0, 2, 2], [0, 1], [1.0, 0.0])
        assert mat.nnz == 1
        np.testing.assert_array_equal(mat.densify(), [[1.0, 0.0], [0.0, 0.0]])

    def test_identity(self):
        np.testing.assert_array_equal(CSRMatrix.identity(3).densify(), np.eye(3))

    def test_empty(self):
        mat = CSRMatrix.empty(2, 5)
        assert mat.shape == (2, 5)
        assert mat.nnz == 0

    def test_buffers_read_only(self):
        mat = CSRMatrix.identity(2)
        with pytest.raises(ValueError):
            mat.data[0] = 2.0

    def test_rejects_bad_indptr_start(self):
        with pytest.raises(ValidationError):
            CSRMatrix(1, 1, [1, 1], [], [])

    def test_rejects_decreasing_indptr(self):
        with pytest.raises(ValidationError):
            CSRMatrix(2, 2, [0, 2, 1], [0, 1], [1.0, 1.0])

    def test_rejects_wrong_indptr_length(self):
        with pytest.raises(ValidationError):
            CSRMatrix(2, 2, [0, 1], [0], [1.0])

    def test_rejects_column_out_of_range(self):
        with pytest.raises(ValidationError):
            CSRMatrix(1, 2, [0, 1], [2], [1.0])
        with pytest.raises(ValidationError):
            CSRMatrix(1, 2, [0, 1], [-1], [1.0])

    def test_rejects_unsorted_columns(self):
        with pytest.raises(ValidationError):
            CSRMatrix(1, 3, [0, 2], [1, 0], [1.0, 1.0])

    def test_rejects_duplicate_columns(self):
        with pytest.raises(ValidationError):
            CSRMatrix(1, 3, [0, 2], [1, 1], [1.0, 1.0])

    def test_rejects_nonfinite_values(self):
        with pytest.raises(ValidationError):
            CSRMatrix(1, 1, [0, 1], [0], [np.nan])

    def test_rejects_negative_dims(self):
        with pytest.raises(ValidationError):
            CSRMatrix(-1, 2, [0], [], [])

    def test_equals(self):
        a = CSRMatrix.from_dense([[1.0, 0.0], [0.0, 2.0]])
        b = CSRMatrix.from_dense([[1.0, 0.0], [0.0, 2.0]])
        c = CSRMatrix.from_dense([[1.0, 0.0], [0.0, 2.5]])
        assert a.equals(b)
        assert not a.equals(c)
        assert not a.equals(CSRMatrix.identity(3))


class TestCSRDerived:
    def test_transpose_matches_dense(self):
        dense = random_sparse_dense(6, 4, 0.4, 2)
        mat = CSRMatrix.from_dense(dense)
        np.testing.assert_array_equal(mat.transpose().densify(), dense.T)

    def test_transpose_involution(self):
        dense = random_sparse_dense(5, 7, 0.3, 3)
        mat = CSRMatrix.from_dense(dense)
        assert mat.transpose().transpose().equals(mat)

    def test_scale_rows(self):
        dense = random_sparse_dense(4, 4, 0.5, 4)
        factors = np.array([2.0, 0.5, -1.0, 3.0])
        mat = CSRMatrix.from_dense(dense).scale_rows(factors)
        np.testing.assert_allclose(mat.densify(), factors[:, None] * dense,
                                   rtol=0, atol=1e-15)

    def test_row_sums(self):
        dense = random_sparse_dense(5, 6, 0.4, 5)
        mat = CSRMatrix.from_dense(dense)
        np.testing.assert_allclose(mat.row_sums(), dense.sum(axis=1),
                                   rtol=0, atol=1e-12)

    def test_row_of_entry(self):
        mat = CSRMatrix.from_dense([[1.0, 2.0], [0.0, 0.0], [3.0, 0.0]])
        np.testing.assert_array_equal(mat.row_of_entry(), [0, 0, 2])


class TestMatmul:
    def test_spmm_matches_dense_oracle(self):
        for seed in range(6):
            sparse_dense = random_sparse_dense(9, 6, 0.3, seed)
            dense = np.random.default_rng(100 + seed).standard_normal((6, 4))
            got = spmm(CSRMatrix.from_dense(sparse_dense), dense)
            np.testing.assert_allclose(got, sparse_dense @ dense,
                                       rtol=0, atol=1e-12)

    def test_spmm_empty_matrix(self):
        got = spmm(CSRMatrix.empty(3, 4), np.ones((4, 2)))
        np.testing.assert_array_equal(got, np.zeros((3, 2)))

    def test_spmm_single_column(self):
        sparse_dense = random_sparse_dense(5, 5, 0.5, 8)
        dense = np.arange(5.0).reshape(5, 1)
        got = spmm(CSRMatrix.from_dense(sparse_dense), dense)
        np.testing.assert_allclose(got, sparse_dense @ dense, rtol=0, atol=1e-12)

    def test_spmm_shape_mismatch(self):
        with pytest.raises(ShapeError):
            spmm(CSRMatrix.identity(3), np.ones((4, 2)))

    def test_spmm_deterministic(self):
        sparse = CSRMatrix.from_dense(random_sparse_dense(30, 30, 0.2, 9))
        dense = np.random.default_rng(10).standard_normal((30, 8))
        a = spmm(sparse, dense)
        b = spmm(sparse, dense)
        np.testing.assert_array_equal(a, b)

    def test_csr_matmul_matches_dense_oracle(self):
        for seed in range(6):
            da = random_sparse_dense(7, 5, 0.35, seed)
            db = random_sparse_dense(5, 8, 0.35, 50 + seed)
            got = csr_matmul(CSRMatrix.from_dense(da), CSRMatrix.from_dense(db))
            assert isinstance(got, CSRMatrix)
            np.testing.assert_allclose(got.densify(), da @ db, rtol=0, atol=1e-12)

    def test_csr_matmul_identity(self):
        dense = random_sparse_dense(6, 6, 0.4, 7)
        mat = CSRMatrix.from_dense(dense)
        assert csr_matmul(mat, CSRMatrix.identity(6)).equals(mat)
        assert csr_matmul(CSRMatrix.identity(6), mat).equals(mat)

    def test_csr_matmul_shape_mismatch(self):
        with pytest.raises(ShapeError):
            csr_matmul(CSRMatrix.identity(3), CSRMatrix.identity(4))

    def test_dense_matmul_matches_triple_loop(self):
        rng = np.random.default_rng(12)
        a = rng.standard_normal((4, 3))
        b = rng.standard_normal((3, 5))
        oracle = np.zeros((4, 5))
        for i in range(4):
            for j in range(5):
                for k in range(3):
                    oracle[i, j] += a[i, k] * b[k, j]
        np.testing.assert_allclose(dense_matmul(a, b), oracle, rtol=0, atol=1e-12)


class TestElementwise:
    def test_add_sparse(self):
        da = random_sparse_dense(4, 4, 0.4, 20)
        db = random_sparse_dense(4, 4, 0.4, 21)
        got = add(CSRMatrix.from_dense(da), CSRMatrix.from_dense(db))
        np.testing.assert_allclose(got.densify(), da + db, rtol=0, atol=1e-15)

    def test_add_dense(self):
        a = np.ones((2, 2))
        np.testing.assert_array_equal(add(a, a), 2 * a)

    def test_scale(self):
        dense = random_sparse_dense(3, 3, 0.5, 22)
        got = scale(CSRMatrix.from_dense(dense), -2.0)
        np.testing.assert_allclose(got.densify(), -2.0 * dense, rtol=0, atol=1e-15)

    def test_hadamard_dense(self):
        rng = np.random.default_rng(23)
        a = rng.standard_normal((3, 4))
        b = rng.standard_normal((3, 4))
        np.testing.assert_array_equal(hadamard(a, b), a * b)

    def test_row_sum_dense(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(row_sum(a), [3.0, 7.0])

    def test_transpose_dense(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(transpose(a), a.T)
