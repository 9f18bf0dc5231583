import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraciga.errors import DomainError, SingularMatrixError
from fraciga.linalg import LU, SparseRow, lu_solve, rows_to_csr, rows_to_dense, sparse_matvec


class TestSparseRow:
    def test_dot(self):
        row = SparseRow([0, 3], [2.0, -1.0])
        assert row.dot(np.array([1.0, 5.0, 5.0, 4.0])) == -2.0

    def test_from_unsorted_sums_duplicates(self):
        row = SparseRow.from_unsorted([4, 1, 4], [1.0, 2.0, 3.0])
        np.testing.assert_array_equal(row.cols, [1, 4])
        np.testing.assert_array_equal(row.vals, [2.0, 4.0])

    @pytest.mark.parametrize("cols, vals", [
        ([1, 1], [1.0, 2.0]),
        ([2, 1], [1.0, 2.0]),
        ([-1], [1.0]),
        ([0], [np.nan]),
        ([0, 1], [1.0]),
    ])
    def test_invalid(self, cols, vals):
        with pytest.raises(DomainError):
            SparseRow(cols, vals)

    def test_out_of_range_column(self):
        with pytest.raises(DomainError):
            SparseRow([5], [1.0]).dot(np.zeros(3))

    def test_zero_row(self):
        assert SparseRow.zero().dot(np.ones(4)) == 0.0
        assert SparseRow.zero().nnz == 0

    def test_conversions(self, rng):
        rows = [SparseRow([0, 2], [1.0, 2.0]), SparseRow.zero(), SparseRow([1], [3.0])]
        x = rng.normal(size=3)
        dense = rows_to_dense(rows, 3)
        np.testing.assert_allclose(sparse_matvec(rows, x), dense @ x, rtol=1e-15)
        np.testing.assert_array_equal(rows_to_csr(rows, 3).toarray(), dense)


class TestLU:
    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(1, 30), seed=st.integers(0, 10_000))
    def test_solve_vs_numpy(self, n, seed):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(n, n)) + n * np.eye(n)
        b = rng.normal(size=n)
        np.testing.assert_allclose(lu_solve(A, b), np.linalg.solve(A, b), rtol=1e-10, atol=1e-12)

    def test_transpose_and_matrix_rhs(self, rng):
        A = rng.normal(size=(6, 6)) + 6 * np.eye(6)
        B = rng.normal(size=(6, 3))
        lu = LU(A)
        np.testing.assert_allclose(A @ lu.solve(B), B, atol=1e-12)
        np.testing.assert_allclose(A.T @ lu.solve(B[:, 0], trans=1), B[:, 0], atol=1e-12)

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            LU(np.array([[1.0, 2.0], [2.0, 4.0]]))

    @pytest.mark.parametrize("A", [np.ones((2, 3)), np.array([[np.inf]])])
    def test_invalid(self, A):
        with pytest.raises(DomainError):
            LU(A)

    def test_rhs_length(self):
        with pytest.raises(DomainError):
            LU(np.eye(2)).solve(np.ones(3))

    def test_empty(self):
        assert LU(np.zeros((0, 0))).solve(np.zeros(0)).size == 0
