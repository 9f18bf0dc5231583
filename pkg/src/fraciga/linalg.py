"""Dense and sparse-row containers with LU-based solves.

Dense matrices are plain 2-D ``numpy`` arrays; the interpolation matrix is a
list of :class:`SparseRow`. Factorizations are delegated to LAPACK through
``scipy.linalg``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import DomainError, SingularMatrixError

__all__ = ["SparseRow", "sparse_matvec", "rows_to_dense", "rows_to_csr", "LU", "lu_solve"]

PIVOT_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class SparseRow:
    """Matrix row stored as strictly increasing column indices and values."""

    cols: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        cols = np.asarray(self.cols, dtype=np.int64).reshape(-1)
        vals = np.asarray(self.vals, dtype=float).reshape(-1)
        if cols.shape != vals.shape:
            raise DomainError("column and value arrays differ in length")
        if cols.size and (np.any(np.diff(cols) <= 0) or cols[0] < 0):
            raise DomainError("column indices must be nonnegative and strictly increasing")
        if not np.all(np.isfinite(vals)):
            raise DomainError("row values must be finite")
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "vals", vals)

    @classmethod
    def zero(cls):
        return cls(np.empty(0, dtype=np.int64), np.empty(0))

    @classmethod
    def from_unsorted(cls, cols, vals):
        """Build a row from possibly repeated, unordered entries (duplicates summed)."""
        cols = np.asarray(cols, dtype=np.int64).reshape(-1)
        vals = np.asarray(vals, dtype=float).reshape(-1)
        uniq, inv = np.unique(cols, return_inverse=True)
        return cls(uniq, np.bincount(inv, weights=vals, minlength=uniq.size))

    @property
    def nnz(self):
        return self.cols.size

    def dot(self, x):
        x = np.asarray(x, dtype=float)
        if self.cols.size and self.cols[-1] >= x.size:
            raise DomainError(f"column {self.cols[-1]} outside vector of length {x.size}")
        total = 0.0
        for c, v in zip(self.cols.tolist(), self.vals.tolist()):
            total += v * x[c]
        return total

    def to_dense(self, n):
        out = np.zeros(n)
        out[self.cols] = self.vals
        return out


def sparse_matvec(rows, x):
    """``y_i = sum_k vals_ik x[cols_ik]``, accumulated in stored order."""
    return np.array([row.dot(x) for row in rows])


def rows_to_dense(rows, n_cols):
    out = np.zeros((len(rows), n_cols))
    for i, row in enumerate(rows):
        out[i, row.cols] = row.vals
    return out


def rows_to_csr(rows, n_cols):
    indptr = np.cumsum([0] + [r.nnz for r in rows])
    cols = np.concatenate([r.cols for r in rows]) if rows else np.empty(0, dtype=np.int64)
    vals = np.concatenate([r.vals for r in rows]) if rows else np.empty(0)
    return scipy.sparse.csr_matrix((vals, cols, indptr), shape=(len(rows), n_cols))


class LU:
    """Partial-pivoting LU factorization of a square dense matrix."""

    def __init__(self, A):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DomainError(f"LU needs a square matrix, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise DomainError("matrix has non-finite entries")
        self.n = A.shape[0]
        if self.n == 0:
            self._lu = None
            return
        with warnings.catch_warnings():
            # exact zero pivots are reported below as SingularMatrixError
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
        pivots = np.abs(np.diag(lu))
        if np.min(pivots) < PIVOT_FLOOR:
            raise SingularMatrixError(
                f"matrix is numerically singular (pivot {np.min(pivots):.3e})")
        self._lu = (lu, piv)

    def solve(self, b, trans=0):
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise DomainError(f"right-hand side has length {b.shape[0]}, expected {self.n}")
        if self.n == 0:
            return b.copy()
        return scipy.linalg.lu_solve(self._lu, b, trans=trans, check_finite=False)


def lu_solve(A, b):
    """Solve ``A x = b`` by partial-pivoting LU."""
    return LU(A).solve(b)
