"""Dense and sparse matrix substrate.

Dense matrices are plain float64 C-contiguous 2-D numpy arrays. Sparse
matrices are CSR with sorted column indices and no explicitly stored zeros,
wrapped in :class:`CSRMatrix`. All values are treated as immutable after
construction; CSR buffers are marked read-only.
"""

import numpy as np

from . import kernels
from .errors import ShapeError, ValidationError


def as_dense(x):
    """Coerce to a float64 C-contiguous 2-D array, validating finiteness."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"expected 2-D dense matrix, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("dense matrix contains non-finite entries")
    return arr


class CSRMatrix:
    """Immutable CSR matrix with sorted, unique column indices per row."""

    __slots__ = ("n_rows", "n_cols", "indptr", "indices", "data")

    def __init__(self, n_rows, n_cols, indptr, indices, data):
        indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        indices = np.ascontiguousarray(indices, dtype=np.int64)
        data = np.ascontiguousarray(data, dtype=np.float64)
        if n_rows < 0 or n_cols < 0:
            raise ValidationError("negative dimensions")
        if indptr.shape != (n_rows + 1,):
            raise ValidationError(
                f"indptr must have {n_rows + 1} entries, got {indptr.shape[0]}"
            )
        if indptr[0] != 0 or np.any(np.diff(indptr) < 0):
            raise ValidationError("indptr must start at 0 and be non-decreasing")
        nnz = int(indptr[-1])
        if indices.shape[0] != nnz or data.shape[0] != nnz:
            raise ValidationError("indices/data length does not match indptr")
        if nnz:
            if indices.min() < 0 or indices.max() >= n_cols:
                raise ValidationError("column index out of range")
            # Strictly increasing within each row: the only admissible
            # decreases in the concatenated index array are at row starts.
            decreases = np.flatnonzero(np.diff(indices) <= 0) + 1
            row_starts = indptr[1:-1]
            if not np.isin(decreases, row_starts).all():
                raise ValidationError("column indices not strictly increasing within a row")
            if not np.all(np.isfinite(data)):
                raise ValidationError("sparse matrix contains non-finite values")
        if np.any(data == 0.0):
            indptr, indices, data = _prune_zeros(indptr, indices, data)
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        for arr in (indptr, indices, data):
            arr.setflags(write=False)
        self.indptr = indptr
        self.indices = indices
        self.data = data

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return int(self.indptr[-1])

    @classmethod
    def from_dense(cls, arr):
        arr = as_dense(arr)
        n_rows, n_cols = arr.shape
        mask = arr != 0.0
        counts = mask.sum(axis=1)
        indptr = np.zeros(n_rows + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        rows, cols = np.nonzero(mask)
        return cls(n_rows, n_cols, indptr, cols, arr[rows, cols])

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, vals):
        """Build from coordinate triplets; duplicate coordinates are summed."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape):
            raise ShapeError("rows/cols/vals must have equal length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= n_rows or cols.min() < 0 or cols.max() >= n_cols:
                raise ValidationError("coordinate out of range")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            keys = rows * np.int64(n_cols) + cols
            uniq, inverse = np.unique(keys, return_inverse=True)
            summed = np.zeros(uniq.size, dtype=np.float64)
            np.add.at(summed, inverse, vals)
            rows = (uniq // n_cols).astype(np.int64)
            cols = (uniq % n_cols).astype(np.int64)
            vals = summed
        indptr = np.zeros(n_rows + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(n_rows, n_cols, indptr, cols, vals)

    @classmethod
    def identity(cls, n):
        idx = np.arange(n, dtype=np.int64)
        return cls(n, n, np.arange(n + 1, dtype=np.int64), idx, np.ones(n))

    @classmethod
    def empty(cls, n_rows, n_cols):
        return cls(n_rows, n_cols, np.zeros(n_rows + 1, dtype=np.int64),
                   np.zeros(0, dtype=np.int64), np.zeros(0))

    def densify(self):
        out = np.zeros(self.shape, dtype=np.float64)
        rows = np.repeat(np.arange(self.n_rows), np.diff(self.indptr))
        out[rows, self.indices] = self.data
        return out

    def row_of_entry(self):
        """Row index of every stored entry, in storage order."""
        return np.repeat(np.arange(self.n_rows, dtype=np.int64), np.diff(self.indptr))

    def transpose(self):
        rows = self.row_of_entry()
        return CSRMatrix.from_coo(self.n_cols, self.n_rows, self.indices, rows, self.data)

    def scale_rows(self, factors):
        """Multiply row i by factors[i]."""
        factors = np.asarray(factors, dtype=np.float64)
        if factors.shape != (self.n_rows,):
            raise ShapeError("row factor vector has wrong length")
        return CSRMatrix(self.n_rows, self.n_cols, self.indptr, self.indices,
                         self.data * factors[self.row_of_entry()])

    def row_sums(self):
        out = np.zeros(self.n_rows, dtype=np.float64)
        np.add.at(out, self.row_of_entry(), self.data)
        return out

    def equals(self, other):
        """Exact structural and numerical equality."""
        return (
            isinstance(other, CSRMatrix)
            and self.shape == other.shape
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self):
        return f"CSRMatrix(shape={self.shape}, nnz={self.nnz})"


def _prune_zeros(indptr, indices, data):
    keep = data != 0.0
    counts = np.zeros(indptr.shape[0] - 1, dtype=np.int64)
    rows = np.repeat(np.arange(indptr.shape[0] - 1), np.diff(indptr))
    np.add.at(counts, rows[keep], 1)
    new_indptr = np.zeros_like(indptr)
    np.cumsum(counts, out=new_indptr[1:])
    return new_indptr, indices[keep].copy(), data[keep].copy()


def spmm(s, d):
    """Sparse @ dense with a deterministic, ascending-column accumulation."""
    d = as_dense(d)
    if s.n_cols != d.shape[0]:
        raise ShapeError(f"spmm: {s.shape} @ {d.shape}")
    return kernels.spmm(s.indptr, s.indices, s.data, d)


def csr_matmul(a, b):
    """Sparse @ sparse -> sparse, pruning exact zeros."""
    if a.n_cols != b.n_rows:
        raise ShapeError(f"csr_matmul: {a.shape} @ {b.shape}")
    indptr, indices, data = kernels.csr_matmul(
        a.indptr, a.indices, a.data, b.indptr, b.indices, b.data, b.n_cols
    )
    return CSRMatrix(a.n_rows, b.n_cols, indptr, indices, data)


def dense_matmul(a, b):
    a = as_dense(a)
    b = as_dense(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"dense_matmul: {a.shape} @ {b.shape}")
    return a @ b


def transpose(x):
    if isinstance(x, CSRMatrix):
        return x.transpose()
    return np.ascontiguousarray(as_dense(x).T)


def add(a, b):
    if isinstance(a, CSRMatrix) and isinstance(b, CSRMatrix):
        if a.shape != b.shape:
            raise ShapeError(f"add: {a.shape} vs {b.shape}")
        rows = np.concatenate([a.row_of_entry(), b.row_of_entry()])
        cols = np.concatenate([a.indices, b.indices])
        vals = np.concatenate([a.data, b.data])
        return CSRMatrix.from_coo(a.n_rows, a.n_cols, rows, cols, vals)
    a = as_dense(a)
    b = as_dense(b)
    if a.shape != b.shape:
        raise ShapeError(f"add: {a.shape} vs {b.shape}")
    return a + b


def scale(x, alpha):
    alpha = float(alpha)
    if isinstance(x, CSRMatrix):
        return CSRMatrix(x.n_rows, x.n_cols, x.indptr, x.indices, x.data * alpha)
    return as_dense(x) * alpha


def hadamard(a, b):
    a = as_dense(a)
    b = as_dense(b)
    if a.shape != b.shape:
        raise ShapeError(f"hadamard: {a.shape} vs {b.shape}")
    return a * b


def row_sum(x):
    if isinstance(x, CSRMatrix):
        return x.row_sums()
    return as_dense(x).sum(axis=1)
