"""Dense and sparse (CSR) linear operators with exact application counting.

Every benchmark in this package reports cost in applications of the design
matrix and its transpose, so the counters live on the operator itself: any
code path that touches the matrix is charged, and caching bugs show up as
accounting mismatches in the tests.
"""

from __future__ import annotations

import numpy as np

__all__ = ["CsrMatrix", "CountedOperator", "as_vector", "dense_to_csr"]


def as_vector(x, n=None, name="x"):
    """Validate and return a finite 1-D float64 array."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise ValueError(f"{name} has dimension {v.shape[0]}, expected {n}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


class CsrMatrix:
    """Compressed sparse row matrix over float64.

    ``indptr`` has length ``rows + 1`` and is non-decreasing; column indices
    are strictly increasing within each row.  Products are computed with
    ``np.bincount`` reductions, which accumulate in a fixed order, so results
    are bitwise reproducible for a given build.
    """

    def __init__(self, shape, indptr, indices, values):
        rows, cols = int(shape[0]), int(shape[1])
        indptr = np.asarray(indptr, dtype=np.int64)
        indices = np.asarray(indices, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if indptr.shape != (rows + 1,):
            raise ValueError("indptr must have length rows + 1")
        if indptr[0] != 0 or indptr[-1] != indices.size:
            raise ValueError("indptr must start at 0 and end at nnz")
        if np.any(np.diff(indptr) < 0):
            raise ValueError("indptr must be non-decreasing")
        if indices.size != values.size:
            raise ValueError("indices and values must have equal length")
        if indices.size and (indices.min() < 0 or indices.max() >= cols):
            raise ValueError("column index out of range")
        # strictly increasing within each row
        row_lengths = np.diff(indptr)
        inner = np.ones(indices.size, dtype=bool)
        if indices.size:
            inner[indptr[:-1][row_lengths > 0]] = False
            if np.any(np.diff(indices)[inner[1:]] <= 0):
                raise ValueError("column indices must be strictly increasing within a row")
        if not np.all(np.isfinite(values)):
            raise ValueError("values contain non-finite entries")
        self.shape = (rows, cols)
        self.indptr = indptr
        self.indices = indices
        self.values = values
        self._row_ids = np.repeat(np.arange(rows, dtype=np.int64), row_lengths)

    @property
    def nnz(self):
        return self.values.size

    def matvec(self, x):
        contrib = self.values * x[self.indices]
        return np.bincount(self._row_ids, weights=contrib, minlength=self.shape[0])

    def rmatvec(self, y):
        contrib = self.values * y[self._row_ids]
        return np.bincount(self.indices, weights=contrib, minlength=self.shape[1])

    def toarray(self):
        out = np.zeros(self.shape)
        out[self._row_ids, self.indices] = self.values
        return out


def dense_to_csr(a):
    """Convert a dense matrix to CsrMatrix, dropping exact zeros."""
    a = np.asarray(a, dtype=np.float64)
    rows, cols = a.shape
    mask = a != 0.0
    counts = mask.sum(axis=1)
    indptr = np.zeros(rows + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    rr, cc = np.nonzero(mask)
    return CsrMatrix((rows, cols), indptr, cc, a[rr, cc])


class CountedOperator:
    """A linear map with transpose whose applications are counted.

    ``kernel`` is a dense 2-D ndarray or a :class:`CsrMatrix`.  Each call to
    :meth:`apply` / :meth:`apply_transpose` increments the corresponding
    counter by exactly one; counters never decrease.  The numerics are pure,
    so independent solver runs may share read-only kernels but must each own
    their operator instance for the accounting to stay per-run.
    """

    def __init__(self, kernel):
        if isinstance(kernel, CsrMatrix):
            self._dense = False
        else:
            kernel = np.asarray(kernel, dtype=np.float64)
            if kernel.ndim != 2:
                raise ValueError("dense kernel must be 2-D")
            if not np.all(np.isfinite(kernel)):
                raise ValueError("kernel contains non-finite entries")
            self._dense = True
        self.kernel = kernel
        self.n_rows, self.n_cols = (int(s) for s in kernel.shape)
        self.forward_count = 0
        self.transpose_count = 0

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def total_calls(self):
        return self.forward_count + self.transpose_count

    def apply(self, x):
        if x.shape[0] != self.n_cols:
            raise ValueError(f"dimension mismatch: operand has {x.shape[0]}, operator expects {self.n_cols}")
        self.forward_count += 1
        if self._dense:
            return self.kernel @ x
        return self.kernel.matvec(x)

    def apply_transpose(self, y):
        if y.shape[0] != self.n_rows:
            raise ValueError(f"dimension mismatch: operand has {y.shape[0]}, operator expects {self.n_rows}")
        self.transpose_count += 1
        if self._dense:
            return self.kernel.T @ y
        return self.kernel.rmatvec(y)
