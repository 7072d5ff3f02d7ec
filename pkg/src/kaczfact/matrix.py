"""Dense/sparse storage and the linear-algebra primitives the solvers use.

Dense matrices are plain C-ordered ``float64`` numpy arrays.  The data
matrix lives in :class:`CSRMatrix`, an immutable compressed-sparse-row store
with sorted column indices and no explicit zeros.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import kernels
from .errors import DimensionMismatch, IndexOutOfRange, ZeroDataMatrix, ZeroMatrix

EPS = np.finfo(np.float64).eps
PANEL_ROWS = 1024


class CSRMatrix:
    """Immutable CSR matrix.

    Invariants checked on construction: ``indptr`` has ``rows + 1`` entries,
    starts at 0, ends at nnz and never decreases; column indices are strictly
    increasing within each row and below ``cols``; no stored value is zero.
    """

    __slots__ = ("shape", "indptr", "indices", "data", "_transpose", "_sq_norm")

    def __init__(self, indptr, indices, data, shape, check=True):
        self.shape = (int(shape[0]), int(shape[1]))
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        for arr in (self.indptr, self.indices, self.data):
            arr.flags.writeable = False
        self._transpose = None
        self._sq_norm = None
        if check:
            self._validate()

    def _validate(self):
        rows, cols = self.shape
        if rows < 0 or cols < 0:
            raise DimensionMismatch(f"negative shape {self.shape}")
        ip, idx, val = self.indptr, self.indices, self.data
        if ip.shape != (rows + 1,):
            raise DimensionMismatch(f"indptr has length {ip.shape[0]}, expected {rows + 1}")
        if ip[0] != 0 or ip[-1] != idx.shape[0] or idx.shape != val.shape:
            raise DimensionMismatch("indptr does not bracket the stored entries")
        if np.any(np.diff(ip) < 0):
            raise DimensionMismatch("indptr must be non-decreasing")
        if idx.size:
            if idx.min() < 0 or idx.max() >= cols:
                raise IndexOutOfRange("column index out of range")
            step = np.diff(idx)
            row_start = np.zeros(idx.shape[0], dtype=bool)
            row_start[ip[1:-1][ip[1:-1] < idx.shape[0]]] = True
            if np.any((step <= 0) & ~row_start[1:]):
                raise DimensionMismatch("column indices must be strictly increasing within a row")
        if not np.all(np.isfinite(val)):
            raise ValueError("non-finite stored value")
        if np.any(val == 0.0):
            raise ValueError("explicit zeros are not allowed; use from_coo/from_dense to prune")

    # construction -------------------------------------------------------

    @classmethod
    def from_scipy(cls, mat):
        csr = sp.csr_array(mat, dtype=np.float64)
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        return cls(csr.indptr, csr.indices, csr.data, csr.shape)

    @classmethod
    def from_dense(cls, arr):
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionMismatch("dense input must be 2-D")
        return cls.from_scipy(sp.csr_array(arr))

    @classmethod
    def from_coo(cls, rows, cols, values, shape):
        """Build from coordinate triples; duplicate coordinates are summed."""
        coo = sp.coo_array(
            (np.asarray(values, dtype=np.float64), (np.asarray(rows), np.asarray(cols))),
            shape=shape,
        )
        return cls.from_scipy(coo.tocsr())

    # views --------------------------------------------------------------

    @property
    def nnz(self):
        return int(self.data.shape[0])

    @property
    def T(self):
        """Transpose, computed once and cached (equivalent to a CSC copy)."""
        if self._transpose is None:
            t = sp.csr_array((self.data, self.indices, self.indptr), shape=self.shape).T.tocsr()
            t.sort_indices()
            self._transpose = CSRMatrix(t.indptr, t.indices, t.data, t.shape, check=False)
            self._transpose._transpose = self
        return self._transpose

    def to_scipy(self):
        return sp.csr_array((self.data, self.indices, self.indptr), shape=self.shape)

    def toarray(self):
        return self.to_scipy().toarray()

    def row(self, i):
        """Column indices and values stored in row ``i``."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def dense_row(self, i):
        out = np.zeros(self.shape[1])
        cols, vals = self.row(i)
        out[cols] = vals
        return out

    def dense_col(self, j):
        return self.T.dense_row(j)

    def sq_norm(self):
        if self._sq_norm is None:
            self._sq_norm = float(self.data @ self.data)
        return self._sq_norm

    def __eq__(self, other):
        if not isinstance(other, CSRMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.data, other.data)
        )

    __hash__ = None

    def __repr__(self):
        return f"CSRMatrix(shape={self.shape}, nnz={self.nnz})"


def as_dense(M):
    if isinstance(M, CSRMatrix):
        return M.toarray()
    return np.asarray(M, dtype=np.float64)


def frobenius_norm(M):
    if isinstance(M, CSRMatrix):
        return float(np.sqrt(M.sq_norm()))
    M = np.asarray(M, dtype=np.float64)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M.ravel()))


def relative_error(X, A, S, panel_rows=PANEL_ROWS):
    """``||X - A S||_F / ||X||_F`` with ``X`` sparse.

    The dense product is formed one panel of ``panel_rows`` rows at a time, so
    peak extra memory is ``panel_rows * n`` floats regardless of ``m``.
    """
    if not isinstance(X, CSRMatrix):
        X = CSRMatrix.from_dense(X)
    A = np.asarray(A, dtype=np.float64)
    S = np.asarray(S, dtype=np.float64)
    m, n = X.shape
    if A.ndim != 2 or S.ndim != 2 or A.shape[0] != m or S.shape[1] != n or A.shape[1] != S.shape[0]:
        raise DimensionMismatch(f"cannot compare X{X.shape} with A{A.shape} @ S{S.shape}")
    xnorm_sq = X.sq_norm()
    if xnorm_sq == 0.0:
        raise ZeroDataMatrix("relative error undefined for a zero data matrix")
    total = 0.0
    for r0 in range(0, m, panel_rows):
        r1 = min(m, r0 + panel_rows)
        D = A[r0:r1] @ S
        total += kernels.panel_residual_sq(X.indptr, X.indices, X.data, r0, D)
    return float(np.sqrt(total / xnorm_sq))


def least_squares_solve(M, b):
    """Minimum-norm least-squares solution ``M^+ b`` without forming ``M^+``.

    Uses LAPACK ``gelsy`` (QR with column pivoting followed by a complete
    orthogonal factorization), which returns the minimum-norm solution for
    rank-deficient ``M``.  ``b`` may be a vector or a matrix of right-hand
    sides.
    """
    M = np.asarray(M, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if M.ndim != 2:
        raise DimensionMismatch("M must be 2-D")
    p, q = M.shape
    if b.shape[0] != p or b.ndim > 2:
        raise DimensionMismatch(f"rhs of shape {b.shape} does not match M{M.shape}")
    if p == 0 or q == 0:
        return np.zeros((q,) + b.shape[1:])
    cond = max(p, q) * EPS
    x = scipy.linalg.lstsq(M, b, cond=cond, lapack_driver="gelsy", check_finite=False)[0]
    return x


def singular_values(M):
    M = as_dense(M)
    if M.size == 0:
        return np.zeros(0)
    return np.linalg.svd(M, compute_uv=False)


def numerical_rank(M, tol=0.0):
    """Number of singular values above ``tol * sigma_max``.

    ``tol == 0`` selects the conventional ``max(rows, cols) * eps``.  Large
    sparse inputs are ranked from the eigenvalues of the Gram matrix of the
    short side; there the cutoff is applied to squared singular values, which
    keeps it above eigensolver round-off.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    rows, cols = M.shape
    if tol == 0.0:
        tol = max(rows, cols) * EPS
    if isinstance(M, CSRMatrix) and rows * cols > 4_000_000:
        S = M.to_scipy()
        G = (S.T @ S if cols <= rows else S @ S.T).toarray()
        lam = np.linalg.eigvalsh(G)
        if lam.size == 0 or lam[-1] <= 0.0:
            return 0
        return int(np.count_nonzero(lam > tol * lam[-1]))
    s = singular_values(M)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def smallest_singular_value(M):
    s = singular_values(M)
    if s.size == 0 or s[0] == 0.0:
        raise ZeroMatrix("smallest singular value requested for a zero matrix")
    return float(s[-1])


def _check_indices(idx, bound, what):
    idx = np.asarray(idx, dtype=np.int64)
    if idx.ndim != 1:
        raise DimensionMismatch(f"{what} indices must be 1-D")
    if idx.size and (idx.min() < 0 or idx.max() >= bound):
        raise IndexOutOfRange(f"{what} index out of range [0, {bound})")
    return idx


def row_slice(M, indices):
    """Rows of dense ``M`` in sample order (indices need not be contiguous)."""
    M = np.asarray(M)
    idx = _check_indices(indices, M.shape[0], "row")
    return M[idx]


def col_slice(M, indices):
    M = np.asarray(M)
    idx = _check_indices(indices, M.shape[1], "column")
    return M[:, idx]


def sparse_entry_slice(X, rows, col):
    """``X[rows, col]`` as a dense vector, reading only column ``col``."""
    if not 0 <= col < X.shape[1]:
        raise IndexOutOfRange(f"column {col} out of range")
    rows = _check_indices(rows, X.shape[0], "row")
    T = X.T
    return kernels.csr_gather(T.indptr, T.indices, T.data, col, rows)


def sparse_row_entries(X, row, cols):
    """``X[row, cols]`` as a dense vector, reading only row ``row``."""
    if not 0 <= row < X.shape[0]:
        raise IndexOutOfRange(f"row {row} out of range")
    cols = _check_indices(cols, X.shape[1], "column")
    return kernels.csr_gather(X.indptr, X.indices, X.data, row, cols)
