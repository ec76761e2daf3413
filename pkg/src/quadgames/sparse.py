"""Minimal sparse linear algebra for the game solver.

Matrices are stored either as triplets (COO) or in compressed-sparse-column
form.  The CSC representation and the LU factorization are backed by
scipy.sparse / SuperLU; this module pins down the semantics the solver relies
on (duplicate summation, exact round-trips, reusable factorizations) and the
error behaviour.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

__all__ = [
    "SparseMatrix",
    "LuFactorization",
    "SingularMatrixError",
    "compress",
    "matvec",
    "factorize",
    "solve_reuse",
    "identity",
    "zeros",
    "block_diag",
    "hstack",
    "vstack",
]

# Pivots below this magnitude are treated as numerically zero.
PIVOT_TOL = 1e-12


class SingularMatrixError(RuntimeError):
    """Raised when an LU factorization meets a numerically zero pivot."""


class SparseMatrix:
    """Real sparse matrix in triplet or compressed-sparse-column form.

    Construct from triplets with ``SparseMatrix(nrows, ncols, entries)`` where
    ``entries`` is an iterable of ``(row, col, value)``.  Duplicate entries are
    allowed in triplet form and are summed when the matrix is compressed.
    """

    def __init__(self, nrows, ncols, entries=(), _csc=None):
        if nrows < 0 or ncols < 0:
            raise ValueError("matrix dimensions must be nonnegative")
        self.nrows = int(nrows)
        self.ncols = int(ncols)
        if _csc is not None:
            self._csc = _csc
            self._rows = self._cols = self._vals = None
            return
        entries = list(entries)
        rows = np.array([e[0] for e in entries], dtype=np.int64)
        cols = np.array([e[1] for e in entries], dtype=np.int64)
        vals = np.array([e[2] for e in entries], dtype=float)
        self._check_indices(rows, cols)
        self._rows, self._cols, self._vals = rows, cols, vals
        self._csc = None

    def _check_indices(self, rows, cols):
        for k in range(len(rows)):
            if not (0 <= rows[k] < self.nrows and 0 <= cols[k] < self.ncols):
                raise ValueError(
                    f"entry {k} has index ({rows[k]}, {cols[k]}) outside a "
                    f"{self.nrows}x{self.ncols} matrix"
                )

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_arrays(cls, nrows, ncols, rows, cols, vals):
        """Triplet-form matrix from parallel index/value arrays."""
        m = cls(nrows, ncols)
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("rows, cols, vals must have equal length")
        m._check_indices(rows, cols)
        m._rows, m._cols, m._vals = rows, cols, vals
        return m

    @classmethod
    def from_dense(cls, arr):
        arr = np.asarray(arr, dtype=float)
        if arr.ndim != 2:
            raise ValueError("expected a 2-D array")
        return cls.from_scipy(sps.csc_matrix(arr), shape=arr.shape)

    @classmethod
    def from_scipy(cls, mat, shape=None):
        csc = sps.csc_matrix(mat)
        csc.sum_duplicates()
        csc.sort_indices()
        shape = shape if shape is not None else csc.shape
        return cls(shape[0], shape[1], _csc=csc)

    # -- basic properties -------------------------------------------------

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def is_compressed(self):
        return self._csc is not None

    @property
    def nnz(self):
        if self._csc is not None:
            return self._csc.nnz
        return len(self._vals)

    def compress(self):
        """Return the matrix in CSC form; duplicates summed, columns sorted."""
        if self._csc is not None:
            return self
        coo = sps.coo_matrix(
            (self._vals, (self._rows, self._cols)), shape=self.shape
        )
        csc = coo.tocsc()  # sums duplicates
        csc.sort_indices()
        return SparseMatrix(self.nrows, self.ncols, _csc=csc)

    def to_scipy(self):
        return self.compress()._csc

    def to_dense(self):
        return np.asarray(self.to_scipy().todense())

    def triplets(self):
        """Column-sorted (rows, cols, vals) arrays of the compressed matrix."""
        coo = self.to_scipy().tocoo()
        order = np.lexsort((coo.row, coo.col))
        return coo.row[order], coo.col[order], coo.data[order]

    def transpose(self):
        return SparseMatrix.from_scipy(self.to_scipy().T)

    @property
    def T(self):
        return self.transpose()

    def matvec(self, x):
        """Sparse matrix-vector product ``self @ x``."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.ncols,):
            raise ValueError(
                f"vector of length {x.shape} does not match {self.ncols} columns"
            )
        return self.to_scipy() @ x

    def __matmul__(self, x):
        if isinstance(x, SparseMatrix):
            return SparseMatrix.from_scipy(self.to_scipy() @ x.to_scipy())
        return self.matvec(x)

    def __repr__(self):
        form = "csc" if self.is_compressed else "triplet"
        return f"SparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz}, {form})"


class LuFactorization:
    """LU factors of a square sparse matrix; reusable across right-hand sides.

    Solves do not mutate the factorization, so one factorization may serve any
    number of ``solve`` calls (and is safe to share across threads).
    """

    def __init__(self, splu_obj, n):
        self._splu = splu_obj
        self.n = n

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape != (self.n,):
            raise ValueError(
                f"right-hand side of length {rhs.shape} does not match size {self.n}"
            )
        return self._splu.solve(rhs)


def compress(matrix):
    """Compress a triplet-form matrix to CSC; see SparseMatrix.compress."""
    return matrix.compress()


def matvec(matrix, x):
    """Product ``matrix @ x`` with dimension checking."""
    return matrix.matvec(x)


def factorize(matrix):
    """LU-factorize a square sparse matrix.

    Raises SingularMatrixError when the matrix is numerically singular (a
    pivot below ``PIVOT_TOL`` after partial pivoting).
    """
    if matrix.nrows != matrix.ncols:
        raise ValueError(f"cannot factorize a {matrix.nrows}x{matrix.ncols} matrix")
    csc = matrix.to_scipy()
    try:
        lu = spla.splu(csc)
    except RuntimeError as exc:  # SuperLU signals exact singularity this way
        raise SingularMatrixError(str(exc)) from exc
    diag = np.abs(lu.U.diagonal())
    if diag.size and diag.min() < PIVOT_TOL:
        raise SingularMatrixError(
            f"pivot magnitude {diag.min():.3e} below tolerance {PIVOT_TOL:.0e}"
        )
    return LuFactorization(lu, matrix.nrows)


def solve_reuse(factorization, rhs):
    """Solve with an existing factorization; identical to a fresh solve."""
    return factorization.solve(rhs)


# -- block assembly helpers -----------------------------------------------


def identity(n):
    return SparseMatrix.from_scipy(sps.identity(n, format="csc"))


def zeros(nrows, ncols):
    return SparseMatrix(nrows, ncols)


def block_diag(blocks):
    mats = [b.to_scipy() for b in blocks]
    return SparseMatrix.from_scipy(sps.block_diag(mats, format="csc"))


def hstack(blocks):
    mats = [b.to_scipy() for b in blocks]
    return SparseMatrix.from_scipy(sps.hstack(mats, format="csc"))


def vstack(blocks):
    mats = [b.to_scipy() for b in blocks]
    return SparseMatrix.from_scipy(sps.vstack(mats, format="csc"))
