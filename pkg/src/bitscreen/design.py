"""Standardized design matrices and incremental triangular factors.

The screening engines never materialize the centered-and-scaled matrix
``X = (Z - 1 zbar^T) D^{-1/2}``.  Every product with ``X`` is expressed
through the raw matrix ``Z`` (dense or CSC sparse), its column means and
its column standard deviations.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .exceptions import DimensionError, InputError, NumericalBreakdown

# Relative threshold below which a column SD is treated as zero.
_ZERO_SD_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class StandardizedDesign:
    """Raw covariates plus the statistics that define the implicit ``X``.

    Column ``j`` of ``X`` is ``(Z_j - mean_j) / sd_j`` with the population
    SD (divisor ``n``), so ``||X_j||^2 == n`` for every admissible column.
    Constant columns are inadmissible: they contribute zeros to every
    product and can never be selected.
    """

    raw: np.ndarray | sp.csc_matrix
    col_means: np.ndarray
    col_sds: np.ndarray
    admissible: np.ndarray
    inv_sds: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.raw.shape[0]

    @property
    def p(self) -> int:
        return self.raw.shape[1]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.raw)

    @property
    def n_admissible(self) -> int:
        return int(self.admissible.sum())

    def xt_v(self, v) -> np.ndarray:
        """Return ``X^T v`` without forming ``X``; inadmissible entries are 0."""
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n,):
            raise DimensionError(f"expected a vector of length {self.n}, got shape {v.shape}")
        ztv = np.asarray(self.raw.T @ v).ravel()
        return (ztv - self.col_means * v.sum()) * self.inv_sds

    def _check_col(self, j: int) -> int:
        j = int(j)
        if not 0 <= j < self.p:
            raise IndexError(f"column {j} out of range for p={self.p}")
        if not self.admissible[j]:
            raise InputError(f"column {j} is constant (zero SD) and cannot be used")
        return j

    def x_col(self, j: int) -> np.ndarray:
        """Materialize the single standardized column ``X_j``."""
        j = self._check_col(j)
        if self.is_sparse:
            zj = self.raw[:, [j]].toarray().ravel()
        else:
            zj = self.raw[:, j]
        return (zj - self.col_means[j]) * self.inv_sds[j]

    def x_col_dot(self, j: int, v) -> float:
        """Return ``X_j^T v``."""
        j = self._check_col(j)
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n,):
            raise DimensionError(f"expected a vector of length {self.n}, got shape {v.shape}")
        if self.is_sparse:
            start, stop = self.raw.indptr[j], self.raw.indptr[j + 1]
            zv = float(self.raw.data[start:stop] @ v[self.raw.indices[start:stop]])
        else:
            zv = float(self.raw[:, j] @ v)
        return (zv - self.col_means[j] * v.sum()) * self.inv_sds[j]

    def x_cols(self, cols) -> np.ndarray:
        """Materialize ``X[:, cols]`` as a dense ``n x len(cols)`` array."""
        cols = np.asarray(cols, dtype=np.intp).reshape(-1)
        for j in cols:
            self._check_col(j)
        if self.is_sparse:
            block = self.raw[:, cols].toarray()
        else:
            block = self.raw[:, cols]
        return (block - self.col_means[cols]) * self.inv_sds[cols]

    def row_gram(self, block_size: int = 4096) -> np.ndarray:
        """Return the ``n x n`` matrix ``X X^T``.

        Centering is applied algebraically, so a sparse ``Z`` is only ever
        multiplied, never densified; dense input is processed in column
        blocks to bound the temporary memory.
        """
        n = self.n
        s2 = self.inv_sds**2
        a = np.asarray(self.raw @ (s2 * self.col_means)).ravel()
        c = float(self.col_means @ (s2 * self.col_means))
        if self.is_sparse:
            zs = self.raw @ sp.diags(self.inv_sds)
            gram = np.asarray((zs @ zs.T).toarray())
        else:
            gram = np.zeros((n, n))
            for start in range(0, self.p, block_size):
                blk = self.raw[:, start:start + block_size] * self.inv_sds[start:start + block_size]
                gram += blk @ blk.T
        gram -= a[:, None]
        gram -= a[None, :]
        gram += c
        return gram


def standardize(Z, *, warn: bool = True) -> StandardizedDesign:
    """Compute column means and population SDs of ``Z``.

    Parameters
    ----------
    Z : array-like or scipy sparse matrix, shape (n, p)
        Raw covariates, rows are samples.  Sparse input is converted to CSC
        and kept sparse.
    warn : bool
        Emit a warning listing the constant columns, if any.

    Returns
    -------
    StandardizedDesign
    """
    if sp.issparse(Z):
        raw = sp.csc_matrix(Z, dtype=np.float64)
        raw.sort_indices()
        if not np.all(np.isfinite(raw.data)):
            raise InputError("design matrix contains non-finite entries")
    else:
        raw = np.asarray(Z, dtype=np.float64)
        if raw.ndim != 2:
            raise DimensionError(f"design matrix must be 2-D, got {raw.ndim}-D")
        if not np.all(np.isfinite(raw)):
            bad = np.argwhere(~np.isfinite(raw))[0]
            raise InputError(f"design matrix has a non-finite entry at row {bad[0]}, column {bad[1]}")
    n, p = raw.shape
    if n < 2:
        raise DimensionError(f"need at least 2 samples, got {n}")
    if p < 1:
        raise DimensionError("design matrix has no columns")

    if sp.issparse(raw):
        sums = np.asarray(raw.sum(axis=0)).ravel()
        sumsq = np.asarray(raw.multiply(raw).sum(axis=0)).ravel()
        means = sums / n
        var = np.maximum(sumsq / n - means**2, 0.0)
        scale = np.asarray(abs(raw).max(axis=0).toarray()).ravel()
    else:
        means = raw.mean(axis=0)
        var = ((raw - means) ** 2).mean(axis=0)
        scale = np.abs(raw).max(axis=0)
    sds = np.sqrt(var)
    admissible = sds > _ZERO_SD_RTOL * np.maximum(scale, np.finfo(float).tiny)
    if warn and not admissible.all():
        bad = np.flatnonzero(~admissible)
        shown = ", ".join(map(str, bad[:10])) + (" ..." if bad.size > 10 else "")
        warnings.warn(f"{bad.size} constant column(s) excluded from screening: {shown}", stacklevel=2)
    inv = np.zeros(p)
    inv[admissible] = 1.0 / sds[admissible]
    return StandardizedDesign(raw=raw, col_means=means, col_sds=sds, admissible=admissible, inv_sds=inv)


@dataclass(frozen=True)
class CenteredResponse:
    """Centered response rescaled to ``||y_tilde||^2 == n``.

    ``y_tilde = (y - ybar) / original_scale``.
    """

    y_tilde: np.ndarray
    original_scale: float
    ybar: float

    @property
    def n(self) -> int:
        return self.y_tilde.shape[0]

    @property
    def sq_norm(self) -> float:
        return float(self.y_tilde @ self.y_tilde)


def center_response(y) -> CenteredResponse:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1:
        y = y.reshape(-1)
    if y.shape[0] < 2:
        raise DimensionError("response needs at least 2 observations")
    if not np.all(np.isfinite(y)):
        raise InputError(f"response has a non-finite entry at position {int(np.argmin(np.isfinite(y)))}")
    ybar = float(y.mean())
    yc = y - ybar
    norm = float(np.sqrt(yc @ yc))
    if norm == 0.0 or norm <= 1e-14 * np.abs(y).max():
        raise InputError("response is constant")
    scale = norm / np.sqrt(y.shape[0])
    return CenteredResponse(y_tilde=yc / scale, original_scale=scale, ybar=ybar)


class TriangularFactor:
    """Upper-triangular ``R`` grown one column at a time.

    ``R^T R`` equals ``X_path^T X_path + lam I`` in path order.  Storage is a
    square buffer doubled on demand; only the leading ``order x order``
    block is meaningful.
    """

    def __init__(self, capacity: int = 16):
        self._buf = np.zeros((max(capacity, 1), max(capacity, 1)))
        self.order = 0
        self.log_det = 0.0
        self.path_order: list[int] = []

    @property
    def R(self) -> np.ndarray:
        return self._buf[: self.order, : self.order]

    def _grow(self):
        cap = self._buf.shape[0]
        new = np.zeros((2 * cap, 2 * cap))
        new[:cap, :cap] = self._buf
        self._buf = new

    def append(self, alpha, b: float, index: int | None = None) -> "TriangularFactor":
        """Append column ``(alpha, b)``; ``log_det`` grows by ``log b``."""
        alpha = np.asarray(alpha, dtype=np.float64).reshape(-1)
        if alpha.shape[0] != self.order:
            raise DimensionError(f"alpha must have length {self.order}, got {alpha.shape[0]}")
        if not b > 0.0 or not np.isfinite(b):
            raise NumericalBreakdown(f"non-positive Cholesky pivot {b!r}")
        if self.order == self._buf.shape[0]:
            self._grow()
        k = self.order
        self._buf[:k, k] = alpha
        self._buf[k, k] = b
        self.order += 1
        self.log_det += float(np.log(b))
        self.path_order.append(-1 if index is None else int(index))
        return self

    def _check_rhs(self, rhs):
        rhs = np.asarray(rhs, dtype=np.float64)
        if rhs.shape[0] != self.order:
            raise DimensionError(f"rhs has {rhs.shape[0]} rows, factor order is {self.order}")
        if self.order and np.any(np.diag(self.R) == 0.0):
            raise NumericalBreakdown("zero on the factor diagonal")
        return rhs

    def solve_lower(self, rhs) -> np.ndarray:
        """Forward substitution: return ``R^{-T} rhs``."""
        rhs = self._check_rhs(rhs)
        if self.order == 0:
            return rhs.copy()
        return scipy.linalg.solve_triangular(self.R, rhs, trans="T", lower=False, check_finite=False)

    def solve_upper(self, rhs) -> np.ndarray:
        """Back substitution: return ``R^{-1} rhs``."""
        rhs = self._check_rhs(rhs)
        if self.order == 0:
            return rhs.copy()
        return scipy.linalg.solve_triangular(self.R, rhs, lower=False, check_finite=False)


def cholesky_append(factor: TriangularFactor, alpha, b: float, index: int | None = None) -> TriangularFactor:
    return factor.append(alpha, b, index)


def tri_solve_lower(factor: TriangularFactor, rhs) -> np.ndarray:
    return factor.solve_lower(rhs)


def tri_solve_upper(factor: TriangularFactor, rhs) -> np.ndarray:
    return factor.solve_upper(rhs)
