"""Banded/dense symmetric linear algebra kernels.

Cholesky factorizations (LAPACK pbtrf/potrf behind a uniform interface),
Kronecker-structured applies, and the small eigen/singular-value routines
used by the verification suite.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
from scipy.linalg import cho_solve, cho_solve_banded, eigh, lapack

__all__ = [
    "NotSPDError",
    "BandedSymMatrix",
    "CholeskyFactor",
    "cholesky",
    "kron_apply",
    "generalized_eig_max",
    "operator_norm",
]

#: order up to which generalized eigenproblems take the dense LAPACK path
DENSE_EIG_LIMIT = 500


class NotSPDError(ValueError):
    """Raised when a Cholesky factorization hits a non-positive pivot."""

    def __init__(self, pivot: int, what: str = "matrix"):
        self.pivot = pivot
        super().__init__(f"{what} not SPD: leading minor {pivot} not positive definite")


@dataclass
class BandedSymMatrix:
    """Symmetric banded matrix, lower-band storage.

    ``bands[k, j]`` holds entry (j+k, j) for 0 <= k <= bandwidth; entries with
    j + k >= order are ignored. Only the lower triangle is stored.
    """

    order: int
    bandwidth: int
    bands: np.ndarray
    _csr: scipy.sparse.csr_matrix | None = field(default=None, repr=False)

    @classmethod
    def zeros(cls, order: int, bandwidth: int) -> "BandedSymMatrix":
        return cls(order, bandwidth, np.zeros((bandwidth + 1, order)))

    @classmethod
    def from_dense(cls, a: np.ndarray, bandwidth: int) -> "BandedSymMatrix":
        m = a.shape[0]
        out = cls.zeros(m, bandwidth)
        for k in range(bandwidth + 1):
            out.bands[k, :m - k] = np.diagonal(a, -k)
        return out

    def entry(self, i: int, j: int) -> float:
        if i < j:
            i, j = j, i
        k = i - j
        if k > self.bandwidth:
            return 0.0
        return float(self.bands[k, j])

    def toarray(self) -> np.ndarray:
        a = np.zeros((self.order, self.order))
        for k in range(self.bandwidth + 1):
            d = self.bands[k, :self.order - k]
            a += np.diag(d, -k)
            if k > 0:
                a += np.diag(d, k)
        return a

    def tocsr(self) -> scipy.sparse.csr_matrix:
        if self._csr is None:
            diags = []
            offsets = []
            for k in range(self.bandwidth + 1):
                d = self.bands[k, :self.order - k]
                diags.append(d)
                offsets.append(-k)
                if k > 0:
                    diags.append(d)
                    offsets.append(k)
            self._csr = scipy.sparse.diags_array(
                diags, offsets=offsets, shape=(self.order, self.order)).tocsr()
        return self._csr

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Matrix-vector or matrix-matrix product (columns of x)."""
        return self.tocsr() @ x

    def principal_submatrix(self, start: int, stop: int) -> "BandedSymMatrix":
        """Contiguous principal submatrix, band storage preserved."""
        size = stop - start
        b = min(self.bandwidth, size - 1)
        sub = BandedSymMatrix.zeros(size, b)
        for k in range(b + 1):
            sub.bands[k, :size - k] = self.bands[k, start:start + size - k]
        return sub

    def rectangular_block(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Dense copy of an arbitrary (rows x cols) block."""
        out = np.zeros((len(rows), len(cols)))
        for a, i in enumerate(rows):
            for b, j in enumerate(cols):
                out[a, b] = self.entry(int(i), int(j))
        return out

    @property
    def shape(self) -> tuple[int, int]:
        return (self.order, self.order)

    def __matmul__(self, x):
        return self.apply(x)


@dataclass
class CholeskyFactor:
    """Lower Cholesky factor of a banded or dense SPD matrix."""

    kind: str                  # "banded" | "dense"
    order: int
    factor: np.ndarray

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.order:
            raise ValueError(
                f"rhs has leading dimension {rhs.shape[0]}, expected {self.order}")
        if self.kind == "banded":
            return cho_solve_banded((self.factor, True), rhs)
        return cho_solve((self.factor, True), rhs)

    def toarray(self) -> np.ndarray:
        """Dense lower-triangular factor (test sizes only)."""
        if self.kind == "dense":
            return np.tril(self.factor)
        b = self.factor.shape[0] - 1
        a = np.zeros((self.order, self.order))
        for k in range(b + 1):
            a += np.diag(self.factor[k, :self.order - k], -k)
        return a


def cholesky(matrix: BandedSymMatrix | np.ndarray, what: str = "matrix") -> CholeskyFactor:
    """Cholesky factorization; raises :class:`NotSPDError` on failure."""
    if isinstance(matrix, BandedSymMatrix):
        c, info = lapack.dpbtrf(matrix.bands, lower=1)
        if info > 0:
            raise NotSPDError(info, what)
        if info < 0:
            raise ValueError(f"illegal argument {-info} to pbtrf")
        return CholeskyFactor("banded", matrix.order, c)
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("dense input must be square")
    c, info = lapack.dpotrf(a, lower=1)
    if info > 0:
        raise NotSPDError(info, what)
    if info < 0:
        raise ValueError(f"illegal argument {-info} to potrf")
    return CholeskyFactor("dense", a.shape[0], c)


def _as_operator(op):
    """Normalize to (shape, apply-to-matrix callable)."""
    if callable(op) and not hasattr(op, "shape"):
        raise ValueError("bare callables need a shape; pass a matrix-like object")
    return op.shape, (lambda x: op @ x)


def kron_apply(a_left, a_right, v: np.ndarray) -> np.ndarray:
    """Apply (a_left (x) a_right) to v without materializing the product.

    Views v as a matrix with C-ordering, applies ``a_right`` across rows and
    ``a_left`` across columns. Operators are matrix-likes with ``shape`` and
    ``@``; rectangular operators are allowed.
    """
    (rl, cl), apply_l = _as_operator(a_left)
    (rr, cr), apply_r = _as_operator(a_right)
    v = np.asarray(v)
    if v.shape != (cl * cr,):
        raise ValueError(
            f"vector length {v.shape} inconsistent with operator columns {cl}x{cr}")
    mat = v.reshape(cl, cr)
    # (A (x) B) vec_C(V) = vec_C(A V B^T)
    step = apply_r(mat.T).T        # V B^T, shape (cl, rr)
    out = apply_l(step)            # A V B^T, shape (rl, rr)
    return np.ascontiguousarray(out).reshape(rl * rr)


def generalized_eig_max(A, B, tol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Largest lambda with A x = lambda B x (A symmetric, B SPD).

    Dense reduction for order <= DENSE_EIG_LIMIT, power iteration on
    B^{-1} A beyond that.
    """
    if isinstance(A, BandedSymMatrix):
        A = A.toarray() if A.order <= DENSE_EIG_LIMIT else A.tocsr()
    if isinstance(B, BandedSymMatrix):
        B = B.toarray() if B.order <= DENSE_EIG_LIMIT else B
    n = A.shape[0]
    if n <= DENSE_EIG_LIMIT:
        A = np.asarray(A) if not scipy.sparse.issparse(A) else A.toarray()
        Bd = np.asarray(B) if not isinstance(B, BandedSymMatrix) else B.toarray()
        try:
            vals = eigh(A, Bd, eigvals_only=True)
        except np.linalg.LinAlgError as exc:
            raise NotSPDError(0, "B") from exc
        return float(vals[-1])

    if isinstance(B, BandedSymMatrix):
        bfac = cholesky(B, "B")
    else:
        bfac = cholesky(np.asarray(B), "B")
    rng = np.random.default_rng(12345)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = bfac.solve(A @ x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        y /= ny
        lam_new = float((y @ (A @ y)) / (y @ (_apply_b(B, y))))
        if abs(lam_new - lam) <= tol * (1.0 + abs(lam_new)):
            return lam_new
        lam, x = lam_new, y
    return lam


def _apply_b(B, y):
    if isinstance(B, BandedSymMatrix):
        return B.apply(y)
    return B @ y


def operator_norm(op, order: int | None = None, op_t=None,
                  tol: float = 1e-8, max_iter: int = 100_000) -> float:
    """Largest singular value via power iteration on M^T M.

    ``op`` is matrix-like (shape + ``@``); ``op_t`` overrides the transpose
    apply (defaults to ``op.T`` for arrays, ``op`` itself if symmetric use
    is intended pass it explicitly).
    """
    if op_t is None:
        op_t = op.T if hasattr(op, "T") else op
    rows, cols = op.shape
    rng = np.random.default_rng(54321)
    v = rng.standard_normal(cols)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = op @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        z = op_t @ w
        nz = np.linalg.norm(z)
        sigma_new = float(np.sqrt(nz))  # ||M^T M v|| -> sigma^2 when v normalized
        if nz == 0.0:
            return float(nw)
        v = z / nz
        if abs(sigma_new - sigma) <= tol * (1.0 + abs(sigma_new)):
            return sigma_new
        sigma = sigma_new
    return sigma
