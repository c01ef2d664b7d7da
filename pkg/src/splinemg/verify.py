"""Desk-scale numerical verification of the method's spectral estimates.

Everything here materializes small dense matrices and measures the constants
behind the solver's robustness: the inverse inequality on the constrained
subspace, the unconstrained boundary blow-up, the approximation constant of
the constrained space, and the two factors (approximation and smoothing
properties) of the two-grid convergence bound.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .assembly import assemble_1d, operator_2d
from .linalg import generalized_eig_max, operator_norm
from .smoother import build_smoother_1d, build_smoother_2d, \
    smoother_matrix_1d, smoother_matrix_2d
from .solver import TAU_DEFAULT, _materialize_operator_2d
from .splines import SplineSpace, build_space, eval_basis_derivatives, \
    index_split
from .transfer import build_prolongation

__all__ = [
    "ConstraintBasis",
    "InverseInequalityResult",
    "INVERSE_BOUND",
    "APPROX_BOUND",
    "DENSE_VERIFY_LIMIT",
    "build_constraint_basis",
    "verify_inverse_inequality",
    "verify_counterexample",
    "verify_approximation_constant",
    "measure_CA",
    "measure_smoothing_constant",
]

#: theoretical bound on h * sqrt(lambda_max(K, M)) over the constrained space
INVERSE_BOUND = 2.0 * np.sqrt(3.0)
#: theoretical bound on the constrained-space L2 approximation constant
APPROX_BOUND = 2.0 * np.sqrt(2.0)
#: largest 1D dimension for which the dense verification paths are allowed
DENSE_VERIFY_LIMIT = 300


@dataclass
class ConstraintBasis:
    """Coefficient-space basis of the splines whose odd derivatives of order
    below p vanish at both endpoints."""

    space: SplineSpace
    basis: np.ndarray          # m x dim, orthonormal columns

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def build_constraint_basis(space: SplineSpace) -> ConstraintBasis:
    """Nullspace of the odd-endpoint-derivative constraints.

    Rows are normalized before the rank decision since derivative scales
    span many orders of magnitude; row scaling does not change the nullspace.
    """
    p, m = space.degree, space.dim
    orders = list(range(1, p, 2))
    if not orders:
        return ConstraintBasis(space, np.eye(m))
    rows = []
    for x in (0.0, 1.0):
        first, ders = eval_basis_derivatives(space, x, p - 1)
        for q in orders:
            row = np.zeros(m)
            row[first:first + p + 1] = ders[q]
            rows.append(row / np.linalg.norm(row))
    G = np.array(rows)
    Q, R, _ = scipy.linalg.qr(G.T, pivoting=True)
    rank = int((np.abs(np.diag(R)) > 1e-10).sum())
    if rank != len(rows):
        raise ValueError(
            f"constraint matrix rank {rank} below expected {len(rows)}")
    basis = Q[:, rank:]
    if basis.shape[1] == 0:
        raise ValueError("constrained spline space is empty")
    return ConstraintBasis(space, basis)


@dataclass
class InverseInequalityResult:
    """Measured inverse-inequality constants h * sqrt(lambda_max(K, M))."""

    constrained: float         # over the odd-derivative-constrained space
    interior: float            # over the interior-coefficient block

    @property
    def bound(self) -> float:
        return INVERSE_BOUND


def _check_dense(space: SplineSpace):
    if space.dim > DENSE_VERIFY_LIMIT:
        raise ValueError(
            f"dimension {space.dim} exceeds dense verification limit "
            f"{DENSE_VERIFY_LIMIT}")


def verify_inverse_inequality(p: int, level: int,
                              n0: int = 1) -> InverseInequalityResult:
    """Measure the gradient-vs-value bound on the constrained subspace.

    Returns h * sqrt(lambda_max) for the constrained space and for the
    interior block; each is expected not to exceed INVERSE_BOUND.
    """
    space = build_space(p, level, n0)
    _check_dense(space)
    disc = assemble_1d(space)
    Kd, Md = disc.K.toarray(), disc.M.toarray()
    N = build_constraint_basis(space).basis
    lam = generalized_eig_max(N.T @ Kd @ N, N.T @ Md @ N)
    constrained = space.mesh_size * np.sqrt(max(lam, 0.0))

    s = index_split(space)
    KI = Kd[np.ix_(s.interior, s.interior)]
    MI = Md[np.ix_(s.interior, s.interior)]
    lam_i = generalized_eig_max(KI, MI)
    interior = space.mesh_size * np.sqrt(max(lam_i, 0.0))
    return InverseInequalityResult(constrained=float(constrained),
                                   interior=float(interior))


def verify_counterexample(p: int, level: int, n0: int = 1) -> float:
    """Measure h * sqrt(lambda_max(K, M)) over the full space.

    This grows at least like p, which is why the uncorrected mass smoother
    needs a damping parameter shrinking like p^-2.
    """
    space = build_space(p, level, n0)
    _check_dense(space)
    disc = assemble_1d(space)
    lam = generalized_eig_max(disc.K.toarray(), disc.M.toarray())
    return float(space.mesh_size * np.sqrt(max(lam, 0.0)))


def _composite_prolongation(p, coarse_level, fine_level, n0=1):
    mat = None
    cur = build_space(p, coarse_level, n0)
    for lev in range(coarse_level + 1, fine_level + 1):
        nxt = build_space(p, lev, n0)
        step = build_prolongation(cur, nxt).matrix
        mat = step if mat is None else step @ mat
        cur = nxt
    return mat


def _sym_sqrt(mat: np.ndarray, power: float = 0.5) -> np.ndarray:
    w, v = np.linalg.eigh(mat)
    w = np.clip(w, np.finfo(float).tiny, None)
    return v @ np.diag(w**power) @ v.T


def verify_approximation_constant(p: int, level: int, proxy_levels: int = 4,
                                  n0: int = 1) -> float:
    """L2 approximation constant of the constrained space at one level.

    The supremum over H^1 is approximated from a ``proxy_levels``-times finer
    spline space, which can only underestimate it, so the measured value must
    stay below APPROX_BOUND.
    """
    coarse = build_space(p, level, n0)
    fine = build_space(p, level + proxy_levels, n0)
    _check_dense(fine)
    disc = assemble_1d(fine)
    Af, Mf = disc.A.toarray(), disc.M.toarray()

    P = _composite_prolongation(p, level, level + proxy_levels, n0)
    Z = P.toarray() @ build_constraint_basis(coarse).basis
    # A-orthogonal projector onto the embedded constrained space
    T = Z @ np.linalg.solve(Z.T @ Af @ Z, Z.T @ Af)
    X = _sym_sqrt(Mf) @ (np.eye(fine.dim) - T) @ _sym_sqrt(Af, -0.5)
    return float(operator_norm(X) / coarse.mesh_size)


def _dense_pair(p, level, d, tau, damping, n0=1):
    """Dense (system matrix, effective smoother matrix, coarse projector
    ingredients) at one level for the given dimension."""
    fine = build_space(p, level, n0)
    coarse = build_space(p, level - 1, n0)
    if d == 1:
        _check_dense(fine)
    elif fine.dim > DENSE_VERIFY_LIMIT // 10:
        raise ValueError("2D size exceeds dense verification limit")
    df, dc = assemble_1d(fine), assemble_1d(coarse)
    P1 = build_prolongation(coarse, fine).matrix.toarray()
    if d == 1:
        A, Ac, P = df.A.toarray(), dc.A.toarray(), P1
        sm = build_smoother_1d(df, tau, damping)
        L_eff = smoother_matrix_1d(sm, df, damped=True)
    else:
        A = _materialize_operator_2d(operator_2d(df))
        Ac = _materialize_operator_2d(operator_2d(dc))
        P = np.kron(P1, P1)
        s2 = build_smoother_2d(df, tau)
        L_eff = smoother_matrix_2d(s2, df) / tau
    return A, Ac, P, L_eff


def measure_CA(p: int, level: int, d: int = 1, tau: float | None = None,
               damping: str | None = None, n0: int = 1) -> float:
    """Measured approximation-property constant between two adjacent levels.

    Computes the norm of L^(1/2) (I - T) A^(-1) L^(1/2) densely, where T is
    the coarse-grid A-orthogonal projector and L the effective smoother
    matrix (the one the damped smoothing step actually inverts, so that this
    constant and the smoothing constant refer to the same norm).
    """
    if tau is None:
        tau = TAU_DEFAULT[d]
    if damping is None:
        damping = "mass" if d == 1 else "plain"
    A, Ac, P, L_eff = _dense_pair(p, level, d, tau, damping, n0)
    T = P @ np.linalg.solve(Ac, P.T @ A)
    Lhalf = _sym_sqrt(L_eff)
    X = Lhalf @ (np.eye(A.shape[0]) - T) @ np.linalg.solve(A, Lhalf)
    X = 0.5 * (X + X.T)        # symmetric PSD up to roundoff
    return float(operator_norm(X))


def measure_smoothing_constant(p: int, level: int, nu: int, d: int = 1,
                               tau: float | None = None,
                               damping: str | None = None,
                               n0: int = 1) -> float:
    """nu * || L^(-1/2) A S^nu L^(-1/2) || for the damped smoother S.

    L is the effective smoother matrix, so S = I - L^(-1) A; the measured
    value is expected to stay below 1/tau.
    """
    if tau is None:
        tau = TAU_DEFAULT[d]
    if damping is None:
        damping = "mass" if d == 1 else "plain"
    A, _, _, L_eff = _dense_pair(p, level, d, tau, damping, n0)
    lam = scipy.linalg.eigh(A, L_eff, eigvals_only=True)
    return float(nu * np.abs(lam * (1.0 - lam)**nu).max())


def smoother_energy_norm(p: int, level: int, d: int = 1,
                         tau: float | None = None,
                         damping: str | None = None, n0: int = 1) -> float:
    """||S||_A of the damped smoothing step (at most 1 for admissible tau)."""
    if tau is None:
        tau = TAU_DEFAULT[d]
    if damping is None:
        damping = "mass" if d == 1 else "plain"
    A, _, _, L_eff = _dense_pair(p, level, d, tau, damping, n0)
    lam = scipy.linalg.eigh(A, L_eff, eigvals_only=True)
    return float(np.abs(1.0 - lam).max())
