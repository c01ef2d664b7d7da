"""Intergrid transfer for dyadically refined spline spaces.

The prolongation is the canonical embedding of the coarse space into the fine
space: the matrix of knot insertion of all coarse-interval midpoints, built
row-wise with the Oslo algorithm (discrete B-splines). Restriction is the
transpose; 2D transfers are Kronecker squares applied factor-wise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .splines import SplineSpace

__all__ = [
    "Prolongation",
    "build_prolongation",
    "prolong",
    "restrict",
    "prolong_2d",
    "restrict_2d",
]


@dataclass
class Prolongation:
    """Sparse embedding matrix from a coarse space into its dyadic refinement."""

    coarse_dim: int
    fine_dim: int
    matrix: scipy.sparse.csr_matrix

    @property
    def shape(self) -> tuple[int, int]:
        return (self.fine_dim, self.coarse_dim)


def _insertion_row(t: np.ndarray, p: int, tau: np.ndarray, i: int,
                   mu: int) -> np.ndarray:
    """Discrete B-spline values b_{mu-p..mu, p}(i): row i of the knot
    insertion matrix from knots ``t`` to refined knots ``tau``."""
    row = np.zeros(p + 1)
    row[0] = 1.0
    for r in range(1, p + 1):
        x = tau[i + r]
        saved = 0.0
        for s in range(r):
            tl = t[mu - r + 1 + s]
            tr = t[mu + 1 + s]
            tmp = row[s] / (tr - tl)
            row[s] = saved + (tr - x) * tmp
            saved = (x - tl) * tmp
        row[r] = saved
    return row


def build_prolongation(coarse: SplineSpace, fine: SplineSpace) -> Prolongation:
    """Canonical embedding matrix for one dyadic refinement step."""
    if coarse.degree != fine.degree:
        raise ValueError(
            f"degree mismatch: coarse {coarse.degree}, fine {fine.degree}")
    if fine.intervals != 2 * coarse.intervals:
        raise ValueError(
            "refinement must be dyadic: fine intervals "
            f"{fine.intervals} != 2 * {coarse.intervals}")
    p = coarse.degree
    t, tau = coarse.knots, fine.knots
    nc = coarse.intervals

    rows, cols, vals = [], [], []
    for i in range(fine.dim):
        # span of tau[i] in the coarse knots, clamped to the last span
        mu = p + min(int(tau[i] * nc), nc - 1)
        row = _insertion_row(t, p, tau, i, mu)
        for s, v in enumerate(row):
            if v != 0.0:
                rows.append(i)
                cols.append(mu - p + s)
                vals.append(v)
    matrix = scipy.sparse.csr_matrix(
        (vals, (rows, cols)), shape=(fine.dim, coarse.dim))
    return Prolongation(coarse_dim=coarse.dim, fine_dim=fine.dim, matrix=matrix)


def prolong(P: Prolongation, coarse_vec: np.ndarray) -> np.ndarray:
    if coarse_vec.shape[0] != P.coarse_dim:
        raise ValueError("coarse vector length mismatch")
    return P.matrix @ coarse_vec


def restrict(P: Prolongation, fine_vec: np.ndarray) -> np.ndarray:
    if fine_vec.shape[0] != P.fine_dim:
        raise ValueError("fine vector length mismatch")
    return P.matrix.T @ fine_vec


def prolong_2d(P: Prolongation, coarse_vec: np.ndarray) -> np.ndarray:
    """Apply P (x) P without materializing the Kronecker product."""
    mc, mf = P.coarse_dim, P.fine_dim
    V = np.asarray(coarse_vec).reshape(mc, mc)
    out = P.matrix @ (P.matrix @ V.T).T
    return np.ascontiguousarray(out).reshape(mf * mf)


def restrict_2d(P: Prolongation, fine_vec: np.ndarray) -> np.ndarray:
    """Apply P^T (x) P^T without materializing the Kronecker product."""
    mc, mf = P.coarse_dim, P.fine_dim
    V = np.asarray(fine_vec).reshape(mf, mf)
    RT = P.matrix.T.tocsr()
    out = RT @ (RT @ V.T).T
    return np.ascontiguousarray(out).reshape(mc * mc)
