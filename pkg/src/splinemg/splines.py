"""Uniform open-knot B-spline spaces on (0,1).

Provides knot vector construction, local basis/derivative evaluation via the
Cox-de Boor recurrence, and the boundary/interior index split used by the
boundary-corrected smoother.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SplineSpace",
    "IndexSplit",
    "build_space",
    "find_span",
    "eval_basis",
    "eval_basis_derivatives",
    "eval_spline",
    "index_split",
]


@dataclass(frozen=True)
class SplineSpace:
    """Space of degree-p splines of maximum smoothness on a uniform grid.

    The grid splits (0,1) into ``intervals`` equal pieces; the basis is the
    normalized B-spline basis over the open knot vector (first and last knot
    repeated ``degree + 1`` times).
    """

    degree: int
    level: int
    intervals: int          # n = n0 * 2**level
    mesh_size: float        # h = 1 / n
    dim: int                # m = n + degree
    knots: np.ndarray       # length n + 2*degree + 1, read-only

    def __post_init__(self):
        self.knots.setflags(write=False)


@dataclass(frozen=True)
class IndexSplit:
    """0-based boundary/interior partition of the basis indices.

    ``boundary`` holds the first p and last p indices, ``interior`` the rest.
    Interior basis functions vanish at both endpoints together with all
    derivatives up to order p-1.
    """

    boundary: np.ndarray
    interior: np.ndarray


def build_space(p: int, level: int, n0: int = 1) -> SplineSpace:
    """Build the spline space of degree ``p`` on n0 * 2**level intervals.

    Raises ValueError for p < 1 or n0 < 1 or level < 0.
    """
    if p < 1:
        raise ValueError(f"degree must be >= 1, got {p}")
    if n0 < 1:
        raise ValueError(f"coarse interval count must be >= 1, got {n0}")
    if level < 0:
        raise ValueError(f"level must be >= 0, got {level}")
    n = n0 * 2**level
    h = 1.0 / n
    interior = np.arange(1, n) * h
    knots = np.concatenate([np.zeros(p + 1), interior, np.ones(p + 1)])
    return SplineSpace(degree=p, level=level, intervals=n, mesh_size=h,
                       dim=n + p, knots=knots)


def find_span(space: SplineSpace, x: float) -> int:
    """Knot-span index mu with knots[mu] <= x < knots[mu+1].

    Interior knots resolve to the right-hand span; x == 1 uses the last
    nonempty span.
    """
    p, n = space.degree, space.intervals
    # uniform interior knots: span offset is floor(x/h), clamped to n-1
    i = min(int(x * n), n - 1)
    return p + i


def eval_basis(space: SplineSpace, x: float) -> tuple[int, np.ndarray]:
    """Evaluate the p+1 (possibly) nonzero basis functions at x.

    Returns ``(first, values)`` where ``values[j]`` is basis function
    ``first + j`` evaluated at x. Raises ValueError if x is outside [0,1].
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"evaluation point {x} outside [0, 1]")
    p = space.degree
    t = space.knots
    mu = find_span(space, x)
    values = np.zeros(p + 1)
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    values[0] = 1.0
    for j in range(1, p + 1):
        left[j] = x - t[mu + 1 - j]
        right[j] = t[mu + j] - x
        saved = 0.0
        for r in range(j):
            tmp = values[r] / (right[r + 1] + left[j - r])
            values[r] = saved + right[r + 1] * tmp
            saved = left[j - r] * tmp
        values[j] = saved
    return mu - p, values


def eval_basis_derivatives(space: SplineSpace, x: float,
                           max_order: int) -> tuple[int, np.ndarray]:
    """Evaluate basis functions and derivatives up to ``max_order`` at x.

    Returns ``(first, ders)`` with ``ders[k, j]`` the k-th derivative of
    basis function ``first + j``. Row 0 matches :func:`eval_basis`.
    Raises ValueError unless 0 <= max_order <= p.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"evaluation point {x} outside [0, 1]")
    p = space.degree
    if not 0 <= max_order <= p:
        raise ValueError(f"max_order must be in [0, {p}], got {max_order}")
    t = space.knots
    mu = find_span(space, x)

    # ndu holds the basis-value triangle (upper part) and knot differences
    ndu = np.zeros((p + 1, p + 1))
    a = np.zeros((2, p + 1))
    ders = np.zeros((max_order + 1, p + 1))
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)

    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = x - t[mu + 1 - j]
        right[j] = t[mu + j] - x
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            tmp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * tmp
            saved = left[j - r] * tmp
        ndu[j, j] = saved

    ders[0, :] = ndu[:, p]
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, max_order + 1):
            d = 0.0
            rk = r - k
            pk = p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1

    fac = float(p)
    for k in range(1, max_order + 1):
        ders[k, :] *= fac
        fac *= p - k
    return mu - p, ders


def eval_spline(space: SplineSpace, coefficients: np.ndarray, x: float,
                order: int = 0) -> float:
    """Value (or ``order``-th derivative) at x of the spline with the given
    coefficient vector."""
    coefficients = np.asarray(coefficients)
    if coefficients.shape != (space.dim,):
        raise ValueError("coefficient vector length must equal space dim")
    if order == 0:
        first, vals = eval_basis(space, x)
    else:
        first, ders = eval_basis_derivatives(space, x, order)
        vals = ders[order]
    return float(vals @ coefficients[first:first + space.degree + 1])


def index_split(space: SplineSpace) -> IndexSplit:
    """Boundary (first p and last p) / interior index partition.

    Raises ValueError when the interior block would be empty (m <= 2p).
    """
    p, m = space.degree, space.dim
    if m <= 2 * p:
        raise ValueError(
            "interior space empty -- refine or lower degree "
            f"(dim {m} <= 2*degree {2 * p})")
    boundary = np.concatenate([np.arange(p), np.arange(m - p, m)])
    interior = np.arange(p, m - p)
    return IndexSplit(boundary=boundary, interior=interior)
