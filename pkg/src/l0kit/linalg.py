"""Cholesky factors of active-set Gram matrices with column add/remove updates.

The factor is kept for ``G_S = X_S^T X_S`` where ``S`` is an ordered list of
column ids.  Adding a column appends it at the end of ``S``; removing a column
deletes it wherever it sits and restores triangularity with plane rotations.
Both updates cost O(|S|^2).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NotPositiveDefinite

PIVOT_RTOL = 1e-10


@dataclass(frozen=True)
class CholeskyState:
    """Lower-triangular ``factor`` with ``factor @ factor.T == G_S``.

    ``scale`` is the reference diagonal magnitude used for the pivot test
    (normally the largest diagonal entry of the full Gram matrix).
    """

    factor: np.ndarray
    column_ids: tuple
    scale: float = 1.0

    @property
    def order(self) -> int:
        return len(self.column_ids)

    @property
    def pivot_tolerance(self) -> float:
        return PIVOT_RTOL * self.scale

    def gram(self) -> np.ndarray:
        return self.factor @ self.factor.T


def empty_state(scale: float = 1.0) -> CholeskyState:
    return CholeskyState(np.zeros((0, 0)), (), float(scale))


def cholesky_build(
    gram: np.ndarray,
    column_ids: Optional[Sequence[int]] = None,
    scale: Optional[float] = None,
) -> CholeskyState:
    """Factor a symmetric positive-definite matrix.

    Raises
    ------
    NotPositiveDefinite
        If any pivot (squared diagonal of the factor) is at or below
        ``1e-10 * scale``; ``scale`` defaults to the largest diagonal entry.
    """
    gram = np.asarray(gram, dtype=float)
    m = gram.shape[0]
    if gram.shape != (m, m):
        raise ValueError("gram must be square")
    if column_ids is None:
        column_ids = range(m)
    column_ids = tuple(int(c) for c in column_ids)
    if len(column_ids) != m or len(set(column_ids)) != m:
        raise ValueError("column_ids must be distinct and match the Gram size")
    if scale is None:
        scale = float(np.max(np.diag(gram))) if m else 1.0
    if m == 0:
        return CholeskyState(np.zeros((0, 0)), (), float(scale))
    if not np.allclose(gram, gram.T, rtol=1e-12, atol=1e-12 * scale):
        raise ValueError("gram must be symmetric")
    try:
        L = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("matrix is not positive definite") from exc
    pivots = np.diag(L) ** 2
    bad = np.flatnonzero(~(pivots > PIVOT_RTOL * scale))
    if bad.size:
        raise NotPositiveDefinite(
            f"pivot {pivots[bad[0]]:.3e} at position {bad[0]} is below tolerance"
        )
    return CholeskyState(L, column_ids, float(scale))


def cholesky_add_column(
    state: CholeskyState, new_cross: np.ndarray, new_diag: float, column_id: Optional[int] = None
) -> CholeskyState:
    """Append one column given its inner products with the active columns.

    ``new_cross[i]`` is ``<x_new, x_{column_ids[i]}>`` and ``new_diag`` is
    ``<x_new, x_new>``.
    """
    m = state.order
    new_cross = np.asarray(new_cross, dtype=float)
    if new_cross.shape != (m,):
        raise ValueError(f"new_cross must have length {m}")
    if column_id is None:
        column_id = max(state.column_ids, default=-1) + 1
    if column_id in state.column_ids:
        raise ValueError(f"column {column_id} is already active")
    if m:
        w = solve_triangular(state.factor, new_cross, lower=True, check_finite=False)
    else:
        w = new_cross
    schur = float(new_diag) - float(w @ w)
    if not schur > state.pivot_tolerance:
        raise NotPositiveDefinite(
            f"Schur complement {schur:.3e} is below tolerance; column is collinear"
        )
    L = np.zeros((m + 1, m + 1))
    L[:m, :m] = state.factor
    L[m, :m] = w
    L[m, m] = np.sqrt(schur)
    return CholeskyState(L, state.column_ids + (int(column_id),), state.scale)


def cholesky_remove_column(state: CholeskyState, position: int) -> CholeskyState:
    """Drop the column at ``position`` and retriangularize with Givens rotations."""
    m = state.order
    if not 0 <= position < m:
        raise IndexError(f"position {position} out of range for order {m}")
    ids = state.column_ids[:position] + state.column_ids[position + 1:]
    L = np.delete(state.factor, position, axis=0)
    # Rows position.. now carry one entry right of the diagonal.
    for j in range(position, m - 1):
        a, b = L[j, j], L[j, j + 1]
        r = np.hypot(a, b)
        if r == 0.0:
            continue
        c, s = a / r, b / r
        cj = L[j:, j].copy()
        cj1 = L[j:, j + 1]
        L[j:, j] = c * cj + s * cj1
        L[j:, j + 1] = c * cj1 - s * cj
        L[j, j + 1] = 0.0
    return CholeskyState(np.ascontiguousarray(L[:, : m - 1]), ids, state.scale)


def solve_active_ls(state: CholeskyState, xty: np.ndarray) -> np.ndarray:
    """Solve ``G_S beta = xty`` with two triangular solves.

    ``xty`` may also be a matrix with ``order`` rows (one solve per column).
    """
    xty = np.asarray(xty, dtype=float)
    if xty.ndim not in (1, 2) or xty.shape[0] != state.order:
        raise ValueError(f"xty must have {state.order} rows")
    if state.order == 0:
        return np.zeros(xty.shape)
    z = solve_triangular(state.factor, xty, lower=True, check_finite=False)
    return solve_triangular(state.factor.T, z, lower=False, check_finite=False)


def factor_inverse_diag(state: CholeskyState) -> np.ndarray:
    """Diagonal of ``G_S^{-1}``, used to price single-column removals."""
    if state.order == 0:
        return np.zeros(0)
    Linv = solve_triangular(state.factor, np.eye(state.order), lower=True, check_finite=False)
    return np.einsum("ij,ij->j", Linv, Linv)


def power_iteration(A: np.ndarray, tol: float = 1e-8, max_iter: int = 10_000, seed: int = 0) -> float:
    """Largest eigenvalue of a symmetric positive semi-definite matrix."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    v = np.random.default_rng(seed).standard_normal(A.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = A @ v
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        new = float(nrm)
        v = w / nrm
        if abs(new - lam) <= tol * abs(new):
            return new
        lam = new
    return lam
