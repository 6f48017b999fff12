"""Brute-force best-subset oracles for small p.

These enumerate all 2^p supports with dense least squares (``numpy.linalg.lstsq``)
and share no code with the Cholesky-based solvers they are used to check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


def all_supports(p: int):
    for size in range(p + 1):
        yield from itertools.combinations(range(p), size)


def subset_ls(X: np.ndarray, y: np.ndarray, support) -> tuple[np.ndarray, float]:
    """Dense LS coefficients on ``support`` (length-p vector) and half-RSS."""
    p = X.shape[1]
    beta = np.zeros(p)
    idx = list(support)
    if idx:
        coef, *_ = np.linalg.lstsq(X[:, idx], y, rcond=None)
        beta[idx] = coef
    r = y - X @ beta
    return beta, 0.5 * float(r @ r)


@dataclass
class ExhaustiveResult:
    value: float
    support: tuple
    beta: np.ndarray


def best_l0_beta_form(X, y, lam: float) -> ExhaustiveResult:
    """Global minimum of 0.5||y - X beta||^2 + lam ||beta||_0 over all supports.

    The penalty counts actual nonzeros of the fitted vector.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    best = None
    for s in all_supports(X.shape[1]):
        beta, half_rss = subset_ls(X, y, s)
        val = half_rss + lam * np.count_nonzero(beta)
        if best is None or val < best.value:
            best = ExhaustiveResult(val, tuple(int(i) for i in np.flatnonzero(beta)), beta)
    return best


def best_l0_selection_form(X, y, lam: float) -> ExhaustiveResult:
    """Global minimum over indicator vectors gamma of 0.5||y - X_g a_g||^2 + lam ||gamma||_0."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    best = None
    for s in all_supports(X.shape[1]):
        beta, half_rss = subset_ls(X, y, s)
        val = half_rss + lam * len(s)
        if best is None or val < best.value:
            best = ExhaustiveResult(val, tuple(s), beta)
    return best


def best_subset_losses(X, y) -> tuple[float, np.ndarray]:
    """Half-RSS of the empty model and the best half-RSS for each size 1..p."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    p = X.shape[1]
    f = np.full(p + 1, np.inf)
    for s in all_supports(p):
        _, half_rss = subset_ls(X, y, s)
        f[len(s)] = min(f[len(s)], half_rss)
    return float(f[0]), f[1:]
