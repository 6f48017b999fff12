"""l0-regularized least squares: SBR, iterative hard thresholding, proximal gradient.

Every penalized objective here is written on the half-squared loss,

    F(beta) = 0.5 * ||y - X beta||^2 + lam * ||beta||_0,

so ``lam`` means the same thing for SBR, PGD and the exhaustive oracles.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .data import Dataset
from .errors import (
    CollinearSupport,
    InvalidPrior,
    MaxIterationsExceeded,
    MaxStepsExceeded,
    NotMonotone,
    NotPositiveDefinite,
)
from .linalg import (
    CholeskyState,
    cholesky_add_column,
    cholesky_build,
    cholesky_remove_column,
    factor_inverse_diag,
    power_iteration,
    solve_active_ls,
)


@dataclass
class SparseFit:
    """Result of a sparse regression solve.

    Attributes
    ----------
    beta : ndarray of shape (p,)
    support : tuple of int
        Sorted indices of the nonzero entries of ``beta``.
    objective : float
        Value of the objective the solver minimized, at ``beta``.
    lam : float
        Regularization weight (0 for unpenalized or constrained fits).
    iterations : int
    wall_time : float
        Seconds spent inside the solver.
    converged : bool
    history : list of float
        Objective after each accepted step or iteration.
    """

    beta: np.ndarray
    support: tuple
    objective: float
    lam: float = 0.0
    iterations: int = 0
    wall_time: float = 0.0
    converged: bool = True
    history: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.support)


@dataclass
class SbrConfig:
    lam: float
    initial_support: Sequence[int] = ()
    max_steps: Optional[int] = None
    improvement_tolerance: float = 1e-12

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("SBR needs lam > 0")


@dataclass
class IhtConfig:
    """Settings for hard-thresholding iterations.

    Exactly one of ``k`` (sparsity budget, constrained form) or ``lam``
    (penalized form) is set.  ``step_size=None`` means 1/L with L the largest
    eigenvalue of X^T X.
    """

    k: Optional[int] = None
    lam: Optional[float] = None
    step_size: Optional[float] = None
    max_iterations: int = 10_000
    convergence_tolerance: float = 1e-10
    initial_beta: Optional[np.ndarray] = None

    def __post_init__(self):
        if (self.k is None) == (self.lam is None):
            raise ValueError("set exactly one of k or lam")
        if self.step_size is not None and not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.k is not None and self.k < 0:
            raise ValueError("k must be nonnegative")
        if self.lam is not None and self.lam < 0:
            raise ValueError("lam must be nonnegative")


def support_of(beta: np.ndarray) -> tuple:
    return tuple(int(i) for i in np.flatnonzero(beta))


def l0_objective(dataset: Dataset, beta: np.ndarray, lam: float) -> float:
    """0.5 * ||y - X beta||^2 + lam * ||beta||_0."""
    return dataset.loss(beta) + lam * np.count_nonzero(beta)


def single_replacement(support: Iterable[int], i: int) -> tuple:
    """Toggle membership of ``i``: add it if absent, remove it if present."""
    s = set(int(j) for j in support)
    s.symmetric_difference_update({int(i)})
    return tuple(sorted(s))


def hard_threshold_top_k(x: np.ndarray, k: int) -> np.ndarray:
    """Keep the ``k`` largest-magnitude entries; ties go to the lower index."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    if k <= 0:
        return out
    if k >= x.size:
        return x.copy()
    keep = np.argsort(-np.abs(x), kind="stable")[:k]
    out[keep] = x[keep]
    return out


def prox_l0(x, lam: float):
    """Proximal map of ``lam * ||.||_0`` under 0.5 * (z - x)^2 coupling.

    Entries with ``x_i**2 > 2 * lam`` are kept, the rest (including the tie
    ``x_i**2 == 2 * lam``) are set to zero.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    x = np.asarray(x, dtype=float)
    return np.where(x * x > 2.0 * lam, x, 0.0)


def _pivot_scale(dataset: Dataset) -> float:
    d = np.diag(dataset.gram)
    m = float(d.max()) if d.size else 1.0
    return m if m > 0 else 1.0


def _active_state(dataset: Dataset, support: Sequence[int], scale: float) -> CholeskyState:
    ids = [int(i) for i in support]
    G = dataset.gram
    try:
        return cholesky_build(G[np.ix_(ids, ids)], ids, scale=scale)
    except NotPositiveDefinite as exc:
        raise CollinearSupport(f"active columns {sorted(ids)} are collinear") from exc


def _half_rss(dataset: Dataset, ids: Sequence[int], beta_s: np.ndarray) -> float:
    if len(ids) == 0:
        return 0.5 * dataset.yty
    r = dataset.y - dataset.X[:, list(ids)] @ beta_s
    return 0.5 * float(r @ r)


def f_sbr(dataset: Dataset, support: Iterable[int], lam: float) -> float:
    """Least-squares loss on ``support`` plus ``lam * |support|``."""
    ids = sorted(set(int(i) for i in support))
    state = _active_state(dataset, ids, _pivot_scale(dataset))
    beta_s = solve_active_ls(state, dataset.xty[ids])
    return _half_rss(dataset, ids, beta_s) + lam * len(ids)


def _assemble(p: int, ids: Sequence[int], beta_s: np.ndarray) -> np.ndarray:
    beta = np.zeros(p)
    if len(ids):
        beta[list(ids)] = beta_s
    return beta


def replacement_deltas(
    dataset: Dataset, state: CholeskyState, beta_s: np.ndarray, lam: float
) -> np.ndarray:
    """Change in f_SBR for toggling each column, from the current factor.

    Adding column i lowers the half-RSS by ``0.5 * c_i**2 / d_i`` where
    ``c_i = x_i^T r`` and ``d_i`` is the Schur complement of ``x_i`` against
    the active set.  Removing an active column at position q raises it by
    ``0.5 * beta_q**2 / [G_S^{-1}]_qq``.  Collinear additions get +inf.
    """
    G, b = dataset.gram, dataset.xty
    p = G.shape[0]
    ids = list(state.column_ids)
    gdiag = np.diag(G)
    if ids:
        W = solve_triangular(state.factor, G[ids, :], lower=True, check_finite=False)
        schur = gdiag - np.einsum("ij,ij->j", W, W)
        corr = b - G[:, ids] @ beta_s
    else:
        schur = gdiag.astype(float).copy()
        corr = b.astype(float)
    delta = np.full(p, np.inf)
    ok = schur > state.pivot_tolerance
    delta[ok] = lam - 0.5 * corr[ok] ** 2 / schur[ok]
    if ids:
        inv_diag = factor_inverse_diag(state)
        delta[ids] = 0.5 * beta_s ** 2 / inv_diag - lam
    return delta


def sbr_solve(dataset: Dataset, config: SbrConfig) -> SparseFit:
    """Single Best Replacement search for the l0-penalized least squares.

    Starting from ``config.initial_support`` the search repeatedly applies the
    single addition or removal that lowers f_SBR the most, and stops once no
    toggle improves it by more than ``improvement_tolerance * |f|``.  Ties in
    the best toggle go to the lowest column index.  The returned support is
    1-swap optimal.
    """
    t0 = time.perf_counter()
    lam = float(config.lam)
    p = dataset.p
    max_steps = 10 * p if config.max_steps is None else int(config.max_steps)
    tol = float(config.improvement_tolerance)
    scale = _pivot_scale(dataset)

    init = sorted(set(int(i) for i in config.initial_support))
    if any(i < 0 or i >= p for i in init):
        raise ValueError("initial_support indices must lie in [0, p)")
    state = _active_state(dataset, init, scale)
    b = dataset.xty
    beta_s = solve_active_ls(state, b[list(state.column_ids)])
    obj = _half_rss(dataset, state.column_ids, beta_s) + lam * state.order
    history = [obj]
    converged = False
    steps = 0
    while steps < max_steps:
        delta = replacement_deltas(dataset, state, beta_s, lam)
        j = int(np.argmin(delta))
        if not delta[j] < -tol * abs(obj):
            converged = True
            break
        if j in state.column_ids:
            new_state = cholesky_remove_column(state, state.column_ids.index(j))
        else:
            ids = list(state.column_ids)
            try:
                new_state = cholesky_add_column(
                    state, dataset.gram[j, ids], dataset.gram[j, j], column_id=j
                )
            except NotPositiveDefinite:
                converged = True
                break
        new_beta = solve_active_ls(new_state, b[list(new_state.column_ids)])
        new_obj = _half_rss(dataset, new_state.column_ids, new_beta) + lam * new_state.order
        if not new_obj < obj - tol * abs(obj):
            # predicted gain did not survive recomputation
            converged = True
            break
        state, beta_s, obj = new_state, new_beta, new_obj
        history.append(obj)
        steps += 1
    else:
        # max_steps reached; converged only if nothing is left to improve
        delta = replacement_deltas(dataset, state, beta_s, lam)
        converged = not bool(np.min(delta) < -tol * abs(obj))

    if not converged:
        warnings.warn(f"SBR stopped after {max_steps} steps", MaxStepsExceeded, stacklevel=2)

    beta = _assemble(p, state.column_ids, beta_s)
    return SparseFit(
        beta=beta,
        support=support_of(beta),
        objective=l0_objective(dataset, beta, lam),
        lam=lam,
        iterations=steps,
        wall_time=time.perf_counter() - t0,
        converged=converged,
        history=history,
    )


def lipschitz_constant(dataset: Dataset) -> float:
    """Largest eigenvalue of X^T X by power iteration (tolerance 1e-8)."""
    return power_iteration(dataset.gram, tol=1e-8)


def _threshold_iterations(dataset: Dataset, config: IhtConfig, project) -> tuple:
    G, b = dataset.gram, dataset.xty
    if config.step_size is None:
        L = lipschitz_constant(dataset)
        step = 1.0 / L if L > 0 else 1.0
    else:
        step = float(config.step_size)
    beta = np.zeros(dataset.p) if config.initial_beta is None else project(
        np.asarray(config.initial_beta, dtype=float), step
    )
    history = []
    converged = False
    it = 0
    for it in range(1, config.max_iterations + 1):
        new = project(beta - step * (G @ beta - b), step)
        moved = np.linalg.norm(new - beta)
        beta = new
        history.append(beta)
        if moved <= config.convergence_tolerance:
            converged = True
            break
    return beta, it, converged, history, step


def iht_constrained(dataset: Dataset, config: IhtConfig) -> SparseFit:
    """Iterative hard thresholding for min 0.5||y - X beta||^2 s.t. ||beta||_0 <= k."""
    if config.k is None:
        raise ValueError("iht_constrained needs config.k")
    t0 = time.perf_counter()
    k = int(config.k)
    beta, it, converged, iterates, step = _threshold_iterations(
        dataset, config, lambda v, _s: hard_threshold_top_k(v, k)
    )
    if not converged:
        warnings.warn(f"IHT stopped after {it} iterations", MaxIterationsExceeded, stacklevel=2)
    return SparseFit(
        beta=beta,
        support=support_of(beta),
        objective=dataset.loss(beta),
        lam=0.0,
        iterations=it,
        wall_time=time.perf_counter() - t0,
        converged=converged,
        history=[dataset.loss(v) for v in iterates],
        info={"k": k, "step_size": step},
    )


def pgd_l0(dataset: Dataset, config: IhtConfig) -> SparseFit:
    """Proximal gradient descent on 0.5||y - X beta||^2 + lam ||beta||_0.

    With step ``s`` the proximal step is ``prox_l0(., s * lam)``, i.e. hard
    thresholding at ``sqrt(2 * s * lam)``.
    """
    if config.lam is None:
        raise ValueError("pgd_l0 needs config.lam")
    t0 = time.perf_counter()
    lam = float(config.lam)
    beta, it, converged, iterates, step = _threshold_iterations(
        dataset, config, lambda v, s: prox_l0(v, s * lam)
    )
    if not converged:
        warnings.warn(f"PGD stopped after {it} iterations", MaxIterationsExceeded, stacklevel=2)
    return SparseFit(
        beta=beta,
        support=support_of(beta),
        objective=l0_objective(dataset, beta, lam),
        lam=lam,
        iterations=it,
        wall_time=time.perf_counter() - t0,
        converged=converged,
        history=[l0_objective(dataset, v, lam) for v in iterates],
        info={"step_size": step},
    )


def map_objective(dataset: Dataset, gamma, alpha, prior) -> float:
    """Spike-and-slab MAP objective in (gamma, alpha) form.

    ||y - X_gamma alpha_gamma||^2 + (se^2/sb^2) ||alpha||^2
        + 2 se^2 log((1 - theta)/theta) ||gamma||_0
    """
    theta = prior.theta
    if not 0.0 < theta < 1.0:
        raise InvalidPrior("theta must lie strictly between 0 and 1")
    gamma = np.asarray(gamma).astype(bool)
    alpha = np.asarray(alpha, dtype=float)
    r = dataset.y - dataset.X[:, gamma] @ alpha[gamma]
    se2, sb2 = prior.sigma_e ** 2, prior.sigma_beta ** 2
    return (
        float(r @ r)
        + se2 / sb2 * float(alpha @ alpha)
        + 2.0 * se2 * np.log((1.0 - theta) / theta) * int(gamma.sum())
    )


def lambda_from_prior(prior) -> float:
    """Penalty weight sigma_e^2 * log((1 - theta)/theta) implied by the prior."""
    theta = prior.theta
    if not 0.0 < theta < 0.5:
        raise InvalidPrior("theta must lie in (0, 1/2) for a positive penalty")
    return prior.sigma_e ** 2 * float(np.log((1.0 - theta) / theta))


def lambda_interval_for_k(f: Sequence[float], k: int, f0: Optional[float] = None):
    """Range of ``lam`` for which the penalized optimum has exactly ``k`` terms.

    ``f[i-1]`` is the best half-RSS over supports of size ``i`` (i = 1..p) and
    ``f0`` is the half-RSS of the empty model, if it should be considered.
    Size ``k`` beats size ``i`` iff ``lam * (i - k) >= f_k - f_i``, so

        max_{i>k} (f_k - f_i)/(i - k) <= lam <= min_{j<k} (f_j - f_k)/(k - j).

    For neighbouring sizes this is the plain difference of losses.  Returns
    ``(lower, upper)`` or ``None`` when the interval is empty.
    """
    f = np.asarray(f, dtype=float)
    p = f.size
    if not 1 <= k <= p:
        raise ValueError("k must lie in [1, len(f)]")
    full = f if f0 is None else np.concatenate([[f0], f])
    slack = 1e-12 * max(1.0, float(np.max(np.abs(full))))
    if np.any(np.diff(full) > slack):
        raise NotMonotone("best-subset losses must be non-increasing in size")
    sizes = np.arange(1, p + 1) if f0 is None else np.arange(0, p + 1)
    fk = f[k - 1]
    above = sizes > k
    below = sizes < k
    lower = float(np.max((fk - full[above]) / (sizes[above] - k))) if above.any() else 0.0
    upper = float(np.min((full[below] - fk) / (k - sizes[below]))) if below.any() else np.inf
    lower = max(lower, 0.0)
    if lower > upper:
        return None
    return lower, upper
