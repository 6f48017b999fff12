"""Simulation protocol: collinear designs, SNR calibration, CV, paths, benchmarks."""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .baselines import EnetConfig, enet_fit, enet_lambda_grid, enet_path, ols_fit
from .data import Dataset, center_and_normalize
from .errors import ConvergenceWarning, DegenerateSignal, LengthMismatch
from .solvers import IhtConfig, SbrConfig, iht_constrained, pgd_l0, sbr_solve

TRUE_VALUES = (-5.0, -4.0, -3.0, -2.0, -1.0, 1.0, 2.0, 3.0, 4.0, 5.0)
METHODS = ("ols", "lasso", "enet", "sbr", "iht", "pgd")
DEFAULT_METHODS = ("ols", "lasso", "enet", "sbr")


@dataclass
class ExperimentConfig:
    n: int = 120
    p: int = 100
    d: int = 5
    snr_db: float = 20.0
    true_support_size: int = 10
    true_values: Sequence[float] = TRUE_VALUES
    seed: int = 0
    folds: int = 10
    lambda_grid: Optional[Sequence[float]] = None
    trials: int = 100
    enet_alpha: float = 0.5

    def __post_init__(self):
        if not 0 <= self.d <= self.p:
            raise ValueError("d must lie in [0, p]")
        if not 0 <= self.true_support_size <= self.p:
            raise ValueError("true_support_size must lie in [0, p]")
        if len(self.true_values) != self.true_support_size:
            raise ValueError("true_values must have true_support_size entries")
        if self.folds < 2:
            raise ValueError("folds must be at least 2")
        if not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")


@dataclass
class TrialResult:
    trial: int
    method: str
    mse: float
    true_positives: int
    false_positives: int
    wall_time: float
    lambda_used: float
    cv_time: float = 0.0
    selected: int = 0
    error: str = ""


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based (Philox) stream keyed by (master seed, trial index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(trial)])))


# --------------------------------------------------------------------------
# Data generation
# --------------------------------------------------------------------------


def make_design(config: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    """Rows from N_p(0, L L^T + I_p) with L a p x d standard normal matrix,
    then columns centered and scaled to unit Euclidean norm."""
    L = rng.standard_normal((config.p, config.d))
    X = rng.standard_normal((config.n, config.p))
    if config.d:
        X += rng.standard_normal((config.n, config.d)) @ L.T
    Xn, _, _ = center_and_normalize(X)
    return Xn


def make_beta(config: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    beta = np.zeros(config.p)
    pos = rng.choice(config.p, size=config.true_support_size, replace=False)
    beta[pos] = np.asarray(config.true_values, dtype=float)
    return beta


def calibrate_noise(xbeta: np.ndarray, snr_db: float) -> float:
    """sigma_e with 10 log10(var(X beta) / sigma_e^2) = snr_db (sample variance, n - 1)."""
    xbeta = np.asarray(xbeta, dtype=float)
    var = float(np.var(xbeta, ddof=1)) if xbeta.size > 1 else 0.0
    if not var > 0:
        raise DegenerateSignal("X beta is constant; SNR is undefined")
    return math.sqrt(var * 10.0 ** (-snr_db / 10.0))


def snr_db_of(xbeta: np.ndarray, sigma_e: float) -> float:
    return 10.0 * math.log10(float(np.var(xbeta, ddof=1)) / sigma_e ** 2)


@dataclass
class SimulatedData:
    dataset: Dataset
    beta: np.ndarray
    sigma_e: float


def simulate(config: ExperimentConfig, trial: int = 0) -> SimulatedData:
    rng = trial_rng(config.seed, trial)
    X = make_design(config, rng)
    beta = make_beta(config, rng)
    xb = X @ beta
    sigma_e = calibrate_noise(xb, config.snr_db)
    y = xb + sigma_e * rng.standard_normal(config.n)
    return SimulatedData(Dataset(X, y - y.mean()), beta, sigma_e)


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------


def _check_lengths(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths differ: {a.shape} vs {b.shape}")
    return a, b


def selection_metrics(beta_hat, beta_true) -> tuple[int, int]:
    """(true positives, false positives) of the nonzero pattern."""
    beta_hat, beta_true = _check_lengths(beta_hat, beta_true)
    sel = beta_hat != 0
    truth = beta_true != 0
    return int(np.sum(sel & truth)), int(np.sum(sel & ~truth))


def estimation_mse(beta_hat, beta_true) -> float:
    beta_hat, beta_true = _check_lengths(beta_hat, beta_true)
    diff = beta_hat - beta_true
    return float(diff @ diff)


# --------------------------------------------------------------------------
# Regularization paths and cross-validation
# --------------------------------------------------------------------------


def default_grid(dataset: Dataset, method: str, enet_alpha: float = 0.5) -> np.ndarray:
    if method in ("sbr", "pgd"):
        # the floor sits below sigma_e^2 at 20 dB SNR (about 1.7e-4 of half ||y||^2)
        half_sq = 0.5 * dataset.yty
        return np.geomspace(1e-4 * half_sq, half_sq, 40)
    if method == "lasso":
        return enet_lambda_grid(dataset, 1.0)
    if method == "enet":
        return enet_lambda_grid(dataset, enet_alpha)
    if method == "iht":
        return np.arange(1, min(dataset.p, dataset.n - 1, 30) + 1, dtype=float)
    if method == "ols":
        return np.array([0.0])
    raise ValueError(f"unknown method {method!r}")


def _sparse_first(method: str, grid: np.ndarray) -> np.ndarray:
    """Grid indices from the sparsest model to the densest."""
    if method == "iht":
        return np.argsort(grid, kind="stable")
    return np.argsort(-grid, kind="stable")


def fit_path(dataset: Dataset, method: str, grid, enet_alpha: float = 0.5) -> list:
    """Coefficient vectors along ``grid`` (same order as given), warm-started
    from the sparse end."""
    grid = np.asarray(grid, dtype=float)
    order = _sparse_first(method, grid)
    betas = [None] * grid.size
    if method == "ols":
        beta = ols_fit(dataset).beta
        return [beta.copy() for _ in grid]
    if method in ("lasso", "enet"):
        alpha = 1.0 if method == "lasso" else enet_alpha
        for i, fit in zip(order, enet_path(dataset, grid[order], alpha=alpha)):
            betas[i] = fit.beta
        return betas
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        support: Sequence[int] = ()
        beta = None
        for i in order:
            g = grid[i]
            if method == "sbr":
                fit = sbr_solve(dataset, SbrConfig(lam=float(g), initial_support=support))
                support = fit.support
            elif method == "pgd":
                fit = pgd_l0(dataset, IhtConfig(lam=float(g), initial_beta=beta, convergence_tolerance=1e-8))
            elif method == "iht":
                fit = iht_constrained(dataset, IhtConfig(k=int(g), initial_beta=beta, convergence_tolerance=1e-8))
            else:
                raise ValueError(f"unknown method {method!r}")
            beta = fit.beta
            betas[i] = fit.beta
    return betas


def fit_single(dataset: Dataset, method: str, value: float, enet_alpha: float = 0.5):
    """One solve at a chosen regularization value (lam, or k for IHT)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        if method == "ols":
            return ols_fit(dataset)
        if method == "sbr":
            return sbr_solve(dataset, SbrConfig(lam=float(value)))
        if method == "lasso":
            return enet_fit(dataset, EnetConfig(lam=float(value), alpha=1.0))
        if method == "enet":
            return enet_fit(dataset, EnetConfig(lam=float(value), alpha=enet_alpha))
        if method == "pgd":
            return pgd_l0(dataset, IhtConfig(lam=float(value), convergence_tolerance=1e-8))
        if method == "iht":
            return iht_constrained(dataset, IhtConfig(k=int(value), convergence_tolerance=1e-8))
    raise ValueError(f"unknown method {method!r}")


@dataclass
class CVResult:
    lambda_cv: float
    grid: np.ndarray
    cv_curve: np.ndarray
    fold_mse: np.ndarray = field(repr=False, default=None)


def fold_indices(n: int, folds: int, seed: int) -> list:
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, folds)


def cross_validate(
    dataset: Dataset,
    method: str,
    lambda_grid=None,
    folds: int = 10,
    seed: int = 0,
    enet_alpha: float = 0.5,
) -> CVResult:
    """K-fold CV of held-out mean squared prediction error.

    Training folds are re-centered (X columns and y) and the held-out fold is
    predicted with the training means.  The selected value minimizes the mean
    curve; ties go to the sparser model (larger lam, or smaller k for IHT).
    """
    if folds < 2:
        raise ValueError("folds must be at least 2")
    grid = default_grid(dataset, method, enet_alpha) if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("lambda grid is empty")
    parts = fold_indices(dataset.n, folds, seed)
    fold_mse = np.zeros((folds, grid.size))
    all_rows = np.arange(dataset.n)
    for f, test in enumerate(parts):
        train = np.setdiff1d(all_rows, test)
        Xtr, ytr = dataset.X[train], dataset.y[train]
        xm, ym = Xtr.mean(axis=0), ytr.mean()
        sub = Dataset(Xtr - xm, ytr - ym)
        betas = fit_path(sub, method, grid, enet_alpha)
        pred_base = dataset.X[test] - xm
        for g, beta in enumerate(betas):
            resid = dataset.y[test] - (ym + pred_base @ beta)
            fold_mse[f, g] = float(resid @ resid) / max(test.size, 1)
    curve = fold_mse.mean(axis=0)
    best = curve.min()
    for i in _sparse_first(method, grid):
        if curve[i] <= best * (1.0 + 1e-12):
            return CVResult(float(grid[i]), grid, curve, fold_mse)
    raise AssertionError("unreachable")


@dataclass
class PathTable:
    lambdas: np.ndarray
    coefficients: np.ndarray
    method: str = ""


def solution_path(dataset: Dataset, method: str, lambda_cv: float, points: int = 50, enet_alpha: float = 0.5) -> PathTable:
    """Coefficients on ``points`` log-spaced lam values in [lambda_cv/2, 4 lambda_cv].

    Rows are returned with lam increasing; SBR fits are warm-started from
    the support found at the next larger lam.
    """
    if not lambda_cv > 0:
        raise ValueError("lambda_cv must be positive")
    lams = np.geomspace(0.5 * lambda_cv, 4.0 * lambda_cv, points)
    betas = fit_path(dataset, method, lams, enet_alpha)
    return PathTable(lams, np.vstack(betas), method)


# --------------------------------------------------------------------------
# Benchmark
# --------------------------------------------------------------------------


def run_method(sim: SimulatedData, method: str, config: ExperimentConfig, trial: int) -> TrialResult:
    ds = sim.dataset
    try:
        t0 = time.perf_counter()
        if method == "ols":
            value = 0.0
        else:
            grid = None if method not in ("sbr", "pgd") or config.lambda_grid is None else config.lambda_grid
            cv = cross_validate(ds, method, grid, config.folds, seed=_fold_seed(config.seed, trial), enet_alpha=config.enet_alpha)
            value = cv.lambda_cv
        cv_time = time.perf_counter() - t0
        fit = fit_single(ds, method, value, config.enet_alpha)
        tp, fp = selection_metrics(fit.beta, sim.beta)
        return TrialResult(
            trial=trial,
            method=method,
            mse=estimation_mse(fit.beta, sim.beta),
            true_positives=tp,
            false_positives=fp,
            wall_time=fit.wall_time,
            lambda_used=float(value),
            cv_time=cv_time,
            selected=len(fit.support),
        )
    except Exception as exc:  # recorded per trial, not fatal
        return TrialResult(trial, method, float("nan"), 0, 0, float("nan"), float("nan"), error=f"{type(exc).__name__}: {exc}")


def _fold_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(trial), 1]).generate_state(1)[0])


def run_trial(config: ExperimentConfig, methods: Sequence[str], trial: int) -> list:
    sim = simulate(config, trial)
    return [run_method(sim, m, config, trial) for m in methods]


def _run_trial_args(args):
    return run_trial(*args)


def run_benchmark(config: ExperimentConfig, methods: Sequence[str] = DEFAULT_METHODS, threads: int = 1) -> list:
    """All trials x methods, ordered by trial then method."""
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    jobs = [(config, tuple(methods), t) for t in range(config.trials)]
    if threads > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_run_trial_args, jobs))
    else:
        chunks = [_run_trial_args(j) for j in jobs]
    return [r for chunk in chunks for r in chunk]


def summarize(results: Sequence[TrialResult]) -> list:
    """Per-method median MSE, mean TP/FP and mean solver time."""
    rows = []
    methods = list(dict.fromkeys(r.method for r in results))
    for m in methods:
        ok = [r for r in results if r.method == m and not r.error]
        fail = sum(1 for r in results if r.method == m and r.error)
        if ok:
            rows.append(dict(
                method=m,
                median_mse=float(np.median([r.mse for r in ok])),
                mean_tp=float(np.mean([r.true_positives for r in ok])),
                mean_fp=float(np.mean([r.false_positives for r in ok])),
                mean_time=float(np.mean([r.wall_time for r in ok])),
                mean_cv_time=float(np.mean([r.cv_time for r in ok])),
                trials=len(ok),
                failed=fail,
            ))
        else:
            rows.append(dict(method=m, median_mse=float("nan"), mean_tp=float("nan"), mean_fp=float("nan"),
                             mean_time=float("nan"), mean_cv_time=float("nan"), trials=0, failed=fail))
    return rows
