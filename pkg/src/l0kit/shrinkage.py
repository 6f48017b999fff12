"""Spike-and-slab shrinkage for the normal-means problem.

For ``y | beta ~ N(beta, sigma_e^2)`` and a prior that mixes a point mass at
zero with a Gaussian or Laplace slab, this module gives the marginal density
m(y), its score d/dy log m(y), closed-form posterior means, Tweedie's formula,
Monte Carlo Bayes risk, numerical Moreau envelopes / proximal maps, and the
penalty phi whose proximal map reproduces the posterior mean.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator
from scipy.special import log_ndtr

from .errors import (
    BracketFailure,
    InvalidPrior,
    NonMonotonePosteriorMean,
    NotPositiveDefinite,
    OutOfRange,
    RootNotBracketed,
    SingularDesign,
)
from .linalg import cholesky_build, solve_active_ls

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)


class Slab(str, enum.Enum):
    GAUSSIAN = "gaussian"
    LAPLACE = "laplace"


@dataclass(frozen=True)
class PriorSpec:
    """Point mass at zero with weight ``1 - theta`` plus a slab with weight ``theta``.

    The Gaussian slab is N(0, sigma_beta^2); the Laplace slab has density
    exp(-sqrt(2)|b|/sigma_beta) / (sqrt(2) sigma_beta), i.e. variance sigma_beta^2.
    """

    theta: float
    sigma_beta: float
    sigma_e: float = 1.0
    slab: Slab = Slab.GAUSSIAN

    def __post_init__(self):
        object.__setattr__(self, "slab", Slab(self.slab))
        if not 0.0 <= self.theta <= 1.0:
            raise InvalidPrior("theta must lie in [0, 1]")
        if not (self.sigma_beta > 0 and self.sigma_e > 0):
            raise InvalidPrior("sigma_beta and sigma_e must be positive")

    @property
    def label(self) -> str:
        tag = "bg" if self.slab is Slab.GAUSSIAN else "bl"
        return f"{tag}_theta{self.theta:g}_sb{self.sigma_beta:g}"


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _log_normal(y, var):
    return -0.5 * y * y / var - _LOG_SQRT_2PI - 0.5 * math.log(var)


def _laplace_log_f(prior: PriorSpec, y):
    """log F(y) with F(y) = exp(sqrt2 y/sb) * Phi(-y/se - sqrt2 se/sb)."""
    a = _SQRT2 / prior.sigma_beta
    return a * y + log_ndtr(-y / prior.sigma_e - a * prior.sigma_e)


def _log_slab_marginal(prior: PriorSpec, y):
    se, sb = prior.sigma_e, prior.sigma_beta
    if prior.slab is Slab.GAUSSIAN:
        return _log_normal(y, se * se + sb * sb)
    return (
        -math.log(_SQRT2 * sb)
        + se * se / (sb * sb)
        + np.logaddexp(_laplace_log_f(prior, y), _laplace_log_f(prior, -y))
    )


def _components(prior: PriorSpec, y):
    y = np.asarray(y, dtype=float)
    log_spike = _log(1.0 - prior.theta) + _log_normal(y, prior.sigma_e ** 2)
    log_slab = _log(prior.theta) + _log_slab_marginal(prior, y)
    return y, log_spike, log_slab


def log_marginal_density(prior: PriorSpec, y):
    _, log_spike, log_slab = _components(prior, y)
    return np.logaddexp(log_spike, log_slab)


def marginal_density(prior: PriorSpec, y):
    """m(y) for the spike-and-slab prior."""
    return np.exp(log_marginal_density(prior, y))


def slab_probability(prior: PriorSpec, y):
    """Posterior probability that beta came from the slab."""
    _, log_spike, log_slab = _components(prior, y)
    return np.exp(log_slab - np.logaddexp(log_spike, log_slab))


def _laplace_tanh(prior: PriorSpec, y):
    """(F(y) - F(-y)) / (F(y) + F(-y)), computed on the log scale."""
    return np.tanh(0.5 * (_laplace_log_f(prior, y) - _laplace_log_f(prior, -y)))


def marginal_score(prior: PriorSpec, y):
    """d/dy log m(y)."""
    y = np.asarray(y, dtype=float)
    se2 = prior.sigma_e ** 2
    pi = slab_probability(prior, y)
    if prior.slab is Slab.GAUSSIAN:
        slab_score = -y / (se2 + prior.sigma_beta ** 2)
    else:
        slab_score = _SQRT2 / prior.sigma_beta * _laplace_tanh(prior, y)
    return (1.0 - pi) * (-y / se2) + pi * slab_score


def tweedie_posterior_mean(marginal_log_gradient: Callable, sigma_e: float, y):
    """E[beta | y] = y + sigma_e^2 * d/dy log m(y)."""
    y = np.asarray(y, dtype=float)
    return y + sigma_e ** 2 * marginal_log_gradient(y)


def posterior_mean_bg(prior: PriorSpec, y):
    """Bernoulli-Gaussian posterior mean w(y) * y.

    w(y) is the slab posterior probability times the ridge factor
    sb^2 / (se^2 + sb^2); the slab component of m(y) is N(0, se^2 + sb^2).
    """
    if prior.slab is not Slab.GAUSSIAN:
        raise ValueError("posterior_mean_bg needs a Gaussian slab")
    y = np.asarray(y, dtype=float)
    sb2 = prior.sigma_beta ** 2
    ridge = sb2 / (prior.sigma_e ** 2 + sb2)
    return ridge * slab_probability(prior, y) * y


def posterior_mean_bl(prior: PriorSpec, y):
    """Bernoulli-Laplace posterior mean.

    (y - sqrt2 se^2/sb * (F(-y) - F(y))/(F(-y) + F(y))) * pi(y), with pi(y)
    the slab posterior probability.
    """
    if prior.slab is not Slab.LAPLACE:
        raise ValueError("posterior_mean_bl needs a Laplace slab")
    y = np.asarray(y, dtype=float)
    shift = _SQRT2 * prior.sigma_e ** 2 / prior.sigma_beta
    slab_mean = y - shift * _laplace_tanh(prior, -y)
    return slab_mean * slab_probability(prior, y)


def posterior_mean(prior: PriorSpec, y):
    if prior.slab is Slab.GAUSSIAN:
        return posterior_mean_bg(prior, y)
    return posterior_mean_bl(prior, y)


def posterior_mean_regression(X, Sigma, score: Callable, y) -> np.ndarray:
    """(X^T S^-1 X)^-1 X^T (S^-1 y + grad_y log m(y)) via Cholesky solves."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    try:
        sig = cholesky_build(Sigma)
    except NotPositiveDefinite as exc:
        raise SingularDesign("noise covariance is not positive definite") from exc
    sinv_x = solve_active_ls(sig, X)
    sinv_y = solve_active_ls(sig, y)
    A = X.T @ sinv_x
    A = 0.5 * (A + A.T)
    try:
        state = cholesky_build(A)
    except NotPositiveDefinite as exc:
        raise SingularDesign("X^T Sigma^-1 X is singular") from exc
    return solve_active_ls(state, X.T @ (sinv_y + np.asarray(score(y), dtype=float)))


def sample_prior(prior: PriorSpec, size: int, rng: np.random.Generator) -> np.ndarray:
    on = rng.random(size) < prior.theta
    if prior.slab is Slab.GAUSSIAN:
        slab = rng.normal(0.0, prior.sigma_beta, size)
    else:
        slab = rng.laplace(0.0, prior.sigma_beta / _SQRT2, size)
    return np.where(on, slab, 0.0)


class RiskEstimate(NamedTuple):
    estimate: float
    stderr: float


def bayes_risk(prior: PriorSpec, n_samples: int = 100_000, seed: int = 0) -> RiskEstimate:
    """Monte Carlo estimate of se^2 (1 - se^2 I(m)), I(m) the Fisher information of m."""
    if n_samples < 10_000:
        raise ValueError("n_samples must be at least 1e4")
    rng = np.random.default_rng(seed)
    beta = sample_prior(prior, n_samples, rng)
    y = beta + rng.normal(0.0, prior.sigma_e, n_samples)
    s2 = marginal_score(prior, y) ** 2
    se2 = prior.sigma_e ** 2
    risk = se2 * (1.0 - se2 * float(s2.mean()))
    stderr = se2 * se2 * float(s2.std(ddof=1)) / math.sqrt(n_samples)
    return RiskEstimate(risk, stderr)


# --------------------------------------------------------------------------
# Moreau envelope and proximal map by direct search
# --------------------------------------------------------------------------

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _vectorized(f):
    """``f`` itself if it maps arrays elementwise, else a scalar-looping wrapper."""
    probe = np.array([0.0, 1.0, 2.0])
    try:
        if np.shape(f(probe)) == probe.shape:
            return f
    except (TypeError, ValueError):
        pass
    return np.vectorize(lambda t: float(f(float(t))), otypes=[float])


def _evaluate(f, z):
    return np.asarray(f(z), dtype=float)


def _golden(obj, a, b, tol):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = obj(c), obj(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = obj(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = obj(d)
    z = 0.5 * (a + b)
    return z, obj(z)


def _prox_search(f, gamma: float, x: float, grid_points: int = 4001, tol: float = 1e-10):
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    x = float(x)
    f = _vectorized(f)
    half = 10.0 * (abs(x) + gamma + 1.0)

    def obj(z):
        return float(_evaluate(f, np.array([z]))[0]) + (z - x) ** 2 / (2.0 * gamma)

    for _ in range(4):
        z = np.unique(np.concatenate([np.linspace(x - half, x + half, grid_points), [0.0, x]]))
        z = z[(z >= x - half) & (z <= x + half)]
        vals = _evaluate(f, z) + (z - x) ** 2 / (2.0 * gamma)
        vals = np.where(np.isnan(vals), np.inf, vals)
        i = int(np.argmin(vals))
        if 0 < i < z.size - 1:
            break
        half *= 2.0
    else:
        raise BracketFailure(f"minimizer stuck at the search boundary around x={x}")
    z_ref, v_ref = _golden(obj, z[i - 1], z[i + 1], tol)
    if v_ref <= vals[i]:
        return z_ref, v_ref
    return float(z[i]), float(vals[i])


def prox_numeric(f: Callable, gamma: float, x: float) -> float:
    """argmin_z f(z) + (z - x)^2 / (2 gamma), by grid search then golden section.

    ``f`` should accept numpy arrays; scalar-only callables are vectorized.
    """
    return _prox_search(f, gamma, x)[0]


def moreau_envelope(f: Callable, gamma: float, x: float) -> float:
    """inf_z f(z) + (z - x)^2 / (2 gamma)."""
    return _prox_search(f, gamma, x)[1]


# --------------------------------------------------------------------------
# Penalty implied by the posterior mean
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PhiTable:
    """Tabulated penalty phi on an increasing grid of z values.

    When ``slopes`` (dphi/dz at the nodes) are known the table interpolates
    with a cubic Hermite spline through them; otherwise it falls back to
    monotone (PCHIP) cubic interpolation.  Both are exact at the nodes.
    """

    grid: np.ndarray
    phi_values: np.ndarray
    normalization_c: float = float("nan")
    prior: Optional[PriorSpec] = None
    y_hat: Optional[np.ndarray] = None
    slopes: Optional[np.ndarray] = None
    _interp: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        vals = np.asarray(self.phi_values, dtype=float)
        if grid.ndim != 1 or grid.shape != vals.shape:
            raise ValueError("grid and phi_values must be 1-d and of equal length")
        if grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing with at least two points")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "phi_values", vals)
        if self.slopes is not None:
            interp = CubicHermiteSpline(grid, vals, np.asarray(self.slopes, dtype=float), extrapolate=False)
        else:
            interp = PchipInterpolator(grid, vals, extrapolate=False)
        object.__setattr__(self, "_interp", interp)

    def penalty(self, scale: float = 1.0, outside: float = np.inf) -> Callable:
        """Vectorized ``scale * phi(z)``, returning ``outside`` beyond the grid."""
        lo, hi = self.grid[0], self.grid[-1]

        def fn(z):
            z = np.asarray(z, dtype=float)
            inside = (z >= lo) & (z <= hi)
            out = np.full(z.shape, outside, dtype=float)
            out[inside] = scale * self._interp(z[inside])
            return out

        return fn

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["z", "phi"])
            for z, v in zip(self.grid, self.phi_values):
                w.writerow([repr(float(z)), repr(float(v))])

    @classmethod
    def from_csv(cls, path) -> "PhiTable":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or [c.strip() for c in rows[0]] != ["z", "phi"]:
            raise ValueError("expected header 'z,phi'")
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        return cls(data[:, 0], data[:, 1])


def phi_eval(table: PhiTable, z):
    """Interpolated penalty at z; raises OutOfRange beyond the table."""
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < table.grid[0]) or np.any(z_arr > table.grid[-1]):
        raise OutOfRange(f"z outside [{table.grid[0]}, {table.grid[-1]}]")
    out = table._interp(z_arr)
    return float(out) if np.ndim(out) == 0 else out


def check_monotone_posterior_mean(prior: PriorSpec, lo: float, hi: float, points: int = 2001):
    ys = np.linspace(lo, hi, points)
    if np.any(np.diff(posterior_mean(prior, ys)) <= 0):
        raise NonMonotonePosteriorMean(
            f"posterior mean is not strictly increasing on [{lo}, {hi}]"
        )


def invert_posterior_mean(
    prior: PriorSpec, z, tol: float = 1e-12, max_iter: int = 400, check: bool = True
) -> np.ndarray:
    """Solve E[beta | y] = z for y by vectorized bisection."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    lo = -np.abs(z) - 1.0
    hi = np.abs(z) + 1.0
    for _ in range(64):
        short = posterior_mean(prior, hi) < z
        if not short.any():
            break
        hi = np.where(short, 2.0 * hi, hi)
    else:
        raise RootNotBracketed("could not bracket E[beta|y] = z from above")
    for _ in range(64):
        over = posterior_mean(prior, lo) > z
        if not over.any():
            break
        lo = np.where(over, 2.0 * lo, lo)
    else:
        raise RootNotBracketed("could not bracket E[beta|y] = z from below")
    if check:
        check_monotone_posterior_mean(prior, float(lo.min()), float(hi.max()))

    y_hat = np.zeros_like(z)
    done = np.zeros(z.shape, dtype=bool)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        e = posterior_mean(prior, mid)
        fresh = ~done & ((np.abs(e - z) <= tol) | (hi - lo <= 4e-16 * np.maximum(1.0, np.abs(mid))))
        y_hat[fresh] = mid[fresh]
        done |= fresh
        if done.all():
            break
        below = e < z
        lo = np.where(~done & below, mid, lo)
        hi = np.where(~done & ~below, mid, hi)
    else:
        y_hat[~done] = 0.5 * (lo + hi)[~done]
    return y_hat


def phi_direct(prior: PriorSpec, z, y_hat=None) -> np.ndarray:
    """phi(z) = -(y_hat - z)^2 / (2 se^2) - log m(y_hat) + log m(0)."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if y_hat is None:
        y_hat = invert_posterior_mean(prior, z)
    c = float(log_marginal_density(prior, 0.0))
    return -((y_hat - z) ** 2) / (2.0 * prior.sigma_e ** 2) - log_marginal_density(prior, y_hat) + c


def phi_build(prior: PriorSpec, z_grid) -> PhiTable:
    """Tabulate the penalty whose proximal map is the posterior mean.

    For each z, y_hat solves E[beta | y_hat] = z; the constant is log m(0) so
    that phi(0) = 0.  The grid should cover the range later queried by
    ``phi_eval``; ``default_phi_grid`` spans [-20 se, 20 se].
    """
    z = np.asarray(z_grid, dtype=float)
    y_hat = invert_posterior_mean(prior, z)
    phi = phi_direct(prior, z, y_hat)
    # dphi/dz = -(log m)'(y_hat) = (y_hat - z) / se^2 by Tweedie
    slopes = (y_hat - z) / prior.sigma_e ** 2
    return PhiTable(z, phi, float(log_marginal_density(prior, 0.0)), prior, y_hat, slopes)


def default_phi_grid(sigma_e: float = 1.0, points: int = 8001) -> np.ndarray:
    return np.linspace(-20.0 * sigma_e, 20.0 * sigma_e, points)
