"""Adaptive-quadrature oracles for the spike-and-slab normal-means model.

Posterior moments are computed by integrating likelihood x slab density with
QUADPACK (``scipy.integrate.quad``, adaptive Gauss-Kronrod) over
[-(10 sb + 10 se), 10 sb + 10 se], widened to reach |y| + 10 se for
observations in the far tail; the point mass is added analytically.  The
integrand is rescaled by its peak so the absolute tolerance is meaningful for
any y.  Nothing here uses the closed-form expressions in ``shrinkage``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .shrinkage import PriorSpec, Slab

ABS_TOL = 1e-10


_LOG_2PI = math.log(2.0 * math.pi)


def _norm_logpdf(x: float, scale: float) -> float:
    return -0.5 * (x / scale) ** 2 - 0.5 * _LOG_2PI - math.log(scale)


def _log_slab_density(prior: PriorSpec, b: float) -> float:
    sb = prior.sigma_beta
    if prior.slab is Slab.GAUSSIAN:
        return _norm_logpdf(b, sb)
    scale = sb / math.sqrt(2.0)
    return -abs(b) / scale - math.log(2.0 * scale)


def _slab_mode(prior: PriorSpec, y: float) -> float:
    se2, sb = prior.sigma_e ** 2, prior.sigma_beta
    if prior.slab is Slab.GAUSSIAN:
        return y * sb * sb / (se2 + sb * sb)
    shrink = math.sqrt(2.0) * se2 / sb
    return math.copysign(max(abs(y) - shrink, 0.0), y)


def slab_moments(prior: PriorSpec, y: float) -> tuple[float, float]:
    """log of int N(y; b, se^2) slab(b) db, and the slab posterior mean."""
    se = prior.sigma_e
    half = max(10.0 * prior.sigma_beta + 10.0 * se, abs(y) + 10.0 * se)

    def log_k(b):
        return _norm_logpdf(y - b, se) + _log_slab_density(prior, b)

    mode = min(max(_slab_mode(prior, y), -half), half)
    peak = log_k(mode)
    points = sorted({0.0, mode, min(max(y, -half), half)})

    def k0(b):
        return math.exp(log_k(b) - peak)

    def k1(b):
        return b * math.exp(log_k(b) - peak)

    opts = dict(epsabs=ABS_TOL, epsrel=1e-12, limit=400, points=points)
    i0, _ = integrate.quad(k0, -half, half, **opts)
    i1, _ = integrate.quad(k1, -half, half, **opts)
    return peak + math.log(i0), i1 / i0


def quadrature_marginal_density(prior: PriorSpec, y: float) -> float:
    log_slab, _ = slab_moments(prior, y)
    spike = (1.0 - prior.theta) * math.exp(_norm_logpdf(y, prior.sigma_e))
    return spike + prior.theta * math.exp(log_slab)


def quadrature_posterior_mean(prior: PriorSpec, y: float) -> float:
    """E[beta | y] = int b p(y|b) p(b) db / m(y) by quadrature."""
    if prior.theta == 0.0:
        return 0.0
    log_slab, slab_mean = slab_moments(prior, y)
    log_spike = (
        math.log(1.0 - prior.theta) + _norm_logpdf(y, prior.sigma_e)
        if prior.theta < 1.0
        else -math.inf
    )
    log_on = math.log(prior.theta) + log_slab
    pi = math.exp(log_on - np.logaddexp(log_on, log_spike))
    return pi * slab_mean


def quadrature_posterior_means(prior: PriorSpec, ys) -> np.ndarray:
    return np.array([quadrature_posterior_mean(prior, float(y)) for y in np.ravel(ys)])
