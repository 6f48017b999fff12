"""Quick oracle checks, run by ``l0kit verify``.

Each check compares a fast routine against an independent reference at a
reduced size and returns a one-line verdict.  The full-size versions live in
the test suite.
"""

from __future__ import annotations

import warnings
from typing import Callable, NamedTuple

import numpy as np

from .data import Dataset
from .exhaustive import best_l0_selection_form
from .linalg import cholesky_add_column, cholesky_build, cholesky_remove_column, empty_state
from .quadrature import quadrature_posterior_means
from .shrinkage import PriorSpec, Slab, bayes_risk, phi_build, posterior_mean, prox_numeric
from .solvers import SbrConfig, prox_l0, sbr_solve


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def check_cholesky(seed: int = 0, sequences: int = 100) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(sequences):
        p = int(rng.integers(2, 16))
        A = rng.standard_normal((p + 5, p))
        G = A.T @ A
        state = empty_state(float(np.max(np.diag(G))))
        for _ in range(3 * p):
            ids = list(state.column_ids)
            if ids and (len(ids) == p or rng.random() < 0.4):
                state = cholesky_remove_column(state, int(rng.integers(len(ids))))
            else:
                j = int(rng.choice([c for c in range(p) if c not in ids]))
                state = cholesky_add_column(state, G[ids, j], G[j, j], j)
            ids = list(state.column_ids)
            if ids:
                ref = cholesky_build(G[np.ix_(ids, ids)]).factor
                err = np.linalg.norm(state.factor - ref) / np.linalg.norm(ref)
                worst = max(worst, float(err))
    return CheckResult("cholesky updates", worst <= 1e-10, f"max relative error {worst:.2e}")


def check_sbr_exhaustive(seed: int = 0, instances: int = 10, p: int = 8) -> CheckResult:
    rng = np.random.default_rng(seed)
    below = 0
    hits = 0
    for _ in range(instances):
        ds = Dataset.from_arrays(rng.standard_normal((20, p)), rng.standard_normal(20))
        lam = float(rng.uniform(0.05, 0.5)) * 0.5 * ds.yty / p
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit = sbr_solve(ds, SbrConfig(lam=lam))
        best = best_l0_selection_form(ds.X, ds.y, lam)
        below += fit.objective < best.value - 1e-10
        hits += abs(fit.objective - best.value) <= 1e-10
    return CheckResult(
        "sbr vs exhaustive", below == 0, f"{hits}/{instances} at the global optimum, none below it"
    )


def check_prox_l0(seed: int = 0, cases: int = 10_000) -> CheckResult:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(cases) * 3
    lam = rng.exponential(2.0, cases)
    got = np.array([float(prox_l0(xi, li)) for xi, li in zip(x, lam)])
    f_zero = 0.5 * x ** 2
    f_keep = lam
    want = np.where(f_keep < f_zero, x, 0.0)
    bad = int(np.sum(got != want))
    return CheckResult("prox_l0 closed form", bad == 0, f"{bad} mismatches in {cases}")


def check_posterior_means(points: int = 41) -> CheckResult:
    ys = np.linspace(-10, 10, points)
    worst = 0.0
    for slab in (Slab.GAUSSIAN, Slab.LAPLACE):
        for theta in (0.1, 0.3):
            for sb in (1.0, 3.0, 10.0):
                prior = PriorSpec(theta, sb, 1.0, slab)
                err = np.max(np.abs(posterior_mean(prior, ys) - quadrature_posterior_means(prior, ys)))
                worst = max(worst, float(err))
    return CheckResult("posterior mean vs quadrature", worst <= 1e-6, f"max error {worst:.2e}")


def check_phi_fixed_point(points: int = 21) -> CheckResult:
    prior = PriorSpec(0.1, 3.0, 1.0, Slab.LAPLACE)
    table = phi_build(prior, np.linspace(-20, 20, 8001))
    pen = table.penalty(prior.sigma_e ** 2)
    ys = np.linspace(-9, 9, points)
    worst = max(abs(prox_numeric(pen, 1.0, float(y)) - float(posterior_mean(prior, y))) for y in ys)
    return CheckResult("phi proximal fixed point", worst <= 1e-4, f"max error {worst:.2e}")


def check_bayes_risk(seed: int = 0) -> CheckResult:
    prior = PriorSpec(1.0, 3.0, 1.0, Slab.GAUSSIAN)
    est = bayes_risk(prior, 100_000, seed)
    exact = 9.0 / 10.0
    z = abs(est.estimate - exact) / est.stderr
    return CheckResult("gaussian bayes risk", z <= 3.0, f"{est.estimate:.4f} vs {exact:.4f} ({z:.2f} s.e.)")


CHECKS: tuple[Callable[[], CheckResult], ...] = (
    check_cholesky,
    check_prox_l0,
    check_sbr_exhaustive,
    check_posterior_means,
    check_phi_fixed_point,
    check_bayes_risk,
)


def run_all() -> list:
    return [check() for check in CHECKS]
