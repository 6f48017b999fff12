
import numpy as np
import pytest
from scipy import stats

from l0kit import shrinkage as sh
from l0kit.errors import (
    BracketFailure,
    InvalidPrior,
    NonMonotonePosteriorMean,
    OutOfRange,
    SingularDesign,
)
from l0kit.quadrature import quadrature_marginal_density, quadrature_posterior_means
from l0kit.shrinkage import PhiTable, PriorSpec, Slab
from l0kit.solvers import prox_l0

GRID = np.linspace(-10, 10, 201)
PRIORS = [
    PriorSpec(theta, sb, 1.0, slab)
    for slab in (Slab.GAUSSIAN, Slab.LAPLACE)
    for theta in (0.1, 0.3)
    for sb in (1.0, 3.0, 10.0)
]


def ids(p):
    return p.label


class TestPriorSpec:
    def test_validation(self):
        with pytest.raises(InvalidPrior):
            PriorSpec(1.5, 1.0)
        with pytest.raises(InvalidPrior):
            PriorSpec(0.1, 0.0)
        with pytest.raises(InvalidPrior):
            PriorSpec(0.1, 1.0, -1.0)

    def test_slab_from_string(self):
        assert PriorSpec(0.1, 1.0, slab="laplace").slab is Slab.LAPLACE

    def test_label(self):
        assert PriorSpec(0.1, 3.0).label == "bg_theta0.1_sb3"


class TestMarginal:
    def test_theta_zero(self):
        for slab in Slab:
            pr = PriorSpec(0.0, 2.0, 1.5, slab)
            np.testing.assert_allclose(sh.marginal_density(pr, GRID), stats.norm.pdf(GRID, scale=1.5), rtol=1e-12)

    def test_theta_one_gaussian(self):
        pr = PriorSpec(1.0, 2.0, 1.5)
        np.testing.assert_allclose(sh.marginal_density(pr, GRID), stats.norm.pdf(GRID, scale=2.5), rtol=1e-12)

    @pytest.mark.parametrize("prior", [p for p in PRIORS if p.slab is Slab.LAPLACE], ids=ids)
    def test_laplace_vs_quadrature(self, prior):
        ys = GRID[::5]
        quad = np.array([quadrature_marginal_density(prior, y) for y in ys])
        np.testing.assert_allclose(sh.marginal_density(prior, ys), quad, rtol=1e-9)

    def test_bl_large_y_finite(self):
        pr = PriorSpec(0.1, 0.5, 1.0, Slab.LAPLACE)
        vals = sh.log_marginal_density(pr, np.array([50.0, 200.0, -400.0]))
        assert np.all(np.isfinite(vals))

    @pytest.mark.parametrize("prior", PRIORS, ids=ids)
    def test_score_matches_finite_difference(self, prior):
        y, h = GRID[::7], 1e-5
        fd = (sh.log_marginal_density(prior, y + h) - sh.log_marginal_density(prior, y - h)) / (2 * h)
        np.testing.assert_allclose(sh.marginal_score(prior, y), fd, atol=1e-7)


class TestPosteriorMean:
    @pytest.mark.parametrize("prior", PRIORS, ids=ids)
    def test_tweedie_consistency(self, prior):
        tw = sh.tweedie_posterior_mean(lambda y: sh.marginal_score(prior, y), prior.sigma_e, GRID)
        np.testing.assert_allclose(tw, sh.posterior_mean(prior, GRID), atol=1e-8)

    @pytest.mark.parametrize("prior", PRIORS, ids=ids)
    def test_quadrature(self, prior):
        np.testing.assert_allclose(sh.posterior_mean(prior, GRID), quadrature_posterior_means(prior, GRID), atol=1e-6)

    @pytest.mark.parametrize("prior", PRIORS, ids=ids)
    def test_shrinks_toward_zero(self, prior):
        m = sh.posterior_mean(prior, GRID)
        assert np.all(np.abs(m) <= np.abs(GRID) + 1e-15)
        assert np.all((m == 0) | (np.sign(m) == np.sign(GRID)))

    def test_zero_maps_to_zero(self):
        for p in PRIORS:
            assert sh.posterior_mean(p, 0.0) == 0.0

    def test_gaussian_conjugate(self):
        pr = PriorSpec(1.0, 2.0, 1.0)
        tw = sh.tweedie_posterior_mean(lambda y: sh.marginal_score(pr, y), 1.0, GRID)
        np.testing.assert_allclose(tw, 0.8 * GRID, atol=1e-13)
        np.testing.assert_allclose(sh.posterior_mean_bg(pr, GRID), 0.8 * GRID, atol=1e-13)

    def test_theta_zero(self):
        for slab in Slab:
            assert np.all(sh.posterior_mean(PriorSpec(0.0, 3.0, 1.0, slab), GRID) == 0)

    def test_family_mismatch(self):
        with pytest.raises(ValueError):
            sh.posterior_mean_bg(PriorSpec(0.1, 1.0, slab=Slab.LAPLACE), 1.0)
        with pytest.raises(ValueError):
            sh.posterior_mean_bl(PriorSpec(0.1, 1.0), 1.0)

    def test_symmetric_odd(self):
        for p in PRIORS:
            np.testing.assert_allclose(sh.posterior_mean(p, GRID), -sh.posterior_mean(p, -GRID), atol=1e-13)


class TestRegressionForm:
    def setup_method(self):
        rng = np.random.default_rng(8)
        self.X = rng.standard_normal((10, 3))
        self.y = rng.standard_normal(10)

    def gaussian_score(self, sigma, tau):
        C = sigma ** 2 * np.eye(10) + tau ** 2 * self.X @ self.X.T
        return lambda y: -np.linalg.solve(C, y)

    def test_ridge_closed_form(self):
        sigma, tau = 1.2, 0.7
        got = sh.posterior_mean_regression(self.X, sigma ** 2 * np.eye(10), self.gaussian_score(sigma, tau), self.y)
        ridge = np.linalg.solve(self.X.T @ self.X + (sigma / tau) ** 2 * np.eye(3), self.X.T @ self.y)
        np.testing.assert_allclose(got, ridge, rtol=1e-10, atol=1e-12)

    def test_flat_prior_is_ols(self):
        got = sh.posterior_mean_regression(self.X, 2.0 * np.eye(10), lambda y: np.zeros_like(y), self.y)
        np.testing.assert_allclose(got, np.linalg.lstsq(self.X, self.y, rcond=None)[0], rtol=1e-10)

    def test_monte_carlo(self):
        sigma, tau = 2.0, 1.0
        got = sh.posterior_mean_regression(self.X, sigma ** 2 * np.eye(10), self.gaussian_score(sigma, tau), self.y)
        rng = np.random.default_rng(0)
        b = rng.normal(0.0, tau, (1_000_000, 3))
        r = self.y[None, :] - b @ self.X.T
        logw = -0.5 * np.einsum("ij,ij->i", r, r) / sigma ** 2
        w = np.exp(logw - logw.max())
        mc = (w[:, None] * b).sum(axis=0) / w.sum()
        np.testing.assert_allclose(got, mc, rtol=2e-3, atol=2e-3)

    def test_singular(self):
        X = np.column_stack([self.X[:, 0], self.X[:, 0]])
        with pytest.raises(SingularDesign):
            sh.posterior_mean_regression(X, np.eye(10), lambda y: np.zeros_like(y), self.y)


class TestBayesRisk:
    def test_gaussian_within_three_se(self):
        pr = PriorSpec(1.0, 3.0, 1.0)
        est = sh.bayes_risk(pr, 100_000, seed=1)
        assert abs(est.estimate - 0.9) <= 3 * est.stderr

    def test_collapsing_slab(self):
        est = sh.bayes_risk(PriorSpec(1.0, 1e-4, 1.0), 20_000, seed=2)
        assert abs(est.estimate) <= 3 * est.stderr

    def test_bg_dominance(self):
        est = sh.bayes_risk(PriorSpec(0.3, 3.0, 1.0), 100_000, seed=3)
        assert est.estimate < min(1.0, 0.9)

    def test_needs_enough_samples(self):
        with pytest.raises(ValueError):
            sh.bayes_risk(PriorSpec(1.0, 1.0), 100)


class TestProx:
    @pytest.mark.parametrize("x", [-3.0, -0.2, 0.0, 1.7, 9.0])
    def test_quadratic(self, x):
        f = lambda z: 0.5 * z ** 2
        assert sh.prox_numeric(f, 1.0, x) == pytest.approx(x / 2, abs=1e-7)
        assert sh.moreau_envelope(f, 1.0, x) == pytest.approx(x * x / 4, abs=1e-10)

    @pytest.mark.parametrize("x", [-3.0, -0.5, 0.3, 1.0, 2.5])
    def test_soft_threshold(self, x):
        assert sh.prox_numeric(np.abs, 1.0, x) == pytest.approx(np.sign(x) * max(abs(x) - 1, 0), abs=1e-7)

    @pytest.mark.parametrize("x,lam", [(2.0, 0.5), (0.7, 0.5), (-1.2, 0.3), (3.0, 5.0)])
    def test_l0(self, x, lam):
        f = lambda z: lam * (np.asarray(z) != 0)
        assert sh.prox_numeric(f, 1.0, x) == pytest.approx(float(prox_l0(np.array([x]), lam)[0]), abs=1e-7)

    def test_envelope_below_f(self):
        f = lambda z: np.cos(z) + 0.1 * z ** 2
        for x in np.linspace(-4, 4, 9):
            assert sh.moreau_envelope(f, 0.5, x) <= f(x) + 1e-12

    def test_bracket_failure(self):
        with pytest.raises(BracketFailure):
            sh.prox_numeric(lambda z: -1e6 * np.asarray(z), 1.0, 0.0)

    def test_gamma_positive(self):
        with pytest.raises(ValueError):
            sh.prox_numeric(np.abs, 0.0, 1.0)

    def test_scalar_only_callable(self):
        assert sh.prox_numeric(lambda z: abs(float(z)), 1.0, 3.0) == pytest.approx(2.0, abs=1e-7)


@pytest.fixture(scope="module")
def bl_table():
    prior = PriorSpec(0.3, 3.0, 1.0, Slab.LAPLACE)
    return prior, sh.phi_build(prior, sh.default_phi_grid())


class TestPhi:
    @pytest.mark.parametrize("prior", PRIORS, ids=ids)
    def test_zero_even_nonnegative(self, prior):
        z = np.linspace(-15, 15, 301)
        phi = sh.phi_direct(prior, z)
        assert abs(phi[150]) <= 1e-10
        assert np.max(np.abs(phi - phi[::-1])) <= 1e-8
        assert np.all(phi >= -1e-12)

    def test_gradient_identity(self):
        prior = PriorSpec(0.1, 3.0, 1.0, Slab.GAUSSIAN)
        z = np.array([-5.0, -1.0, 0.5, 2.0, 7.0])
        h = 1e-5
        fd = (sh.phi_direct(prior, z + h) - sh.phi_direct(prior, z - h)) / (2 * h)
        want = -sh.marginal_score(prior, sh.invert_posterior_mean(prior, z))
        np.testing.assert_allclose(fd, want, rtol=1e-5)

    def test_eval_nodes_and_zero(self, bl_table):
        _, table = bl_table
        idx = [0, 1234, 4000, 7999]
        np.testing.assert_array_equal(sh.phi_eval(table, table.grid[idx]), table.phi_values[idx])
        assert abs(sh.phi_eval(table, 0.0)) <= 1e-10

    def test_eval_midpoints(self, bl_table):
        prior, table = bl_table
        mids = 0.5 * (table.grid[:-1] + table.grid[1:])[::400]
        np.testing.assert_allclose(sh.phi_eval(table, mids), sh.phi_direct(prior, mids), atol=1e-6)

    def test_out_of_range(self, bl_table):
        with pytest.raises(OutOfRange):
            sh.phi_eval(bl_table[1], 25.0)

    def test_fixed_point(self, bl_table):
        prior, table = bl_table
        pen = table.penalty(prior.sigma_e ** 2)
        for y in [-8.0, -2.5, -0.4, 0.9, 3.3, 6.0]:
            assert sh.prox_numeric(pen, 1.0, y) == pytest.approx(float(sh.posterior_mean(prior, y)), abs=1e-4)

    def test_invert_round_trip(self):
        prior = PriorSpec(0.1, 3.0, 1.0, Slab.LAPLACE)
        z = np.linspace(-12, 12, 49)
        np.testing.assert_allclose(sh.posterior_mean(prior, sh.invert_posterior_mean(prior, z)), z, atol=1e-11)

    def test_csv_round_trip(self, bl_table, tmp_path):
        _, table = bl_table
        path = tmp_path / "phi.csv"
        table.to_csv(path)
        back = PhiTable.from_csv(path)
        np.testing.assert_array_equal(back.grid, table.grid)
        np.testing.assert_array_equal(back.phi_values, table.phi_values)

    def test_bad_grid(self):
        with pytest.raises(ValueError):
            PhiTable(np.array([0.0, 0.0]), np.array([0.0, 0.0]))

    def test_non_monotone_detected(self, monkeypatch):
        monkeypatch.setattr(sh, "posterior_mean", lambda prior, y: np.sin(np.asarray(y, dtype=float)))
        with pytest.raises(NonMonotonePosteriorMean):
            sh.check_monotone_posterior_mean(PriorSpec(0.1, 1.0), -5, 5)


def test_proximal_identity():
    """prox(x) = x - gamma * d/dx envelope(x) for smooth f."""
    fns = [lambda z: np.log1p(np.asarray(z) ** 2), lambda z: np.cosh(np.asarray(z) / 2)]
    h = 1e-4
    for f in fns:
        for gamma in (0.5, 1.0):
            for x in (-2.0, -0.3, 0.8, 3.0):
                grad = (sh.moreau_envelope(f, gamma, x + h) - sh.moreau_envelope(f, gamma, x - h)) / (2 * h)
                assert sh.prox_numeric(f, gamma, x) == pytest.approx(x - gamma * grad, abs=1e-4)
