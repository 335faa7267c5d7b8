import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from sipkit.density import (
    Grid1D,
    Grid2D,
    GriddedPdf1D,
    GriddedPdf2D,
    SampleSet,
    histogram_to_pdf,
    integrate,
    l1_distance,
    rejection_sample_2d,
    sup_distance,
    tabulate,
)
from sipkit.errors import AllCellsFailed, NonMonotoneMap, NonpositiveDensity, SupportViolation, ZeroMass
from sipkit.inference import (
    BETA_ONE_FAMILY,
    IDENTITY,
    MAXENT_FAMILY,
    MU_TO_NU,
    SCALED_BETA_FAMILY,
    SYMMETRIC_BETA_FAMILY,
    CoordinateMap,
    Family,
    ParamGrid,
    ParamPosterior,
    PushforwardTable,
    beta_one_prior,
    box_mass,
    cell_probability_below,
    cell_pushforward_sum,
    data_consistent_update,
    l1_fit,
    log_likelihood,
    posterior,
    posterior_predictive,
    predictive_grid,
    reparameterize,
    true_law_samples,
    uniform_prior,
)
from sipkit.product_model import (
    PRODUCT,
    SUM,
    SUM_OF_SQUARES,
    forward_sample,
    product_uniform_density,
    sample_independent,
    sum_uniform_density,
    sumsquares_uniform_density,
)

from .conftest import neg_log_bin_average


def _broken_family(bad=lambda a, b: True):
    def build(theta):
        if bad(*theta):
            raise ValueError("no marginals here")
        return MAXENT_FAMILY(theta)
    return Family("broken", build, ("a", "b"), symmetric=False)


def _gaussian_posterior(grid, center, sigma):
    A, B = grid.mesh()
    ll = -0.5 * (((A - center[0]) / sigma) ** 2 + ((B - center[1]) / sigma) ** 2)
    d = np.exp(ll)
    d /= d.sum() * grid.cell_area
    idx = np.unravel_index(int(np.argmax(d)), d.shape)
    return ParamPosterior(grid, uniform_prior(grid), ll, d, (int(idx[0]), int(idx[1])))


@pytest.fixture(scope="module")
def samples100():
    return true_law_samples(100, 0)


@pytest.fixture(scope="module")
def maxent_table():
    return PushforwardTable(MAXENT_FAMILY)


class TestFamilies:
    def test_maxent_center_is_uniform(self):
        m1, m2 = MAXENT_FAMILY((0.5, 0.5))
        x = np.linspace(0.01, 0.99, 7)
        assert_allclose(m1.pdf(x), 1.0, atol=1e-12)
        assert_allclose(m2.pdf(x), 1.0, atol=1e-12)

    @pytest.mark.parametrize("nu", [0.5, 1.0, 3.0])
    def test_beta_one_mean(self, nu):
        m, _ = BETA_ONE_FAMILY((nu, 2.0))
        assert m.mean() == pytest.approx(1 / (1 + nu), abs=1e-12)

    def test_symmetric_beta(self):
        m, _ = SYMMETRIC_BETA_FAMILY((2.0, 1.0))
        assert m.pdf(0.3) == pytest.approx(m.pdf(0.7))

    def test_scaled_family_product_is_scale_free(self):
        a = forward_sample(PRODUCT, sample_independent(*SCALED_BETA_FAMILY((1.5, 2.0)), 1000, 4))
        b = forward_sample(PRODUCT, sample_independent(*SCALED_BETA_FAMILY((1.5, 1.0)), 1000, 4))
        assert_allclose(a.points, b.points, rtol=1e-12)


class TestParamGrid:
    def test_bounds_are_nodes(self):
        g = ParamGrid(("a", "b"), (0.25, 0.25), (0.75, 0.75), (51, 51))
        assert g.axis(0)[0] == 0.25 and g.axis(0)[-1] == 0.75
        assert g.node(25, 25) == pytest.approx((0.5, 0.5))
        assert g.cell_area == pytest.approx(0.01 ** 2)

    def test_cell_of(self):
        g = ParamGrid(("a", "b"), (0.0, 0.4), (0.75, 1.0), (25, 25))
        i, j = g.cell_of((0.5, 0.5))
        a, b = g.node(i, j)
        assert abs(a - 0.5) <= g.spacing[0] / 2 and abs(b - 0.5) <= g.spacing[1] / 2
        assert g.cell_of((-5, 5)) == (0, 24)

    @pytest.mark.parametrize("lo,hi,n", [((0, 0), (0, 1), (3, 3)), ((0, 0), (1, 1), (1, 3))])
    def test_invalid(self, lo, hi, n):
        with pytest.raises(ValueError):
            ParamGrid(("a", "b"), lo, hi, n)


class TestPriors:
    def test_uniform_normalized(self):
        g = ParamGrid(("a", "b"), (0.25, 0.25), (0.75, 0.75), (11, 21))
        assert uniform_prior(g).sum() * g.cell_area == pytest.approx(1.0, abs=1e-12)

    def test_beta_one_prior_shape(self):
        g = ParamGrid(("a", "b"), (1 / 3, 1 / 3), (3.0, 3.0), (31, 31))
        p = beta_one_prior(g)
        assert p.sum() * g.cell_area == pytest.approx(1.0, abs=1e-12)
        # ratio between corners is ((3 + 1) / (1/3 + 1))**4
        assert p[0, 0] / p[-1, -1] == pytest.approx(3.0 ** 4, rel=1e-12)


class TestPushforwardTable:
    @pytest.mark.parametrize("q", [1e-4, 0.01, 0.2, 0.5, 0.9, 0.999])
    def test_uniform_law_matches_neg_log(self, maxent_table, q):
        assert float(maxent_table.density((0.5, 0.5), q)) == pytest.approx(-math.log(q), rel=1e-4)

    def test_symmetric_key_shared(self):
        t = PushforwardTable(MAXENT_FAMILY, n_nodes=100)
        t.density((0.4, 0.6), 0.3)
        t.density((0.6, 0.4), 0.3)
        assert len(t) == 1

    def test_beta_one_closed_form(self):
        # Beta(1, 1) x Beta(1, 1) is the uniform law again
        t = PushforwardTable(BETA_ONE_FAMILY)
        q = np.array([0.05, 0.3, 0.8])
        assert_allclose(t.density((1.0, 1.0), q), -np.log(q), rtol=1e-4)


class TestLogLikelihood:
    def test_empty(self):
        assert log_likelihood(MAXENT_FAMILY, (0.5, 0.5), []) == 0.0

    def test_closer_mode_wins(self, maxent_table):
        a = log_likelihood(MAXENT_FAMILY, (0.5, 0.5), [0.05], maxent_table)
        b = log_likelihood(MAXENT_FAMILY, (0.7, 0.7), [0.05], maxent_table)
        assert a > b

    def test_true_law_closed_form(self, samples100, maxent_table):
        q = samples100.column(0)
        exact = float(np.sum(np.log(-np.log(q))))
        got = log_likelihood(MAXENT_FAMILY, (0.5, 0.5), samples100, maxent_table)
        assert got == pytest.approx(exact, abs=1e-3)

    @pytest.mark.parametrize("bad,index", [([0.2, 0.3, 0.0], 2), ([1.5, 0.3], 0), ([0.1, -0.2, 0.4], 1)])
    def test_nonpositive_density(self, maxent_table, bad, index):
        with pytest.raises(NonpositiveDensity) as e:
            log_likelihood(MAXENT_FAMILY, (0.5, 0.5), bad, maxent_table)
        assert e.value.index == index

    def test_floor_keeps_likelihood_finite(self):
        # Beta(1, 40)^2 puts almost no mass near q = 0.99
        v = log_likelihood(BETA_ONE_FAMILY, (40.0, 40.0), [0.99])
        assert np.isfinite(v)
        assert v >= math.log(1e-12) - 1e-9


class TestPosterior:
    grid = ParamGrid(("mu1", "mu2"), (0.25, 0.25), (0.75, 0.75), (11, 11))

    @pytest.fixture(scope="class")
    @classmethod
    def post(cls, samples100, maxent_table):
        return posterior(MAXENT_FAMILY, uniform_prior(cls.grid), samples100, cls.grid, maxent_table)

    def test_normalized(self, post):
        assert np.all(post.posterior >= 0)
        assert post.posterior.sum() * self.grid.cell_area == pytest.approx(1.0, abs=1e-10)
        assert post.weights.sum() == pytest.approx(1.0, abs=1e-10)

    def test_proportional_to_likelihood_times_prior(self, post):
        w = np.exp(post.loglik - post.loglik.max()) * post.prior
        assert_allclose(post.posterior, w / (w.sum() * self.grid.cell_area), rtol=1e-12)

    def test_map_is_argmax(self, post):
        assert post.posterior[post.map_index] == post.posterior.max()
        assert math.dist(post.map_estimate, (0.5, 0.5)) <= 0.1
        assert post.n_samples == 100 and post.seed == 0

    def test_prior_rescaling_invariance(self, samples100, maxent_table, post):
        p2 = posterior(MAXENT_FAMILY, 7.3 * uniform_prior(self.grid), samples100, self.grid, maxent_table)
        assert p2.map_index == post.map_index
        assert_allclose(p2.weights, post.weights, rtol=0, atol=1e-12)

    def test_no_data_returns_prior(self, maxent_table):
        prior = beta_one_prior(self.grid)
        p = posterior(MAXENT_FAMILY, prior, [], self.grid, maxent_table)
        assert_allclose(p.posterior, prior, rtol=1e-12)

    def test_callable_prior(self, samples100, maxent_table, post):
        p = posterior(MAXENT_FAMILY, lambda a, b: np.ones_like(a), samples100, self.grid, maxent_table)
        assert_allclose(p.posterior, post.posterior, rtol=1e-12)

    def test_prior_shape_checked(self, samples100):
        with pytest.raises(ValueError):
            posterior(MAXENT_FAMILY, np.ones((3, 3)), samples100, self.grid)

    def test_tie_break_lowest_row_major(self, maxent_table):
        p = posterior(MAXENT_FAMILY, uniform_prior(self.grid), [], self.grid, maxent_table)
        assert p.map_index == (0, 0)

    def test_failed_nodes_excluded(self, samples100):
        g = ParamGrid(("a", "b"), (0.3, 0.3), (0.7, 0.7), (3, 3))
        fam = _broken_family(lambda a, b: a > 0.6)
        p = posterior(fam, uniform_prior(g), samples100, g)
        assert sorted(p.meta["failed"]) == [(2, 0), (2, 1), (2, 2)]
        assert np.all(p.posterior[2] == 0)

    def test_all_cells_failed(self, samples100):
        g = ParamGrid(("a", "b"), (0.3, 0.3), (0.7, 0.7), (3, 3))
        with pytest.raises(AllCellsFailed):
            posterior(_broken_family(), uniform_prior(g), samples100, g)

    def test_prior_zero_where_defined(self, samples100):
        g = ParamGrid(("a", "b"), (0.3, 0.3), (0.7, 0.7), (3, 3))
        prior = np.zeros(g.shape)
        prior[2, 2] = 1.0
        with pytest.raises(ZeroMass):
            posterior(_broken_family(lambda a, b: a > 0.6), prior, samples100, g)

    def test_marginals(self, post):
        for k in range(2):
            m = post.marginal(k)
            assert m.sum() * self.grid.spacing[k] == pytest.approx(1.0, abs=1e-12)


# (a, b) and (b, a) give the same product law and the likelihood is nearly flat along
# a ridge, so the full covariance trace need not shrink for every sample set
_RIDGE_SEEDS = {2, 4, 5, 7}


class TestConcentration:
    grid = ParamGrid(("mu1", "mu2"), (0.25, 0.25), (0.75, 0.75), (26, 26))

    def _pair(self, seed, table):
        s = true_law_samples(400, seed)
        out = []
        for n in (100, 400):
            sub = SampleSet(s.points[:n], seed)
            out.append(posterior(MAXENT_FAMILY, uniform_prior(self.grid), sub, self.grid, table))
        return out

    @pytest.mark.parametrize("seed", [
        pytest.param(k, marks=pytest.mark.xfail(strict=True, reason="ridge in the parameter likelihood"))
        if k in _RIDGE_SEEDS else k for k in range(10)])
    def test_trace_shrinks_with_nested_samples(self, seed, maxent_table):
        p100, p400 = self._pair(seed, maxent_table)
        assert np.trace(p400.covariance()) < np.trace(p100.covariance())

    @pytest.mark.parametrize("seed", range(10))
    def test_identifiable_mean_concentrates(self, seed, maxent_table):
        # E[Q] = mu1 * mu2 under the maxent family; its posterior variance falls like 1 / N
        A, B = self.grid.mesh()
        v = []
        for p in self._pair(seed, maxent_table):
            w = p.weights
            m = np.sum(w * A * B)
            v.append(np.sum(w * (A * B - m) ** 2))
        assert v[1] < 0.5 * v[0]


class TestL1Fit:
    def test_maxent_recovers_center(self):
        g = ParamGrid(("mu1", "mu2"), (0.3, 0.3), (0.7, 0.7), (5, 5))
        fit = l1_fit(MAXENT_FAMILY, tabulate(product_uniform_density, Grid1D(0, 1, 200)), g)
        assert fit.theta == pytest.approx((0.5, 0.5))
        assert fit.min_error < 0.01
        assert_allclose(fit.errors, fit.errors.T, rtol=1e-12)

    def test_failed_nodes_skipped(self):
        g = ParamGrid(("a", "b"), (0.3, 0.3), (0.7, 0.7), (3, 3))
        fit = l1_fit(_broken_family(lambda a, b: max(a, b) > 0.6),
                     tabulate(product_uniform_density, Grid1D(0, 1, 100)), g)
        assert np.isnan(fit.errors[2, 2]) and len(fit.failed) == 5
        assert fit.theta == pytest.approx((0.5, 0.5))

    def test_all_failed(self):
        g = ParamGrid(("a", "b"), (0.3, 0.3), (0.7, 0.7), (2, 2))
        with pytest.raises(AllCellsFailed):
            l1_fit(_broken_family(), tabulate(product_uniform_density, Grid1D(0, 1, 50)), g)

    def test_scaled_family_is_flat_in_scale(self):
        target = tabulate(product_uniform_density, Grid1D(0, 1, 100))
        g = ParamGrid(("nu", "lam"), (2.0, 0.8), (2.5, 1.25), (2, 3))
        fit = l1_fit(SCALED_BETA_FAMILY, target, g)
        assert np.ptp(fit.errors, axis=1).max() <= 1e-6
        assert fit.errors[0, 0] > 0.1


class TestReparameterize:
    g = ParamGrid(("mu1", "mu2"), (0.25, 0.25), (0.75, 0.75), (201, 201))

    @pytest.fixture(scope="class")
    @classmethod
    def peak(cls):
        return _gaussian_posterior(cls.g, (0.5, 0.47), 0.04)

    def test_identity(self, peak):
        r = reparameterize(peak, (IDENTITY, IDENTITY))
        assert_allclose(r.posterior, peak.posterior, rtol=1e-12, atol=1e-12)
        assert r.map_index == peak.map_index

    def test_mass_preserved(self, peak):
        r = reparameterize(peak, (MU_TO_NU, MU_TO_NU), names=("nu1", "nu2"))
        assert r.meta["mass"] == pytest.approx(1.0, abs=1e-3)
        assert r.grid.lo == pytest.approx((1 / 3, 1 / 3)) and r.grid.hi == pytest.approx((3.0, 3.0))

    def test_sharp_peak_map_within_one_cell(self):
        sharp = _gaussian_posterior(self.g, (0.5, 0.5), 0.004)
        r = reparameterize(sharp, (MU_TO_NU, MU_TO_NU))
        i, j = r.grid.cell_of(MU_TO_NU.forward(np.array(sharp.map_estimate)))
        assert abs(i - r.map_index[0]) <= 1 and abs(j - r.map_index[1]) <= 1

    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.6, 1.6), st.floats(0.2, 0.8), st.floats(0.6, 1.6), st.floats(0.2, 0.8))
    def test_box_mass_preserved(self, a1, w1, a2, w2):
        peak = _gaussian_posterior(self.g, (0.5, 0.47), 0.04)
        r = reparameterize(peak, (MU_TO_NU, MU_TO_NU))
        box_nu = ((a1, a1 + w1), (a2, a2 + w2))
        box_mu = tuple(sorted(MU_TO_NU.inverse(np.array(b))) for b in box_nu)
        assert box_mass(r, box_nu) == pytest.approx(box_mass(peak, box_mu), abs=1e-3)

    def test_non_monotone(self, peak):
        fold = CoordinateMap(lambda t: (np.asarray(t) - 0.5) ** 2, np.sqrt, np.ones_like)
        with pytest.raises(NonMonotoneMap):
            reparameterize(peak, (fold, IDENTITY))

    def test_bad_inverse(self, peak):
        wrong = CoordinateMap(lambda t: 2 * np.asarray(t), lambda p: np.asarray(p), np.ones_like)
        with pytest.raises(NonMonotoneMap):
            reparameterize(peak, (IDENTITY, wrong))


class TestBoxMass:
    def test_full_grid(self):
        g = ParamGrid(("a", "b"), (0, 0), (1, 1), (11, 11))
        p = _gaussian_posterior(g, (0.5, 0.5), 0.2)
        assert box_mass(p, ((-1, 2), (-1, 2))) == pytest.approx(1.0, abs=1e-12)
        # edge nodes own half-cells outside [0, 1]; split the grid through its middle node
        assert box_mass(p, ((-1, 0.5), (-1, 2))) == pytest.approx(0.5, abs=1e-12)


class TestDataConsistent:
    g = Grid2D.unit_square(100)
    obs = tabulate(product_uniform_density, Grid1D(0.0, 1.0, 500))

    def test_uniform_prior_unchanged(self):
        prior = GriddedPdf2D(self.g, np.ones(self.g.shape))
        post = data_consistent_update(prior, self.obs)
        assert np.abs(post.values - 1.0).sum() * self.g.cell_area <= 0.03
        assert post.mass() == pytest.approx(1.0, abs=1e-12)

    @pytest.fixture(scope="class")
    @classmethod
    def beta22(cls):
        X, Y = cls.g.mesh()
        prior = GriddedPdf2D(cls.g, 36.0 * X * (1 - X) * Y * (1 - Y))
        return prior, data_consistent_update(prior, cls.obs)

    def test_beta22_not_recovered(self, beta22):
        _, post = beta22
        assert np.max(np.abs(post.values - 1.0)) > 0.1

    def test_pushforward_matches_observed(self, beta22):
        _, post = beta22
        cg = Grid1D(0.0, 1.0, 100)
        zs = rejection_sample_2d(post, 10**5, 11)
        h = histogram_to_pdf(forward_sample(PRODUCT, zs), cg)
        assert l1_distance(h, GriddedPdf1D(cg, neg_log_bin_average(cg.edges))) < 0.05

    def test_idempotent(self, beta22):
        _, post = beta22
        again = data_consistent_update(post, self.obs)
        assert np.abs(again.values - post.values).sum() * self.g.cell_area < 0.02

    def test_details(self, beta22):
        prior, _ = beta22
        d = data_consistent_update(prior, self.obs, return_details=True)
        assert d.pushforward.mass() == pytest.approx(1.0, abs=1e-12)
        assert d.ratio.shape == (500,)

    def test_support_violation(self):
        X, _ = self.g.mesh()
        # prior on z1 >= 0.8 cannot reach q near 0 only through z2; restrict both
        v = np.where((X >= 0.5) & (X.T >= 0.5), 1.0, 0.0)
        with pytest.raises(SupportViolation):
            data_consistent_update(GriddedPdf2D(self.g, v), self.obs)

    def test_zero_mass(self):
        with pytest.raises(ZeroMass):
            data_consistent_update(GriddedPdf2D(self.g, np.zeros(self.g.shape)), self.obs)


class TestPredictive:
    def _point_mass(self, family, theta):
        g = ParamGrid(family.param_names, (theta[0] - 0.1, theta[1] - 0.1), (theta[0] + 0.1, theta[1] + 0.1),
                      (3, 3))
        d = np.zeros(g.shape)
        d[1, 1] = 1.0 / g.cell_area
        return ParamPosterior(g, d, np.zeros(g.shape), d, (1, 1))

    def test_point_mass_sum_is_triangular(self):
        post = self._point_mass(MAXENT_FAMILY, (0.5, 0.5))
        qg = predictive_grid(SUM, 200)
        f = posterior_predictive(post, MAXENT_FAMILY, SUM, qg)
        assert sup_distance(f, tabulate(sum_uniform_density, qg)) < 0.02
        assert integrate(f) == pytest.approx(1.0, abs=1e-6)

    def test_point_mass_sum_of_squares_by_monte_carlo(self):
        post = self._point_mass(BETA_ONE_FAMILY, (1.0, 1.0))
        qg = predictive_grid(SUM_OF_SQUARES, 40)
        f = posterior_predictive(post, BETA_ONE_FAMILY, SUM_OF_SQUARES, qg, n_mc=400_000, seed=2)
        ref = tabulate(sumsquares_uniform_density, qg, normalized=True)
        assert l1_distance(f, ref) < 0.05

    def test_mixture_integrates_to_one(self):
        g = ParamGrid(("nu1", "nu2"), (0.75, 0.75), (1.25, 1.25), (3, 3))
        p = _gaussian_posterior(g, (1.0, 1.1), 0.3)
        f = posterior_predictive(p, BETA_ONE_FAMILY, SUM, predictive_grid(SUM, 100))
        assert integrate(f) == pytest.approx(1.0, abs=1e-6)
        assert np.all(f.values >= 0)

    def test_product_component_by_quadrature(self):
        post = self._point_mass(MAXENT_FAMILY, (0.5, 0.5))
        qg = Grid1D(0.0, 1.0, 100)
        f = posterior_predictive(post, MAXENT_FAMILY, PRODUCT, qg)
        assert l1_distance(f, tabulate(product_uniform_density, qg, normalized=True)) < 1e-3

    def test_shared_cache_is_exact_and_reused(self):
        g = ParamGrid(("nu1", "nu2"), (0.75, 0.75), (1.25, 1.25), (3, 3))
        qg = predictive_grid(SUM, 100)
        p1, p2 = _gaussian_posterior(g, (1.0, 1.1), 0.3), _gaussian_posterior(g, (0.9, 1.0), 0.2)
        cache = {}
        f1 = posterior_predictive(p1, BETA_ONE_FAMILY, SUM, qg, cache=cache)
        n = len(cache)
        f2 = posterior_predictive(p2, BETA_ONE_FAMILY, SUM, qg, cache=cache)
        # 3x3 nodes, 6 up to the swap symmetry, all filled by the first call
        assert n == len(cache) == 6
        assert_array_equal(f1.values, posterior_predictive(p1, BETA_ONE_FAMILY, SUM, qg).values)
        assert_array_equal(f2.values, posterior_predictive(p2, BETA_ONE_FAMILY, SUM, qg).values)


class TestCellHelpers:
    def test_uniform_cells_give_triangle(self):
        n = 50
        f = cell_pushforward_sum(np.full((n, n), 1.0 / n ** 2))
        assert sup_distance(f, tabulate(sum_uniform_density, f.grid)) < 2.0 / n + 1e-12

    def test_not_square(self):
        with pytest.raises(ValueError):
            cell_pushforward_sum(np.ones((3, 4)))

    def test_probability_below(self):
        n = 200
        P = np.full((n, n), 1.0 / n ** 2)
        assert cell_probability_below(P, SUM_OF_SQUARES, 0.5) == pytest.approx(math.pi / 8, abs=5e-3)


class TestTrueLawSamples:
    def test_deterministic(self):
        a, b = true_law_samples(50, 3), true_law_samples(50, 3)
        assert np.array_equal(a.points, b.points)
        assert not np.array_equal(a.points, true_law_samples(50, 4).points)

    def test_in_range(self):
        q = true_law_samples(10**4, 1).column(0)
        assert np.all((q > 0) & (q <= 1))
        assert q.mean() == pytest.approx(0.25, abs=0.01)
