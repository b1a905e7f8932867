"""Tests for the selection module."""

import math
import unittest

import numpy as np
import scipy.sparse as sp

from spacetime_pspline.data_model import Dataset, apply_transform
from spacetime_pspline.decomposition import FACTORIZATIONS, decompose, reduce_penalty, solve_many
from spacetime_pspline.enums import Criterion, CVMode, LambdaPrior, Method
from spacetime_pspline.exceptions import ConfigurationError, DomainError
from spacetime_pspline.selection import (
    LambdaGrid,
    PriorConfig,
    SpatiotemporalSmoother,
    average_weights,
    criterion_score,
    criterion_select,
    criterion_trace,
    cross_validate,
    cv_errors,
    log_posterior_grid,
    log_posterior_lambda,
    map_lambda,
    model_average_weights,
    posterior_summary,
    score_trace_frame,
    select,
)
from spacetime_pspline.splines import difference_penalty, tensor_design
from spacetime_pspline.types import ScoreTraceRow
from tests.sample_data import make_dataset, small_spec


class TestConfiguration(unittest.TestCase):
    def test_prior_must_be_positive(self):
        with self.assertRaises(ConfigurationError):
            PriorConfig(a=0.0)
        with self.assertRaises(ConfigurationError):
            PriorConfig(b=-1.0)

    def test_prior_accepts_string(self):
        self.assertIs(
            PriorConfig(lambda_prior="uniform_on_log_lambda").lambda_prior, LambdaPrior.UNIFORM_ON_LOG_LAMBDA
        )

    def test_grid_validation(self):
        with self.assertRaises(ConfigurationError):
            LambdaGrid(np.array([0.0, 1.0]))
        with self.assertRaises(ConfigurationError):
            LambdaGrid(np.array([0.0, 2.0, 1.0]))
        grid = LambdaGrid.default()
        self.assertEqual(len(grid), 101)
        self.assertAlmostEqual(grid.lambdas[50], 1.0)


class ProblemMixin:
    """One decomposed synthetic dataset plus its dense ingredients."""

    @classmethod
    def setUpClass(cls):
        cls.ds = make_dataset()
        cls.spec = small_spec(cls.ds)
        cls.design = tensor_design(cls.ds, cls.spec)
        cls.penalty = difference_penalty(cls.spec)
        cls.y = apply_transform(cls.ds)
        cls.model = decompose(cls.design, reduce_penalty(cls.penalty), cls.y)
        cls.b = cls.design.toarray()
        cls.dtd = (cls.penalty.T @ cls.penalty).toarray()

    def dense_fit(self, lam):
        precision = self.b.T @ self.b + lam * self.dtd
        a = np.linalg.solve(precision, self.b.T @ self.y)
        hat_trace = np.trace(self.b @ np.linalg.solve(precision, self.b.T))
        return precision, a, hat_trace


class TestPosterior(ProblemMixin, unittest.TestCase):
    """The λ posterior and its averaging weights."""

    def test_log_posterior_matches_dense_formula(self):
        prior = PriorConfig(a=0.5, b=0.2)
        n = self.ds.n
        r = self.model.rank_pen
        for lam in (1e-2, 1.0, 50.0):
            precision, a, _ = self.dense_fit(lam)
            quad = self.y @ (self.y - self.b @ a)
            expected = (
                0.5 * r * math.log(lam)
                - 0.5 * np.linalg.slogdet(precision)[1]
                - (prior.a + n / 2) * math.log(2 * prior.b + quad)
            )
            self.assertAlmostEqual(log_posterior_lambda(self.model, lam, prior), expected, places=6)

    def test_grid_matches_pointwise(self):
        x = np.linspace(-4, 4, 9)
        for prior in (PriorConfig(), PriorConfig(lambda_prior=LambdaPrior.UNIFORM_ON_LOG_LAMBDA)):
            grid_values = log_posterior_grid(self.model, x, prior)
            pointwise = [log_posterior_lambda(self.model, 10.0**u, prior) for u in x]
            np.testing.assert_allclose(grid_values, pointwise, rtol=1e-10)

    def test_log_lambda_prior_shifts_by_log_lambda(self):
        x = np.array([-1.0, 0.0, 2.0])
        flat = log_posterior_grid(self.model, x, PriorConfig())
        log_prior = log_posterior_grid(self.model, x, PriorConfig(lambda_prior="uniform_on_log_lambda"))
        np.testing.assert_allclose(flat - log_prior, x * np.log(10.0))

    def test_argmax_is_invariant_to_scaling_the_response(self):
        """With b near zero, multiplying y by c moves the posterior only by a constant."""
        prior = PriorConfig(a=1e-4, b=1e-12)
        x = np.linspace(-8, 8, 161)
        reduced = reduce_penalty(self.penalty)
        argmaxes = []
        for c in (1.0, 0.01, 100.0):
            model = decompose(self.design, reduced, c * self.y)
            argmaxes.append(x[int(np.argmax(log_posterior_grid(model, x, prior)))])
        self.assertEqual(argmaxes[1], argmaxes[0])
        self.assertEqual(argmaxes[2], argmaxes[0])

    def test_non_positive_lambda_is_rejected(self):
        with self.assertRaises(DomainError):
            log_posterior_lambda(self.model, 0.0, PriorConfig())

    def test_average_weights(self):
        x = np.linspace(-2, 2, 5)
        # a density flat in λ gives weights proportional to λ times the trapezoid weights
        w = average_weights(x, np.zeros(5))
        expected = 10.0**x * np.array([0.5, 1, 1, 1, 0.5])
        np.testing.assert_allclose(w, expected / expected.sum())
        np.testing.assert_allclose(average_weights([0.0], [3.0]), [1.0])

    def test_average_weights_survive_large_log_densities(self):
        w = average_weights(np.linspace(-1, 1, 3), np.array([-1e5, -1e5 + 1.0, -1e5]))
        self.assertAlmostEqual(w.sum(), 1.0)
        self.assertTrue(np.all(np.isfinite(w)))

    def test_model_average_weights(self):
        """Grid objects and raw log10 values give the same normalised weights."""
        grid = LambdaGrid.default(-4, 4, 17)
        prior = PriorConfig()
        w = model_average_weights(self.model, grid, prior)
        self.assertEqual(w.shape, (17,))
        self.assertAlmostEqual(w.sum(), 1.0)
        self.assertTrue(np.all(w >= 0))
        expected = average_weights(grid.log10_values, log_posterior_grid(self.model, grid.log10_values, prior))
        np.testing.assert_allclose(w, expected)
        np.testing.assert_allclose(model_average_weights(self.model, list(grid.log10_values), prior), w)

    def test_posterior_summary(self):
        x = np.linspace(-2, 2, 5)
        summary = posterior_summary(x, [0.1, 0.2, 0.4, 0.2, 0.1])
        self.assertAlmostEqual(summary["mean"], 0.0)
        self.assertAlmostEqual(summary["median"], 0.0)
        self.assertAlmostEqual(summary["lower_95"], -2.0)
        self.assertLessEqual(summary["lower_95"], summary["median"])
        self.assertLessEqual(summary["median"], summary["upper_95"])


class TestMapSelection(ProblemMixin, unittest.TestCase):
    def test_map_refines_grid_argmax(self):
        grid = LambdaGrid.default(-6, 6, 25)
        result = map_lambda(self.model, grid, PriorConfig())
        k = int(np.argmax(result.scores))
        self.assertFalse(result.at_grid_edge)
        self.assertGreaterEqual(
            log_posterior_lambda(self.model, result.lam, PriorConfig()), result.scores[k] - 1e-12
        )
        self.assertLessEqual(abs(result.log10_lambda - grid.log10_values[k]), 0.5 + 1e-9)
        self.assertAlmostEqual(result.weights.sum(), 1.0)

    def test_map_at_grid_edge_is_flagged(self):
        # a response in the penalty null space is fitted exactly for every λ
        y = np.full(self.ds.n, 2.0)
        model = decompose(self.design, reduce_penalty(self.penalty), y)
        with self.assertLogs("spacetime_pspline.selection", level="WARNING"):
            result = map_lambda(model, LambdaGrid.default(-3, 3, 13), PriorConfig())
        self.assertTrue(result.at_grid_edge)
        self.assertEqual(len(result.warnings), 1)


class TestCriteria(ProblemMixin, unittest.TestCase):
    def test_criteria_match_formulas(self):
        n = self.ds.n
        for lam in (0.01, 1.0, 100.0):
            _, a, nu = self.dense_fit(lam)
            residual = float(np.sum((self.y - self.b @ a) ** 2))
            expected = {
                Criterion.GCV: n * residual / (n - nu) ** 2,
                Criterion.BIC: n * math.log(residual / n) + nu * math.log(n),
                Criterion.AIC: n * math.log(residual / n) + 2 * nu,
                Criterion.AICC: n * math.log(residual / n) + 2 * nu + 2 * nu * (nu + 1) / (n - nu - 1),
            }
            for which, value in expected.items():
                self.assertAlmostEqual(criterion_score(self.model, lam, which), value, places=4)

    def test_bic_smooths_at_least_as_much_as_aic(self):
        grid = LambdaGrid.default(-6, 6, 61)
        aic = criterion_select(self.model, grid, Criterion.AIC)
        bic = criterion_select(self.model, grid, Criterion.BIC)
        self.assertGreaterEqual(bic.lam, aic.lam)

    def test_undefined_points_become_infinite(self):
        # 30 single-sample wells for 100 coefficients: at tiny λ the edf approaches n
        rng = np.random.default_rng(5)
        ds = Dataset.from_arrays(
            [f"S{i}" for i in range(30)],
            rng.uniform(0, 1, 30),
            rng.uniform(0, 1, 30),
            rng.uniform(0, 1, 30),
            rng.uniform(0, 5, 30),
        )
        spec = small_spec(ds, counts=(5, 5, 4))
        model = decompose(tensor_design(ds, spec), reduce_penalty(difference_penalty(spec)), apply_transform(ds))
        grid = LambdaGrid(np.array([-12.0, 4.0, 6.0]))
        trace = criterion_trace(model, grid, Criterion.AICC)
        self.assertEqual(trace[0], np.inf)
        self.assertTrue(np.isfinite(trace[2]))

    def test_criterion_rejects_non_positive_lambda(self):
        with self.assertRaises(DomainError):
            criterion_score(self.model, 0.0, "gcv")


class TestCrossValidation(ProblemMixin, unittest.TestCase):
    def test_by_observation_is_reproducible(self):
        grid = LambdaGrid.default(-3, 3, 7)
        first = cross_validate(self.ds, self.spec, grid, CVMode.BY_OBSERVATION, k=5, seed=3)
        second = cross_validate(self.ds, self.spec, grid, "by_observation", k=5, seed=3, design=self.design)
        np.testing.assert_allclose(first.scores, second.scores)
        self.assertEqual(first.method, Method.CV_OBS)
        self.assertTrue(np.all(first.scores > 0))

    def test_by_well(self):
        grid = LambdaGrid.default(-3, 3, 7)
        result = cross_validate(self.ds, self.spec, grid, CVMode.BY_WELL, k=7, seed=1)
        self.assertEqual(result.method, Method.CV_WELL)
        self.assertIn(result.lam, list(grid.lambdas))

    def test_one_fold_per_observation_is_leave_one_out(self):
        """With k = n the scores equal leave-one-out errors from direct penalised refits."""
        ds = make_dataset(n_wells=6, per_well=5, seed=2)
        spec = small_spec(ds, counts=(4, 4, 3))
        grid = LambdaGrid(np.array([-2.0, -1.0, 0.0, 1.0]))
        result = cross_validate(ds, spec, grid, CVMode.BY_OBSERVATION, k=ds.n, seed=0)

        b = tensor_design(ds, spec).toarray()
        d = difference_penalty(spec).toarray()
        y = apply_transform(ds)
        expected = np.zeros(len(grid))
        for j, lam in enumerate(grid.lambdas):
            for i in range(ds.n):
                keep = np.arange(ds.n) != i
                stacked = np.vstack([b[keep], math.sqrt(lam) * d])
                rhs = np.concatenate([y[keep], np.zeros(d.shape[0])])
                coef = np.linalg.lstsq(stacked, rhs, rcond=None)[0]
                expected[j] += (y[i] - b[i] @ coef) ** 2
        np.testing.assert_allclose(result.scores, expected, rtol=1e-6)

    def test_duplicated_rows_leak_across_folds(self):
        """Copies kept in one fold score differently from copies split across folds."""
        n = self.ds.n
        design = sp.vstack([self.design, self.design]).tocsr()
        y = np.concatenate([self.y, self.y])
        base = np.array_split(np.random.default_rng(5).permutation(n), 5)
        together = [np.sort(np.concatenate([f, f + n])) for f in base]
        split = [np.sort(np.concatenate([base[j], base[(j + 1) % 5] + n])) for j in range(5)]
        lambdas = 10.0 ** np.array([-3.0, 0.0, 2.0])
        reduced = reduce_penalty(self.penalty)

        kept, _ = cv_errors(design, reduced, y, together, lambdas)
        leaked, _ = cv_errors(design, reduced, y, split, lambdas)
        self.assertFalse(np.allclose(kept, leaked))
        # a training copy of every held-out row pulls the fit towards it
        self.assertLess(leaked[0], kept[0])

    def test_too_few_wells(self):
        with self.assertRaises(ConfigurationError):
            cross_validate(self.ds, self.spec, LambdaGrid.default(-1, 1, 3), CVMode.BY_WELL, k=20)

    def test_single_fold_rejected(self):
        with self.assertRaises(ConfigurationError):
            cross_validate(self.ds, self.spec, LambdaGrid.default(-1, 1, 3), k=1)


class TestSmoother(unittest.TestCase):
    """End-to-end fits through the smoother façade."""

    @classmethod
    def setUpClass(cls):
        cls.ds = make_dataset()
        cls.spec = small_spec(cls.ds)
        cls.grid = LambdaGrid.default(-4, 4, 33)

    def smoother(self):
        return SpatiotemporalSmoother(self.ds, self.spec, grid=self.grid)

    def test_map_fit(self):
        smoother = self.smoother()
        fit = smoother.fit(Method.MAP)
        self.assertGreater(fit.lam, 0)
        self.assertEqual(fit.coefficients.shape, (100,))
        self.assertTrue(fit.l_flat <= fit.edf <= 100)
        model = smoother.model
        expected_scale = (fit.prior.b + 0.5 * (model.rho_sq + np.sum(
            fit.lam / (model.sigma**2 + fit.lam) * model.uty2**2
        ))) / (fit.prior.a + 0.5 * self.ds.n)
        self.assertAlmostEqual(fit.noise_scale, expected_scale)
        self.assertIsNotNone(fit.posterior)
        self.assertIsNotNone(fit.hull)
        self.assertEqual(fit.data_digest, self.ds.digest())

    def test_model_average_coefficients_are_weighted(self):
        smoother = self.smoother()
        fit = smoother.fit("bayes-avg")
        self.assertIsNone(fit.lam)
        self.assertTrue(fit.is_model_average)
        np.testing.assert_allclose(
            fit.coefficients, solve_many(smoother.model, self.grid.lambdas) @ fit.weights
        )
        self.assertAlmostEqual(fit.weights.sum(), 1.0)

    def test_methods_share_one_factorisation(self):
        smoother = self.smoother()
        before = FACTORIZATIONS.count
        for method in (Method.MAP, Method.BAYES_AVG, Method.AICC, Method.GCV, Method.BIC):
            smoother.fit(method)
        self.assertEqual(FACTORIZATIONS.count, before + 1)

    def test_cv_scores_enter_later_traces_only(self):
        smoother = self.smoother()
        early = smoother.fit(Method.MAP)
        late = smoother.fit(Method.CV_OBS, seed=2, folds=5)
        self.assertTrue(np.all(np.isnan(early.score_trace["cv_obs"])))
        self.assertTrue(np.all(np.isfinite(late.score_trace["cv_obs"])))

    def test_score_trace_frame(self):
        frame = score_trace_frame(self.smoother().fit(Method.GCV))
        self.assertEqual(
            list(frame.columns),
            ["log10_lambda", "map_logpost", "aic", "aicc", "gcv", "bic", "cv_obs", "cv_well", "edf"],
        )
        self.assertEqual(tuple(frame.columns), tuple(ScoreTraceRow.__annotations__))
        self.assertEqual(len(frame), 33)
        self.assertTrue(np.all(np.diff(frame["edf"]) < 0))
        self.assertTrue(frame["cv_obs"].isna().all())

    def test_with_covariance(self):
        smoother = self.smoother()
        fit = smoother.with_covariance(smoother.fit(Method.AICC))
        self.assertEqual(fit.covariance.shape, (100, 100))
        averaged = smoother.fit(Method.BAYES_AVG)
        self.assertIsNone(smoother.with_covariance(averaged).covariance)

    def test_module_level_select(self):
        fit = select(self.ds, self.spec, "bic", grid=self.grid)
        self.assertIs(fit.method, Method.BIC)

    def test_collinear_wells_have_no_hull(self):
        ds = Dataset.from_arrays(
            ["A"] * 20 + ["B"] * 20,
            [0.0] * 20 + [1.0] * 20,
            [0.0] * 20 + [1.0] * 20,
            list(np.linspace(0, 1, 20)) * 2,
            np.linspace(0, 3, 40),
        )
        smoother = SpatiotemporalSmoother(ds, small_spec(ds, counts=(3, 3, 4)))
        self.assertIsNone(smoother.hull)


if __name__ == "__main__":
    unittest.main()
