"""Tests for configuration schemas and the fit artifact."""

import json
import unittest

import numpy as np

from spacetime_pspline.enums import LambdaPrior, Method
from spacetime_pspline.exceptions import ConfigurationError, DataError
from spacetime_pspline.predict import predict_points
from spacetime_pspline.schemas import (
    BasisSpecSchema,
    BenchConfigSchema,
    LambdaGridSchema,
    PriorConfigSchema,
    RunConfigSchema,
    build_spec,
    fit_from_artifact,
    fit_to_artifact,
    load_config,
)
from spacetime_pspline.selection import LambdaGrid, PriorConfig, SpatiotemporalSmoother
from tests.sample_data import make_dataset, small_spec


def run_settings(**overrides):
    settings = {
        "input": "wells.csv",
        "output": "fit.json",
        "basis": {"counts": [5, 5, 4]},
    }
    settings.update(overrides)
    return settings


class TestConfigSchemas(unittest.TestCase):
    """Test cases for run and benchmark configuration."""

    def test_run_defaults(self):
        cfg = load_config(RunConfigSchema(), run_settings())
        self.assertEqual(cfg["method"], "map")
        self.assertEqual(cfg["basis"]["degree"], 2)
        self.assertEqual(cfg["basis"]["penalty_order"], 1)
        self.assertIsInstance(cfg["grid"], LambdaGrid)
        self.assertEqual(len(cfg["grid"]), 101)
        self.assertIsInstance(cfg["prior"], PriorConfig)
        self.assertEqual(cfg["folds"], 10)
        self.assertEqual(cfg["drop_wells"], [])

    def test_method_names_are_normalised(self):
        cfg = load_config(RunConfigSchema(), run_settings(method=" Bayes-Avg "))
        self.assertEqual(Method(cfg["method"]), Method.BAYES_AVG)

    def test_unknown_method(self):
        with self.assertRaises(ConfigurationError) as cm:
            load_config(RunConfigSchema(), run_settings(method="reml"))
        self.assertIn("method", cm.exception.message)

    def test_basis_validation(self):
        with self.assertRaises(ConfigurationError):
            load_config(BasisSpecSchema(), {"counts": [5, 5]})
        with self.assertRaises(ConfigurationError):
            load_config(BasisSpecSchema(), {"counts": [5, 2, 4], "degree": 2})
        with self.assertRaises(ConfigurationError):
            load_config(BasisSpecSchema(), {"counts": [5, 5, 4], "penalty_order": 3})

    def test_grid_and_prior(self):
        grid = load_config(LambdaGridSchema(), {"lo": -2, "hi": 2, "n": 5})
        np.testing.assert_allclose(grid.log10_values, [-2, -1, 0, 1, 2])
        with self.assertRaises(ConfigurationError):
            load_config(LambdaGridSchema(), {"lo": 2, "hi": -2, "n": 5})
        with self.assertRaises(ConfigurationError):
            load_config(LambdaGridSchema(), {"n": 2})

        prior = load_config(PriorConfigSchema(), {"a": 0.5, "lambda_prior": "uniform_on_log_lambda"})
        self.assertEqual(prior.a, 0.5)
        self.assertIs(prior.lambda_prior, LambdaPrior.UNIFORM_ON_LOG_LAMBDA)
        with self.assertRaises(ConfigurationError):
            load_config(PriorConfigSchema(), {"b": 0.0})

    def test_bench_config(self):
        cfg = load_config(
            BenchConfigSchema(),
            {"scenarios": [1, 3], "methods": ["MAP", "cv-well"], "replicates": 4, "seed": 7},
        )
        self.assertEqual(cfg.scenarios, (1, 3))
        self.assertEqual(cfg.methods, (Method.MAP, Method.CV_WELL))
        self.assertEqual(cfg.base_seed, 7)
        self.assertEqual(cfg.basis_counts, (14, 8, 5))
        with self.assertRaises(ConfigurationError):
            load_config(BenchConfigSchema(), {"scenarios": [4]})
        with self.assertRaises(ConfigurationError):
            load_config(BenchConfigSchema(), {"replicates": 0})

    def test_build_spec_needs_ranges(self):
        basis = load_config(BasisSpecSchema(), {"counts": [5, 5, 4]})
        with self.assertRaises(ConfigurationError):
            build_spec(basis)
        spec = build_spec(basis, ranges=[(0, 1), (0, 2), (0, 3)])
        self.assertEqual(spec.counts, (5, 5, 4))
        self.assertEqual(spec.dims[1].hi, 2.0)


class TestFitArtifact(unittest.TestCase):
    """Test cases for writing and reading fit artifacts."""

    @classmethod
    def setUpClass(cls):
        cls.ds = make_dataset()
        cls.smoother = SpatiotemporalSmoother(cls.ds, small_spec(cls.ds), grid=LambdaGrid.default(-4, 4, 17))
        cls.fit = cls.smoother.fit(Method.MAP)

    def test_fit_survives_artifact(self):
        fit = self.smoother.with_covariance(self.fit)
        text = fit_to_artifact(fit)
        document = json.loads(text)
        self.assertEqual(document["format_version"], 1)
        self.assertEqual(list(document), sorted(document))

        loaded = fit_from_artifact(text)
        self.assertIs(loaded.method, Method.MAP)
        self.assertEqual(loaded.lam, fit.lam)
        self.assertEqual(loaded.spec, fit.spec)
        np.testing.assert_array_equal(loaded.coefficients, fit.coefficients)
        np.testing.assert_array_equal(loaded.covariance, fit.covariance)
        np.testing.assert_array_equal(loaded.grid.log10_values, fit.grid.log10_values)
        np.testing.assert_array_equal(loaded.hull.vertices, fit.hull.vertices)
        self.assertEqual(loaded.hull.t_interval, fit.hull.t_interval)
        self.assertEqual(loaded.data_digest, self.ds.digest())
        self.assertEqual(set(loaded.score_trace), set(fit.score_trace))
        np.testing.assert_array_equal(
            predict_points(loaded, self.ds.coordinates), predict_points(fit, self.ds.coordinates)
        )

    def test_model_average_artifact(self):
        averaged = self.smoother.fit(Method.BAYES_AVG)
        loaded = fit_from_artifact(fit_to_artifact(averaged))
        self.assertIsNone(loaded.lam)
        self.assertIsNone(loaded.covariance)
        np.testing.assert_array_equal(loaded.weights, averaged.weights)
        self.assertAlmostEqual(loaded.posterior["mean"], averaged.posterior["mean"])

    def test_invalid_json(self):
        with self.assertRaises(DataError):
            fit_from_artifact("{not json")

    def test_wrong_format_version(self):
        document = json.loads(fit_to_artifact(self.fit))
        document["format_version"] = 99
        with self.assertRaises(ConfigurationError):
            fit_from_artifact(json.dumps(document))

    def test_corrupt_numeric_block(self):
        document = json.loads(fit_to_artifact(self.fit))
        document["coefficients"]["data"] = "###"
        with self.assertRaises(ConfigurationError):
            fit_from_artifact(json.dumps(document))


if __name__ == "__main__":
    unittest.main()
