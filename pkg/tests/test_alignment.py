import unittest

import numpy as np

from cab.alignment import (
    AlignmentPredictor,
    AlignmentSample,
    EmptyTrainingSet,
    FeatureOutOfRange,
    edge_coverage_feature,
    fit_predictor,
    predict_alignment,
    true_alignment,
)
from cab.domain import DataError, DimensionMismatch, PredictionSet
from tests.trial_test import dist


def samples(*pairs):
    return [AlignmentSample(f's{i}', f, t) for i, (f, t) in enumerate(pairs)]


class TestAlignmentScores(unittest.TestCase):
    def test_true_alignment(self):
        cloud = dist(0.5, 0.2, 0.3)
        self.assertAlmostEqual(true_alignment(cloud, PredictionSet([0, 1])), 0.7)
        self.assertEqual(true_alignment(cloud, PredictionSet([0, 1, 2])), 1.0)
        self.assertEqual(true_alignment(cloud, PredictionSet()), 0.0)

    def test_edge_feature(self):
        edge = dist(0.6, 0.3, 0.1)
        self.assertEqual(edge_coverage_feature(edge, PredictionSet([0])), 0.6)
        self.assertEqual(edge_coverage_feature(edge, PredictionSet([0, 1, 2])), 1.0)
        self.assertEqual(edge_coverage_feature(edge, PredictionSet()), 0.0)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            true_alignment(dist(0.5, 0.5), PredictionSet([0, 2]))


class TestIsotonicFit(unittest.TestCase):
    def test_monotone_pair_is_exact(self):
        p = fit_predictor(samples((0.2, 0.3), (0.8, 0.9)))
        self.assertEqual(p.predict(0.2), 0.3)
        self.assertEqual(p.predict(0.8), 0.9)
        self.assertEqual(p.predict(0.5), 0.3)
        self.assertEqual(p.predict(1.0), 0.9)

    def test_violating_pair_is_pooled(self):
        p = fit_predictor(samples((0.2, 0.9), (0.8, 0.3)))
        self.assertAlmostEqual(p.predict(0.2), 0.6)
        self.assertAlmostEqual(p.predict(0.8), 0.6)

    def test_single_sample(self):
        p = fit_predictor(samples((0.5, 0.7)))
        for f in (0.0, 0.5, 1.0):
            self.assertEqual(p.predict(f), 0.7)

    def test_below_first_knot_takes_first_value(self):
        p = fit_predictor(samples((0.4, 0.2), (0.6, 0.5)))
        self.assertEqual(p.predict(0.1), 0.2)

    def test_duplicate_features_are_averaged(self):
        p = fit_predictor(samples((0.5, 0.2), (0.5, 0.6), (0.9, 0.8)))
        self.assertEqual(len(p.knots), 2)
        self.assertAlmostEqual(p.predict(0.5), 0.4)

    def test_monotone_and_bounded(self):
        rng = np.random.default_rng(0)
        features = rng.uniform(size=100)
        targets = np.clip(features + rng.normal(scale=0.3, size=100), 0, 1)
        p = fit_predictor(samples(*zip(features, targets)))
        grid = np.linspace(0, 1, 101)
        fitted = p.predict_many(grid)
        self.assertTrue(np.all(np.diff(fitted) >= 0))
        self.assertTrue(np.all((fitted >= 0) & (fitted <= 1)))
        self.assertEqual([p.predict(g) for g in grid], list(fitted))

    def test_pooled_mean_preserved(self):
        # isotonic regression preserves the sample mean
        rng = np.random.default_rng(1)
        features = rng.uniform(size=50)
        targets = rng.uniform(size=50)
        p = fit_predictor(samples(*zip(features, targets)))
        self.assertAlmostEqual(p.predict_many(features).mean(), targets.mean())

    def test_empty(self):
        with self.assertRaises(EmptyTrainingSet):
            fit_predictor([])


class TestPredictor(unittest.TestCase):
    def test_constant(self):
        p = AlignmentPredictor.constant(0.7)
        for f in (0.0, 0.3, 1.0):
            self.assertEqual(predict_alignment(p, f), 0.7)

    def test_out_of_range(self):
        p = AlignmentPredictor.constant(0.5)
        for f in (-0.1, 1.1, float('nan')):
            with self.assertRaises(FeatureOutOfRange):
                predict_alignment(p, f)

    def test_json(self):
        p = fit_predictor(samples((0.1, 0.2), (0.4, 0.1), (0.9, 0.95)))
        q = AlignmentPredictor.from_json(p.to_json())
        self.assertEqual(q.knots, p.knots)
        with self.assertRaises(DataError):
            AlignmentPredictor.from_json('{"knots": 3}')

    def test_invalid_knots(self):
        with self.assertRaises(DataError):
            AlignmentPredictor([0.5, 0.2], [0.1, 0.2])
        with self.assertRaises(DataError):
            AlignmentPredictor([0.2, 0.5], [0.3, 0.1])


if __name__ == '__main__':
    unittest.main()
