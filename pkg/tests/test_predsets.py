import itertools
import math
import unittest

import numpy as np

from cab.alignment import true_alignment
from cab.cascade import is_misaligned
from cab.domain import Categorical, InvalidAlpha, LabelOutOfRange, PredictionSet
from cab.predsets import (
    EmptyFeatureSpace,
    EmptyInput,
    InvalidKernel,
    InvalidLevel,
    KernelKind,
    KernelSpec,
    LocalizedQuantile,
    WeightedPoint,
    cp_threshold,
    hms,
    kernel_eval,
    lcp_threshold,
    nll_score,
    nll_scores,
    oracle_set,
    suggest_bandwidth,
    threshold_set,
    weighted_quantile,
)
from tests.trial_test import dist, example


def brute_force_hms_size(probs, alpha):
    if alpha == 0:
        return int(np.count_nonzero(probs))
    k = len(probs)
    for size in range(k + 1):
        for subset in itertools.combinations(range(k), size):
            if math.fsum(probs[i] for i in subset) >= 1 - alpha - 1e-12:
                return size
    return k


def reference_quantile(values, weights, level):
    total = math.fsum(weights)
    pairs = sorted(zip(values, weights), key=lambda p: p[0])
    running = 0.0
    for value, weight in pairs:
        running += weight
        if running / total >= level - 1e-12:
            return value
    return pairs[-1][0]


class TestHighestMassSet(unittest.TestCase):
    def test_uniform(self):
        self.assertEqual(hms(dist(0.25, 0.25, 0.25, 0.25), 0.2).members, (0, 1, 2, 3))

    def test_peaked(self):
        self.assertEqual(hms(dist(0.7, 0.2, 0.08, 0.02), 0.2).members, (0, 1))

    def test_alpha_zero_is_full_set(self):
        self.assertEqual(len(hms(dist(0.5, 0.3, 0.15, 0.05), 0.0)), 4)

    def test_ties_by_ascending_index(self):
        self.assertEqual(hms(dist(0.2, 0.4, 0.4), 0.5).members, (1, 2))
        self.assertEqual(hms(dist(0.2, 0.4, 0.4), 0.6).members, (1,))

    def test_minimal_against_brute_force(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            k = int(rng.integers(2, 7))
            probs = rng.dirichlet(np.full(k, 0.5))
            alpha = float(rng.uniform(0.0, 0.9))
            d = Categorical(probs)
            s = hms(d, alpha)
            self.assertGreaterEqual(d.mass(s), 1 - alpha - 1e-12)
            self.assertEqual(len(s), brute_force_hms_size(d.probs, alpha))

    def test_nested_in_alpha(self):
        d = dist(0.4, 0.3, 0.2, 0.1)
        sets = [hms(d, a) for a in (0.05, 0.2, 0.4, 0.7)]
        for wider, narrower in zip(sets, sets[1:]):
            self.assertTrue(narrower.issubset(wider))

    def test_rounded_oracle_set_counts_as_aligned(self):
        # 0.7 + 0.2 sums to 0.8999999999999999
        d = dist(0.7, 0.2, 0.1)
        s = hms(d, 0.1)
        self.assertEqual(s.members, (0, 1))
        self.assertFalse(is_misaligned(true_alignment(d, s), 0.1))

    def test_oracle_sets_are_aligned(self):
        rng = np.random.default_rng(13)
        for _ in range(500):
            k = int(rng.integers(2, 8))
            probs = np.round(rng.dirichlet(np.ones(k)), 2)
            probs[0] = round(1.0 - math.fsum(probs[1:]), 2)
            if probs[0] < 0:
                continue
            d = Categorical(probs)
            for alpha in (0.0, 0.05, 0.1, 0.2, 0.3):
                self.assertFalse(is_misaligned(true_alignment(d, hms(d, alpha)), alpha))

    def test_alpha_zero_keeps_tiny_labels(self):
        self.assertEqual(hms(dist(1 - 1e-13, 1e-13), 0.0).members, (0, 1))

    def test_alpha_zero_skips_zero_mass(self):
        self.assertEqual(hms(dist(0.5, 0.0, 0.5), 0.0).members, (0, 2))

    def test_oracle_is_cloud_hms(self):
        d = dist(0.6, 0.3, 0.1)
        self.assertEqual(oracle_set(d, 0.2), hms(d, 0.2))

    def test_invalid_alpha(self):
        with self.assertRaises(InvalidAlpha):
            hms(dist(0.5, 0.5), 1.0)


class TestScores(unittest.TestCase):
    def test_values(self):
        self.assertEqual(nll_score(dist(1.0, 0.0), 0), 0.0)
        self.assertEqual(nll_score(dist(1.0, 0.0), 1), math.inf)
        self.assertAlmostEqual(nll_score(dist(math.exp(-2), 1 - math.exp(-2)), 0), 2.0)

    def test_vector_agrees(self):
        d = dist(0.7, 0.2, 0.1)
        scores = nll_scores(d)
        for y in range(3):
            self.assertEqual(nll_score(d, y), scores[y])

    def test_out_of_range(self):
        with self.assertRaises(LabelOutOfRange):
            nll_score(dist(0.5, 0.5), 2)


class TestWeightedQuantile(unittest.TestCase):
    points = [WeightedPoint(v, 0.2) for v in (0.5, 1.0, 1.5, 2.0, math.inf)]

    def test_examples(self):
        self.assertEqual(weighted_quantile(self.points, 0.8), 2.0)
        self.assertEqual(weighted_quantile(self.points, 0.5), 1.5)
        self.assertEqual(weighted_quantile([WeightedPoint(math.inf, 1.0)], 0.3), math.inf)

    def test_unnormalized_weights(self):
        points = [WeightedPoint(v, 3.0) for v, _ in self.points]
        self.assertEqual(weighted_quantile(points, 0.8), 2.0)

    def test_against_reference(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            n = int(rng.integers(1, 30))
            values = list(rng.normal(size=n)) + [math.inf]
            weights = list(rng.uniform(0.01, 1.0, size=n + 1))
            level = float(rng.uniform())
            got = weighted_quantile(
                [WeightedPoint(v, w) for v, w in zip(values, weights)], level
            )
            self.assertEqual(got, reference_quantile(values, weights, level))
            self.assertIn(got, values)

    def test_errors(self):
        with self.assertRaises(EmptyInput):
            weighted_quantile([], 0.5)
        with self.assertRaises(InvalidLevel):
            weighted_quantile(self.points, 1.5)


class TestConformalThreshold(unittest.TestCase):
    def test_examples(self):
        self.assertEqual(cp_threshold([0.5, 1.0, 1.5, 2.0], 0.2), 2.0)
        self.assertEqual(cp_threshold([], 0.3), math.inf)
        self.assertEqual(cp_threshold([1.0], 0.5), 1.0)

    def test_threshold_set(self):
        d = dist(0.7, 0.2, 0.1)
        self.assertEqual(threshold_set(d, math.inf).members, (0, 1, 2))
        self.assertEqual(threshold_set(d, nll_scores(d)[1]).members, (0, 1))
        self.assertEqual(threshold_set(dist(1.0, 0.0), 0.0).members, (0,))

    def test_threshold_nonincreasing_in_alpha(self):
        rng = np.random.default_rng(3)
        alphas = np.linspace(0.0, 0.95, 20)
        for _ in range(100):
            scores = rng.exponential(size=int(rng.integers(0, 40)))
            thresholds = [cp_threshold(scores, float(a)) for a in alphas]
            self.assertEqual(thresholds, sorted(thresholds, reverse=True))

    def test_threshold_sets_nested(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            d = Categorical(rng.dirichlet(np.ones(int(rng.integers(2, 9)))))
            low, high = sorted(rng.exponential(size=2) * 3)
            self.assertTrue(threshold_set(d, low).issubset(threshold_set(d, high)))

    def test_marginal_coverage(self):
        # exchangeable scores: P(score_test <= q) >= 1 - alpha
        rng = np.random.default_rng(2)
        alpha, n, hits, trials = 0.1, 49, 0, 4000
        for _ in range(trials):
            scores = rng.exponential(size=n + 1)
            if scores[-1] <= cp_threshold(scores[:-1], alpha):
                hits += 1
        self.assertGreaterEqual(hits / trials, 1 - alpha - 4 * math.sqrt(0.09 / trials))


class TestKernel(unittest.TestCase):
    def test_values(self):
        g = KernelSpec(KernelKind.GAUSSIAN, 2.0)
        self.assertEqual(kernel_eval(g, [1.0, 2.0], [1.0, 2.0]), 1.0)
        self.assertAlmostEqual(kernel_eval(g, [0.0, 0.0], [2.0, 0.0]), math.exp(-0.5))
        self.assertEqual(kernel_eval(KernelSpec(KernelKind.CONSTANT), [0.0], [9.0]), 1.0)

    def test_invalid(self):
        with self.assertRaises(InvalidKernel):
            KernelSpec(KernelKind.GAUSSIAN, 0.0).check()
        with self.assertRaises(InvalidKernel):
            KernelSpec('box', 1.0).check()


class TestLocalizedConformal(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(7)
        self.cal = []
        for i in range(50):
            probs = rng.dirichlet(np.ones(4))
            x = example(
                f'c{i}', probs, label=int(rng.integers(4)), features=rng.uniform(size=2)
            )
            self.cal.append((x, nll_score(x.edge_dist, x.label)))
        self.test = example('t', (0.4, 0.3, 0.2, 0.1), features=[0.5, 0.5])
        self.scores = [s for _, s in self.cal]

    def test_constant_kernel_equals_conformal(self):
        spec = KernelSpec(KernelKind.CONSTANT)
        for alpha in (0.05, 0.1, 0.2, 0.5):
            self.assertEqual(
                lcp_threshold(self.test, self.cal, alpha, spec, np.random.default_rng(0)),
                cp_threshold(self.scores, alpha),
            )

    def test_constant_kernel_uniform_weights(self):
        lq = LocalizedQuantile(None, [0.3, 0.7], KernelSpec(KernelKind.CONSTANT))
        w = lq.weights(np.zeros(0), np.random.default_rng(0))
        np.testing.assert_array_equal(w / w.sum(), [1 / 3, 1 / 3, 1 / 3])

    def test_huge_bandwidth_matches_conformal(self):
        # 0.9 * 51 = 45.9 keeps the level far from a cumulative-weight step
        spec = KernelSpec(KernelKind.GAUSSIAN, 1e9)
        got = lcp_threshold(self.test, self.cal, 0.1, spec, np.random.default_rng(3))
        self.assertEqual(got, cp_threshold(self.scores, 0.1))

    def test_deterministic_for_seed(self):
        spec = KernelSpec(KernelKind.GAUSSIAN, 0.3)
        a = lcp_threshold(self.test, self.cal, 0.2, spec, np.random.default_rng(9))
        b = lcp_threshold(self.test, self.cal, 0.2, spec, np.random.default_rng(9))
        self.assertEqual(a, b)
        self.assertIn(a, self.scores + [math.inf])

    def test_vectorised_matches_functional(self):
        spec = KernelSpec(KernelKind.GAUSSIAN, 0.3)
        features = np.vstack([x.features for x, _ in self.cal])
        lq = LocalizedQuantile(features, self.scores, spec)
        self.assertEqual(
            lq.threshold(self.test.features, 0.2, np.random.default_rng(4)),
            lcp_threshold(self.test, self.cal, 0.2, spec, np.random.default_rng(4)),
        )

    def test_empty_calibration(self):
        spec = KernelSpec(KernelKind.GAUSSIAN, 0.3)
        got = lcp_threshold(self.test, [], 0.2, spec, np.random.default_rng(0))
        self.assertEqual(got, math.inf)

    def test_gaussian_needs_features(self):
        spec = KernelSpec(KernelKind.GAUSSIAN, 0.3)
        bare = example('b', (0.5, 0.5))
        with self.assertRaises(EmptyFeatureSpace):
            lcp_threshold(bare, [], 0.2, spec, np.random.default_rng(0))


class TestSuggestBandwidth(unittest.TestCase):
    def test_ratio_at_median(self):
        rng = np.random.default_rng(1)
        cal = rng.normal(size=(40, 3))
        query = rng.normal(size=(15, 3))
        h = suggest_bandwidth(cal, query, ratio=10.0)
        self.assertGreater(h, 0)

        sq = ((query[:, None, :] - cal[None, :, :]) ** 2).sum(axis=2)
        spread = np.median(sq.max(axis=1) - sq.min(axis=1))
        self.assertAlmostEqual(math.exp(spread / (2 * h * h)), 10.0, places=6)

    def test_degenerate_features(self):
        cal = np.ones((5, 2))
        self.assertEqual(suggest_bandwidth(cal, np.ones((3, 2))), 1.0)

    def test_errors(self):
        with self.assertRaises(EmptyFeatureSpace):
            suggest_bandwidth(np.zeros((5, 0)), np.zeros((2, 0)))
        with self.assertRaises(EmptyInput):
            suggest_bandwidth(np.zeros((1, 2)), np.zeros((2, 2)))
        with self.assertRaises(InvalidKernel):
            suggest_bandwidth(np.zeros((3, 2)), np.zeros((2, 2)), ratio=1.0)


class TestPredictionSetType(unittest.TestCase):
    def test_threshold_set_is_prediction_set(self):
        self.assertIsInstance(threshold_set(dist(0.5, 0.5), 1.0), PredictionSet)


if __name__ == '__main__':
    unittest.main()
