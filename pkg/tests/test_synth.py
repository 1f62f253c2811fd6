import math
import unittest

import numpy as np

from cab.domain import ConfigError, PartitionSizes, validate_example
from cab.harness import edge_reliability
from cab.synth import InvalidTemperature, SynthConfig, gen_pool, temperature_distort
from tests.trial_test import dist


class TestTemperature(unittest.TestCase):
    def test_identity(self):
        cloud = dist(0.5, 0.3, 0.2)
        edge = temperature_distort(cloud, 1.0, 0.0, np.random.default_rng(0))
        np.testing.assert_allclose(edge.probs, cloud.probs, rtol=0, atol=1e-12)

    def test_sharpening(self):
        edge = temperature_distort(dist(0.8, 0.2), 0.5, 0.0, np.random.default_rng(0))
        np.testing.assert_allclose(edge.probs, [0.64 / 0.68, 0.04 / 0.68])

    def test_flattening_limit(self):
        edge = temperature_distort(dist(0.7, 0.2, 0.1), 1e9, 0.0, np.random.default_rng(0))
        np.testing.assert_allclose(edge.probs, np.full(3, 1 / 3), atol=1e-6)

    def test_zero_mass_stays_zero(self):
        edge = temperature_distort(dist(0.9, 0.1, 0.0), 2.0, 0.5, np.random.default_rng(0))
        self.assertEqual(edge[2], 0.0)

    def test_invalid(self):
        with self.assertRaises(InvalidTemperature):
            temperature_distort(dist(0.5, 0.5), 0.0, 0.0, np.random.default_rng(0))


class TestPool(unittest.TestCase):
    def test_shape(self):
        pool = gen_pool(SynthConfig(num_labels=5, feature_dim=3, pool_size=50, seed=1))
        self.assertEqual(len(pool), 50)
        self.assertEqual(len({x.id for x in pool}), 50)
        for x in pool:
            self.assertEqual(x.num_labels, 5)
            self.assertEqual(x.features.shape, (3,))
            self.assertTrue(0 <= x.label < 5)

    def test_padding(self):
        pool = gen_pool(SynthConfig(num_labels=3, feature_dim=5, pool_size=4))
        for x in pool:
            np.testing.assert_array_equal(x.features[3:], [0.0, 0.0])

    def test_deterministic(self):
        config = SynthConfig(pool_size=30, seed=4, edge_noise=0.2)
        a, b = gen_pool(config), gen_pool(config)
        for x, y in zip(a, b):
            self.assertEqual(x.id, y.id)
            self.assertEqual(x.label, y.label)
            np.testing.assert_array_equal(x.features, y.features)
            self.assertEqual(x.cloud_dist, y.cloud_dist)
            self.assertEqual(x.edge_dist, y.edge_dist)

    def test_seed_changes_pool(self):
        a = gen_pool(SynthConfig(pool_size=30, seed=1))
        b = gen_pool(SynthConfig(pool_size=30, seed=2))
        self.assertNotEqual([x.cloud_dist for x in a], [x.cloud_dist for x in b])

    def test_high_concentration_is_near_uniform(self):
        config = SynthConfig(num_labels=4, dirichlet_concentration=1e9, pool_size=10_000)
        worst = max(np.abs(x.cloud_dist.probs - 0.25).max() for x in gen_pool(config))
        self.assertLess(worst, 1e-3)

    def test_labels_follow_cloud(self):
        config = SynthConfig(num_labels=4, pool_size=100_000, seed=3)
        pool = gen_pool(config)
        labels = np.array([x.label for x in pool])
        probs = np.vstack([x.cloud_dist.probs for x in pool])
        onehot = np.eye(4)[labels]
        # label indicator minus its conditional mean has mean zero
        resid = onehot - probs
        se = resid.std(axis=0, ddof=1) / np.sqrt(len(pool))
        self.assertTrue(np.all(np.abs(resid.mean(axis=0)) < 3 * se))

    def test_examples_validate(self):
        for temperature, noise in ((0.5, 0.0), (2.0, 0.4), (1.0, 1.0)):
            config = SynthConfig(edge_temperature=temperature, edge_noise=noise, pool_size=300)
            for x in gen_pool(config):
                validate_example(x)

    def test_untempered_edge_is_calibrated(self):
        pool = gen_pool(SynthConfig(edge_temperature=1.0, pool_size=100_000, seed=5))
        diagram = edge_reliability(pool, 10)
        for c, a, n in zip(diagram.confidence_mean, diagram.accuracy, diagram.count):
            if n == 0:
                continue
            # sparse bins get their sampling error on top
            tolerance = max(0.02, 4 * math.sqrt(c * (1 - c) / n))
            self.assertLess(abs(a - c), tolerance)

    def test_edge_over_confident_at_low_temperature(self):
        pool = gen_pool(SynthConfig(edge_temperature=0.5, pool_size=200))
        sharper = [x.edge_dist.probs.max() >= x.cloud_dist.probs.max() - 1e-12 for x in pool]
        self.assertTrue(all(sharper))


class TestConfig(unittest.TestCase):
    def test_checks(self):
        with self.assertRaises(ConfigError):
            SynthConfig(num_labels=1).check()
        with self.assertRaises(InvalidTemperature):
            SynthConfig(edge_temperature=-1.0).check()
        with self.assertRaises(ConfigError):
            SynthConfig(pool_size=10).check(PartitionSizes())

    def test_feature_dim_defaults_to_labels(self):
        self.assertEqual(SynthConfig(num_labels=7).dim, 7)


if __name__ == '__main__':
    unittest.main()
