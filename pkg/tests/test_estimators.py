from unittest import TestCase, skipUnless

import math

import numpy as np

from pufentropy import (ClassMap, ClassKey, SamplerConfig, EntropyOrder, EntropyEstimate, EmptyMap, EstimatorError,
                        NonPoissonizedInput, InsufficientBatches, UndefinedEstimate, IncompatibleMaps,
                        exact_entropies, power_sum, h0_lower, h1_plugin, h1_bias_bound, support_size, power_sum_batch,
                        h2_unbiased, h2_multinomial, hinf_wilson, wilson_interval, estimate_all, check_ordering,
                        census_map, exact_class_probabilities_n3, exact_power_sum_n3, dictator_key, run,
                        poisson_batches)
from tests import LONG_TESTS, load_table


def make_map(counts, n=3, **kwargs):
    return ClassMap(n=n, distribution="gaussian", counts=counts, **kwargs)


class TestExact(TestCase):

    def test_exact_entropies_n3(self):
        h = exact_entropies(exact_class_probabilities_n3())
        for row in load_table("exact_entropies.txt"):
            if int(row[0]) == 3:
                h1, h2, hinf = (float(v) for v in row[1:])
        self.assertAlmostEqual(h[EntropyOrder.H1], h1, places=4)
        self.assertAlmostEqual(h[EntropyOrder.H2], h2, places=4)
        self.assertAlmostEqual(h[EntropyOrder.HINF], hinf, places=4)
        self.assertAlmostEqual(h[EntropyOrder.H0], math.log2(14))
        self.assertAlmostEqual(2 ** -h[EntropyOrder.H2], exact_power_sum_n3())

    def test_exact_entropies_small(self):
        for n, key in [(1, [1]), (2, [2, 0])]:
            h = exact_entropies({ClassKey(key): 1.0})
            for order in EntropyOrder:
                self.assertAlmostEqual(h[order], n)
        self.assertAlmostEqual(power_sum({ClassKey([2, 0]): 1.0}), 0.25)


class TestH0(TestCase):

    def test_h0(self):
        est = h0_lower(make_map({(4, 0, 0): 5, (2, 2, 2): 3}))
        self.assertAlmostEqual(est.value, math.log2(14))
        self.assertEqual(est.ci_high, 9)
        self.assertAlmostEqual(h0_lower(make_map({(4, 0, 0): 5})).value, math.log2(6))
        census = h0_lower(census_map(4))
        self.assertAlmostEqual(census.value, math.log2(104))
        self.assertEqual(census.ci_low, census.ci_high)
        with self.assertRaises(EmptyMap):
            h0_lower(make_map({}))


class TestH1(TestCase):

    def test_single_class(self):
        est = h1_plugin(make_map({(2, 0): 1000}, n=2))
        self.assertEqual(est.value, 2.0)
        self.assertEqual(est.ci_low, 2.0)
        self.assertEqual(est.ci_high, 2.0)
        self.assertEqual(est.bias_bound, 0.0)

    def test_formula(self):
        est = h1_plugin(make_map({(4, 0, 0): 65, (2, 2, 2): 35}))
        self.assertAlmostEqual(est.value, 3.6643, places=4)
        self.assertLess(est.ci_low, est.value)
        self.assertGreater(est.ci_high, est.value)
        self.assertAlmostEqual(est.bias_bound, math.log2(1 + 1 / 100))
        self.assertIn("exact class count", est.method)

    def test_interval(self):
        cmap = make_map({(4, 0, 0): 6500, (2, 2, 2): 3500})
        est = h1_plugin(cmap, confidence=0.95)
        wider = h1_plugin(cmap, confidence=0.99)
        self.assertLess(wider.ci_low, est.ci_low)
        self.assertGreater(wider.ci_high, est.ci_high)
        self.assertEqual(est.sample_size, 10000)
        # the upper end carries the bias bound, the lower end does not
        self.assertAlmostEqual((est.ci_high - est.value) - (est.value - est.ci_low), est.bias_bound)

    def test_bias_bound(self):
        cmap = make_map({(4, 0, 0): 10 ** 6})
        self.assertAlmostEqual(h1_bias_bound(cmap, m=2), math.log2(1 + 1e-6))
        self.assertAlmostEqual(h1_bias_bound(cmap, m=2), 1.4427e-6, places=9)
        self.assertEqual(h1_bias_bound(cmap, m=1), 0.0)
        self.assertLess(h1_bias_bound(make_map({(16, 0, 0, 0, 0): 10 ** 5}, n=5), m=7), 0.01)
        self.assertEqual(support_size(make_map({(2, 2, 2): 1})), (2, True))
        large = ClassMap(n=8, distribution="gaussian", counts={(128,) + (0,) * 7: 3})
        self.assertEqual(support_size(large), (1, False))
        self.assertIn("lower bound", h1_plugin(large).method)
        with self.assertRaises(EmptyMap):
            h1_bias_bound(make_map({}))

    def test_errors(self):
        with self.assertRaises(EmptyMap):
            h1_plugin(make_map({}))
        with self.assertRaises(EstimatorError):
            h1_plugin(make_map({(4, 0, 0): 1}))
        self.assertRaises(ValueError, lambda: h1_plugin(make_map({(4, 0, 0): 5}), confidence=1.5))


class TestH2(TestCase):

    def test_batch_formula(self):
        cmap = make_map({(4, 0, 0): 3, (2, 2, 2): 1}, poisson_n=4)
        self.assertAlmostEqual(power_sum_batch(cmap), 3 * 2 / (6 * 16))
        with self.assertRaises(NonPoissonizedInput):
            power_sum_batch(make_map({(4, 0, 0): 3}))
        with self.assertRaises(EmptyMap):
            power_sum_batch(make_map({}, poisson_n=0))

    def test_n2(self):
        batches = poisson_batches(SamplerConfig(n=2, rounds=1000, seed=40), 1000, 20)
        est = h2_unbiased(batches)
        self.assertLess(abs(est.value - 2), 0.1)
        self.assertLessEqual(est.ci_low, est.value)
        self.assertGreaterEqual(est.ci_high, est.value)
        self.assertEqual(est.sample_size, sum(b.rounds for b in batches))

    def test_single_batch(self):
        est = h2_unbiased([make_map({(4, 0, 0): 3, (2, 2, 2): 1}, poisson_n=4)])
        self.assertAlmostEqual(est.value, -math.log2(1 / 16))
        self.assertEqual(est.ci_low, est.ci_high)
        with self.assertRaises(InsufficientBatches):
            h2_unbiased([make_map({(4, 0, 0): 3}, poisson_n=4)], min_batches=2)

    def test_errors(self):
        with self.assertRaises(EmptyMap):
            h2_unbiased([])
        with self.assertRaises(NonPoissonizedInput):
            h2_unbiased([make_map({(4, 0, 0): 3}, poisson_n=3), make_map({(4, 0, 0): 3})])
        with self.assertRaises(IncompatibleMaps):
            h2_unbiased([make_map({}, poisson_n=3), ClassMap(n=2, distribution="gaussian", poisson_n=3)])
        # no collisions at all: the power-sum estimate is zero
        with self.assertRaises(UndefinedEstimate):
            h2_unbiased([make_map({(4, 0, 0): 1, (2, 2, 2): 1}, poisson_n=2)] * 2)

    def test_unbiased(self):
        # Poissonized class counts are independent Poisson variables with means N * q_k
        probs = exact_class_probabilities_n3()
        rng = np.random.default_rng(12)
        poisson_n = 10 ** 5
        batches = 1000
        values = []
        for _ in range(batches):
            counts = {key.to_tuple(): int(rng.poisson(poisson_n * q)) for key, q in probs.items()}
            values.append(power_sum_batch(make_map(counts, poisson_n=poisson_n)))
        values = np.array(values)
        se = values.std(ddof=1) / math.sqrt(batches)
        self.assertLess(abs(values.mean() - exact_power_sum_n3()), 4 * se)

    def test_multinomial(self):
        est = h2_multinomial(make_map({(2, 0): 50}, n=2))
        self.assertEqual(est.value, 2.0)
        cmap = make_map({(4, 0, 0): 3, (2, 2, 2): 2})
        expected = (3 * 2 / 6 + 2 * 1 / 8) / (5 * 4)
        self.assertAlmostEqual(h2_multinomial(cmap).value, -math.log2(expected))
        self.assertAlmostEqual(h2_multinomial(census_map(3)).value, math.log2(14))
        with self.assertRaises(EstimatorError):
            h2_multinomial(make_map({(4, 0, 0): 1}))


class TestHinf(TestCase):

    def test_wilson(self):
        low, high = wilson_interval(500, 1000)
        self.assertAlmostEqual(low, 0.4690, places=3)
        self.assertAlmostEqual(high, 0.5310, places=3)
        self.assertAlmostEqual(wilson_interval(0, 10)[0], 0.0)
        self.assertAlmostEqual(wilson_interval(10, 10)[1], 1.0)
        self.assertRaises(ValueError, lambda: wilson_interval(11, 10))
        self.assertRaises(ValueError, lambda: wilson_interval(0, 0))

    def test_hinf(self):
        est = hinf_wilson(make_map({(2, 0): 100}, n=2))
        self.assertAlmostEqual(est.value, 2.0)
        est = hinf_wilson(make_map({(4, 0, 0): 65, (2, 2, 2): 35}))
        self.assertAlmostEqual(est.value, -math.log2(0.65) + math.log2(6))
        low, high = wilson_interval(65, 100)
        self.assertAlmostEqual(est.ci_low, -math.log2(high) + math.log2(6))
        self.assertAlmostEqual(est.ci_high, -math.log2(low) + math.log2(6))
        self.assertAlmostEqual(hinf_wilson(census_map(3)).value, math.log2(14))

    def test_not_dictator(self):
        with self.assertLogs("pufentropy.estimators", level="WARNING"):
            est = hinf_wilson(make_map({(4, 0, 0): 10, (2, 2, 2): 90}))
        self.assertAlmostEqual(est.value, -math.log2(0.9) + math.log2(8))
        with self.assertRaises(EmptyMap):
            hinf_wilson(make_map({}))


class TestCombined(TestCase):

    def test_estimate(self):
        self.assertRaises(ValueError, lambda: EntropyEstimate("h1", 2.0, 2.5, 3.0, 0.95, 10, "x"))
        self.assertRaises(ValueError, lambda: EntropyEstimate("h3", 2.0, 1.0, 3.0, 0.95, 10, "x"))
        est = EntropyEstimate("h1", 2.0, 1.0, 3.0, 0.95, 10, "x")
        self.assertEqual(est.order, EntropyOrder.H1)
        self.assertEqual(est.half_width(), 1.0)
        with self.assertRaises(AttributeError):
            est.ci_low = 0.0

    def test_estimate_all(self):
        cmap = make_map({(4, 0, 0): 650, (2, 2, 2): 350})
        estimates = estimate_all([cmap], [EntropyOrder.H0, EntropyOrder.H1, EntropyOrder.HINF])
        self.assertEqual(list(estimates), [EntropyOrder.H0, EntropyOrder.H1, EntropyOrder.HINF])
        with self.assertRaises(NonPoissonizedInput):
            estimate_all([cmap], ["h2"])
        with self.assertRaises(InsufficientBatches):
            estimate_all([make_map({(4, 0, 0): 5}, poisson_n=5)], ["h2"])
        with self.assertRaises(EmptyMap):
            estimate_all([], ["h0"])
        fallback = estimate_all([cmap], list(EntropyOrder), h2_fallback=True)
        self.assertEqual(check_ordering(fallback), [])
        census = estimate_all([census_map(4)], list(EntropyOrder))
        for est in census.values():
            self.assertAlmostEqual(est.value, math.log2(104))

    def test_ordering(self):
        bad = {EntropyOrder.HINF: EntropyEstimate("hinf", 5.0, 5.0, 5.0, 0.95, 10, "x"),
               EntropyOrder.H1: EntropyEstimate("h1", 3.0, 2.9, 3.1, 0.95, 10, "x")}
        with self.assertLogs("pufentropy.estimators", level="WARNING"):
            violations = check_ordering(bad)
        self.assertEqual(len(violations), 1)
        # slack of the summed half widths
        ok = {EntropyOrder.HINF: EntropyEstimate("hinf", 3.2, 3.0, 3.4, 0.95, 10, "x"),
              EntropyOrder.H1: EntropyEstimate("h1", 3.0, 2.9, 3.1, 0.95, 10, "x")}
        self.assertEqual(check_ordering(ok), [])

    def test_sampled_ordering(self):
        for n in range(3, 7):
            cmap = run(SamplerConfig(n=n, rounds=20000, seed=n, shards=2), workers=1)
            estimates = estimate_all([cmap], list(EntropyOrder), h2_fallback=True)
            self.assertEqual(check_ordering(estimates), [], n)
            for est in estimates.values():
                self.assertTrue(0 <= est.ci_low <= est.value <= est.ci_high <= n * n)

    @skipUnless(LONG_TESTS, "long Monte-Carlo run")
    def test_intervals_cover_exact_values(self):
        table = {int(row[0]): [float(v) for v in row[1:]] for row in load_table("exact_entropies.txt")}
        for n, rounds in [(3, 10 ** 7), (4, 10 ** 8)]:
            h1, h2, hinf = table[n]
            cmap = run(SamplerConfig(n=n, rounds=rounds, seed=100 + n, shards=16))
            est_h1 = h1_plugin(cmap)
            est_hinf = hinf_wilson(cmap)
            self.assertIn(dictator_key(n), cmap)
            self.assertLess(abs(est_h1.value - h1), 0.01)
            self.assertLess(abs(est_hinf.value - hinf), 0.01)
            self.assertLessEqual(est_h1.ci_low, h1 + 1e-3)
            self.assertGreaterEqual(est_h1.ci_high, h1 - 1e-3)
            batches = poisson_batches(SamplerConfig(n=n, rounds=rounds // 20, seed=200 + n, shards=16),
                                      rounds // 20, 20)
            est_h2 = h2_unbiased(batches)
            self.assertLess(abs(est_h2.value - h2), 0.01)
