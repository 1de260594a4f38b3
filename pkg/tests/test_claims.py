"""Unit tests for claim-size distributions"""
import math
import unittest
from unittest import mock

import numpy as np
from scipy import integrate

from src.core.claims import (
    Exponential,
    Pareto,
    Weibull,
    distribution_from_config,
    mean,
    net_profit_holds,
    premium_from_loading,
    sample,
    truncated_power_moment,
    truncated_power_moment_series,
)
from src.core.errors import DomainError, NumericalFailure, UndefinedMomentError


class TestSampling(unittest.TestCase):
    """Inverse-CDF sampling"""

    def setUp(self):
        self.families = [Exponential(50.0), Pareto(25.0, 2.0), Weibull(1.5, 50.0)]

    def test_pareto_quantile(self):
        """Pareto(25, 2) maps u = 0.75 to 50"""
        self.assertAlmostEqual(sample(Pareto(25.0, 2.0), 0.75), 50.0, places=12)

    def test_small_uniform_gives_small_claim(self):
        """u near 0 gives a tiny positive claim"""
        value = sample(Exponential(50.0), 1e-15)
        self.assertGreater(value, 0.0)
        self.assertLess(value, 1e-12)

    def test_rejects_uniform_outside_open_interval(self):
        """u must lie strictly inside (0, 1)"""
        for u in (0.0, 1.0, -0.1, 1.5, float('nan')):
            with self.assertRaises(DomainError):
                sample(Exponential(50.0), u)

    def test_inverse_cdf_round_trip(self):
        """cdf(sample(u)) returns u"""
        u = np.linspace(1e-6, 1 - 1e-6, 2001)
        for dist in self.families:
            back = dist.cdf(dist.sample(u))
            self.assertLess(np.max(np.abs(back - u)), 1e-12, dist.describe())

    def test_cdf_shape(self):
        """cdf starts at 0, never decreases and tends to 1"""
        x = np.linspace(0.0, 5000.0, 500)
        for dist in self.families:
            values = dist.cdf(x)
            self.assertEqual(dist.cdf(0.0), 0.0)
            self.assertTrue(np.all(np.diff(values) >= 0))
            self.assertGreater(dist.cdf(1e9), 1 - 1e-6)

    def test_weibull_shape_one_is_exponential(self):
        """Weibull(1, s) and Exponential(mean s) agree pathwise"""
        weibull, exponential = Weibull(1.0, 50.0), Exponential(50.0)
        u = np.linspace(1e-4, 1 - 1e-4, 999)
        np.testing.assert_allclose(weibull.sample(u), exponential.sample(u), rtol=1e-12)
        x = np.linspace(0.0, 500.0, 101)
        np.testing.assert_allclose(weibull.cdf(x), exponential.cdf(x), rtol=1e-12, atol=1e-15)
        self.assertEqual(weibull.mean(), exponential.mean())
        for xv in (10.0, 100.0, 500.0):
            self.assertAlmostEqual(
                truncated_power_moment(weibull, xv, 0.3),
                truncated_power_moment(exponential, xv, 0.3),
                delta=1e-12 * xv ** 0.7,
            )

    def test_medians(self):
        """median() is the 0.5 quantile"""
        for dist in self.families + [Weibull(1.0, 50.0)]:
            self.assertAlmostEqual(dist.cdf(dist.median()), 0.5, places=12, msg=dist.describe())
        self.assertAlmostEqual(Pareto(25.0, 2.0).median(), 25.0 * math.sqrt(2.0), places=12)

    def test_empirical_mean_and_median(self):
        """A million draws reproduce the mean (or the median for Pareto)"""
        rng = np.random.default_rng(7)
        u = np.clip(rng.random(1_000_000), 1e-16, 1 - 1e-16)

        exp_draws = Exponential(50.0).sample(u)
        self.assertLess(abs(exp_draws.mean() - 50.0), 4 * 50.0 / 1000.0)

        weibull = Weibull(1.5, 50.0)
        sd = 50.0 * math.sqrt(math.gamma(1 + 2 / 1.5) - math.gamma(1 + 1 / 1.5) ** 2)
        self.assertLess(abs(weibull.sample(u).mean() - weibull.mean()), 4 * sd / 1000.0)

        # infinite variance: compare medians instead
        pareto = Pareto(25.0, 2.0)
        self.assertAlmostEqual(np.median(pareto.sample(u)) / pareto.median(), 1.0, delta=1e-2)


class TestMoments(unittest.TestCase):
    """Means and premium relations"""

    def test_means(self):
        """Reference families all have mean 50"""
        self.assertEqual(mean(Exponential(50.0)), 50.0)
        self.assertEqual(mean(Weibull(1.0, 50.0)), 50.0)
        self.assertAlmostEqual(mean(Pareto(25.0, 2.0)), 50.0, places=12)

    def test_pareto_mean_by_quadrature(self):
        """Pareto closed-form mean matches integration of x f(x)"""
        dist = Pareto(25.0, 2.0)
        value, _ = integrate.quad(lambda x: x * dist.pdf(x), 25.0, np.inf)
        self.assertAlmostEqual(value, dist.mean(), delta=1e-6)

    def test_pareto_mean_undefined(self):
        """shape <= 1 has no mean"""
        with self.assertRaises(UndefinedMomentError):
            Pareto(25.0, 1.0).mean()
        with self.assertRaises(UndefinedMomentError):
            net_profit_holds(65.0, 1.0, Pareto(25.0, 0.8))

    def test_invalid_parameters(self):
        """Parameters must be finite and positive"""
        with self.assertRaises(DomainError):
            Exponential(0.0)
        with self.assertRaises(DomainError):
            Pareto(-1.0, 2.0)
        with self.assertRaises(DomainError):
            Weibull(1.0, float('inf'))

    def test_premium_from_loading(self):
        """c = (1 + rho) lambda E[U]"""
        self.assertAlmostEqual(premium_from_loading(1.0, 50.0, 0.3), 65.0, places=12)
        self.assertEqual(premium_from_loading(1.0, 50.0, 0.0), 50.0)
        self.assertAlmostEqual(premium_from_loading(2.0, 25.0, 0.3), 65.0, places=12)
        with self.assertRaises(DomainError):
            premium_from_loading(0.0, 50.0, 0.3)
        with self.assertRaises(DomainError):
            premium_from_loading(1.0, -5.0, 0.3)

    def test_net_profit_condition(self):
        """c / lambda must exceed the mean claim"""
        self.assertTrue(net_profit_holds(65.0, 1.0, Exponential(50.0)))
        self.assertFalse(net_profit_holds(50.0, 1.0, Exponential(50.0)))
        self.assertTrue(net_profit_holds(65.0, 1.0, Pareto(25.0, 2.0)))

    def test_factory(self):
        """Families are built by name; unknown names and missing parameters fail"""
        self.assertEqual(distribution_from_config('Pareto', {'scale': 25, 'shape': 2}), Pareto(25.0, 2.0))
        with self.assertRaises(DomainError):
            distribution_from_config('lognormal', {})
        with self.assertRaises(DomainError):
            distribution_from_config('weibull', {'shape': 1})


class TestTruncatedPowerMoment(unittest.TestCase):
    """E[(x - U)^(1-alpha); U <= x]"""

    def setUp(self):
        self.families = [Exponential(50.0), Pareto(25.0, 2.0), Weibull(1.5, 50.0), Weibull(1.0, 50.0)]

    def test_vanishes_at_zero(self):
        """The moment is 0 at x = 0 and tiny just above"""
        for dist in self.families:
            self.assertEqual(truncated_power_moment(dist, 0.0, 0.5), 0.0)
            self.assertLess(truncated_power_moment(dist, 1e-12, 0.5), 1e-9)

    def test_exponential_value_in_range(self):
        """The moment lies in (0, x^(1-alpha))"""
        value = truncated_power_moment(Exponential(50.0), 100.0, 0.2)
        self.assertGreater(value, 0.0)
        self.assertLess(value, 100.0 ** 0.8)

    def test_hypergeometric_identity(self):
        """Quadrature agrees with the series for exponential claims"""
        dist = Exponential(50.0)
        for alpha in (0.2, 0.5, 0.8):
            for x in (10.0, 50.0, 100.0, 500.0):
                quad = truncated_power_moment(dist, x, alpha)
                series = truncated_power_moment_series(dist, x, alpha)
                self.assertAlmostEqual(series / quad, 1.0, delta=1e-8, msg=f"x={x}, alpha={alpha}")

    def test_monotone_and_bounded(self):
        """Non-decreasing in x and bounded by x^(1-alpha)"""
        xs = np.linspace(1.0, 2000.0, 40)
        for dist in self.families:
            values = np.array([truncated_power_moment(dist, x, 0.2) for x in xs])
            self.assertTrue(np.all(np.diff(values) >= 0), dist.describe())
            self.assertTrue(np.all(values <= xs ** 0.8), dist.describe())
            self.assertTrue(np.all(values >= 0))

    def test_grows_like_power_for_large_surplus(self):
        """The moment does not decay for large x"""
        # E[(x-U)^(1-a)] / x^(1-a) -> 1
        x = 1e4
        ratio = truncated_power_moment(Exponential(50.0), x, 0.2) / x ** 0.8
        self.assertAlmostEqual(ratio, 1.0 - 0.8 * 50.0 / x, delta=1e-4)

    def test_quadrature_failure_carries_diagnostics(self):
        """A non-converged piece raises NumericalFailure with its interval and error"""
        failed = (float('nan'), 1.0, {'neval': 21}, 'The maximum number of subdivisions has been achieved.')
        with mock.patch('src.core.claims.integrate.quad', return_value=failed):
            with self.assertRaises(NumericalFailure) as ctx:
                truncated_power_moment(Exponential(50.0), 100.0, 0.2)
        diagnostics = ctx.exception.diagnostics
        self.assertEqual(diagnostics['abserr'], 1.0)
        self.assertEqual(diagnostics['interval'][0], 0.0)
        self.assertIn('subdivisions', diagnostics['message'])
        self.assertIn('abserr=1.0', str(ctx.exception))

    def test_quadrature_warning_with_small_error_is_accepted(self):
        """A quad warning is tolerated when the error estimate is still small"""
        warned = (0.5, 1e-14, {'neval': 21}, 'roundoff error detected')
        with mock.patch('src.core.claims.integrate.quad', return_value=warned):
            value = truncated_power_moment(Pareto(25.0, 2.0), 100.0, 0.2)
        self.assertGreater(value, 0.0)

    def test_rejects_bad_arguments(self):
        """alpha outside (0, 1), negative x and non-exponential series are rejected"""
        with self.assertRaises(DomainError):
            truncated_power_moment(Exponential(50.0), 10.0, 1.0)
        with self.assertRaises(DomainError):
            truncated_power_moment(Exponential(50.0), -1.0, 0.5)
        with self.assertRaises(DomainError):
            truncated_power_moment_series(Pareto(25.0, 2.0), 10.0, 0.5)


if __name__ == '__main__':
    unittest.main()
