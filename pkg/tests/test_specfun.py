import math
import unittest

import mpmath
import numpy as np
from scipy import special

from services.specfun import (
    EULER_GAMMA, bessel_k, digamma, gamma_ratio, log_gamma, mellin_k_exp,
    richardson_limit, whittaker_w, zeta, zeta_star)
from utils.error_handlers import DomainError, LimitInstabilityError, PoleError


class TestLogGamma(unittest.TestCase):
    """Тесты для log Γ."""

    def test_half(self):
        self.assertAlmostEqual(log_gamma(0.5).real, math.log(math.sqrt(math.pi)), places=14)

    def test_recursion_from_half(self):
        expected = math.log(15 * math.sqrt(math.pi) / 8)
        self.assertAlmostEqual(log_gamma(3.5).real, expected, places=13)

    def test_against_mpmath(self):
        expected = complex(mpmath.loggamma(1 + 5j))
        self.assertLess(abs(log_gamma(1 + 5j) - expected), 1e-12)

    def test_poles(self):
        for z in (0, -3, -7.0):
            with self.assertRaises(PoleError):
                log_gamma(z)

    def test_modulus_on_line_one(self):
        for t in (0.5, 2.0, 10.0):
            value = math.exp(2 * log_gamma(1 + 1j * t).real)
            expected = math.pi * t / math.sinh(math.pi * t)
            self.assertLess(abs(value / expected - 1), 1e-12)

    def test_recursion_mod_two_pi_i(self):
        rng = np.random.default_rng(7)
        z = rng.uniform(0.05, 5, 100) + 1j * rng.uniform(-20, 20, 100)
        diff = log_gamma(z + 1) - log_gamma(z) - np.log(z)
        self.assertLess(np.max(np.abs(diff.real)), 1e-12)
        turns = diff.imag / (2 * math.pi)
        self.assertLess(np.max(np.abs(turns - np.round(turns))), 1e-12)

    def test_full_output(self):
        value, err = log_gamma(2.5 + 1j, full_output=True)
        self.assertIsInstance(value, complex)
        self.assertGreater(err, 0)
        self.assertLess(err, 1e-13)


class TestGammaRatio(unittest.TestCase):

    def test_denominator_pole_gives_zero(self):
        self.assertEqual(gamma_ratio([1.5], [-2]), 0)

    def test_numerator_pole(self):
        with self.assertRaises(PoleError):
            gamma_ratio([-1], [2])

    def test_simple_ratio(self):
        # Γ(5)/Γ(3) = 12
        self.assertAlmostEqual(gamma_ratio([5], [3]).real, 12.0, places=12)


class TestDigamma(unittest.TestCase):

    def test_classical_values(self):
        self.assertAlmostEqual(digamma(1).real, -EULER_GAMMA, places=14)
        self.assertAlmostEqual(digamma(2).real, 1 - EULER_GAMMA, places=14)

    def test_first_derivative_finite_difference(self):
        z, h = 6 + 2j, 1e-4
        fd = (digamma(z + h) - digamma(z - h)) / (2 * h)
        self.assertLess(abs(digamma(z, order=1) - fd), 1e-6)

    def test_second_derivative_finite_difference(self):
        z, h = 3 - 1.5j, 1e-4
        fd = (digamma(z + h, order=1) - digamma(z - h, order=1)) / (2 * h)
        self.assertLess(abs(digamma(z, order=2) - fd), 1e-5)

    def test_against_mpmath(self):
        for z in (0.3 + 0.1j, 6 + 12j, 2.5):
            for order in (1, 2):
                expected = complex(mpmath.psi(order, z))
                self.assertLess(abs(digamma(z, order=order) - expected), 1e-11 * max(1, abs(expected)))

    def test_bad_order(self):
        with self.assertRaises(DomainError):
            digamma(1.0, order=3)

    def test_pole(self):
        with self.assertRaises(PoleError):
            digamma(-2, order=1)


class TestZeta(unittest.TestCase):

    def test_two(self):
        self.assertAlmostEqual(zeta(2).real, math.pi ** 2 / 6, places=13)

    def test_three(self):
        self.assertAlmostEqual(zeta(3).real, 1.2020569031595942, places=13)

    def test_complex_against_mpmath(self):
        for s in (1 + 2j, 0.5 + 14.134725j, 0.2 - 30j, 3 + 100j):
            expected = complex(mpmath.zeta(s))
            self.assertLess(abs(zeta(s) - expected), 1e-11 * max(1, abs(expected)))

    def test_left_half_plane(self):
        self.assertAlmostEqual(zeta(-1).real, -1 / 12, places=13)
        self.assertAlmostEqual(zeta(0).real, -0.5, places=14)
        self.assertLess(abs(zeta(-2)), 1e-13)

    def test_pole(self):
        with self.assertRaises(PoleError):
            zeta(1)

    def test_vectorized(self):
        s = np.array([2.0, 4.0])
        values = zeta(s)
        self.assertEqual(values.shape, (2,))
        self.assertAlmostEqual(values[1].real, math.pi ** 4 / 90, places=13)


class TestZetaStar(unittest.TestCase):

    def test_functional_equation_on_critical_line(self):
        s = 0.5 + 1j * np.linspace(-10, 10, 41)
        self.assertLess(np.max(np.abs(zeta_star(s) - zeta_star(1 - s))), 1e-10)

    def test_functional_equation_off_line(self):
        s = 0.3 + 2j
        expected = complex(mpmath.pi ** (-s / 2) * mpmath.gamma(s / 2) * mpmath.zeta(s))
        self.assertLess(abs(zeta_star(s) - expected), 1e-12 * abs(expected))
        self.assertLess(abs(zeta_star(s) - zeta_star(1 - s)), 1e-12 * abs(expected))

    def test_definition_unfolding(self):
        s = 1.4
        expected = math.pi ** (-s) * math.gamma(s) * zeta(2 * s).real
        self.assertAlmostEqual(zeta_star(2 * s).real, expected, places=13)

    def test_poles(self):
        for s in (0, 1):
            with self.assertRaises(PoleError):
                zeta_star(s)


class TestBesselK(unittest.TestCase):

    def test_half_order_closed_form(self):
        y = 1.7
        expected = math.sqrt(math.pi / (2 * y)) * math.exp(-y)
        self.assertLess(abs(bessel_k(0.5, y) - expected), 1e-14)

    def test_order_symmetry(self):
        nu, y = 0.3 + 2j, 5.0
        a, b = bessel_k(nu, y), bessel_k(-nu, y)
        self.assertLess(abs(a - b), 1e-12 * abs(a))

    def test_imaginary_order_against_mpmath(self):
        value = bessel_k(9.533j, 3.0)
        expected = complex(mpmath.besselk(9.533j, 3.0))
        self.assertLess(abs(value - expected), 1e-9 * abs(expected))

    def test_real_order_against_scipy(self):
        y = np.linspace(0.2, 8, 17)
        value = bessel_k(0.3, y)
        expected = special.kv(0.3, y)
        self.assertLess(np.max(np.abs(value / expected - 1)), 1e-12)

    def test_imaginary_order_is_real(self):
        for t in (0.5, 4.0, 25.0):
            self.assertEqual(bessel_k(1j * t, 2.2).imag, 0.0)

    def test_domain(self):
        with self.assertRaises(DomainError):
            bessel_k(0.2, 0.0)
        with self.assertRaises(DomainError):
            bessel_k(1.2 + 1j, 2.0)

    def test_error_estimate_small(self):
        _, err = bessel_k(3j, 1.5, full_output=True)
        self.assertLess(err, 1e-12)


class TestWhittaker(unittest.TestCase):

    def test_alpha_zero_reduces_to_bessel(self):
        y, nu = 4.0, 0.2j
        expected = math.sqrt(y / math.pi) * bessel_k(nu, y / 2)
        self.assertLess(abs(whittaker_w(0, nu, y) - expected), 1e-14)
        oracle = complex(mpmath.whitw(0, nu, y))
        self.assertLess(abs(whittaker_w(0, nu, y) - oracle), 1e-10 * abs(oracle))

    def test_degenerate_case(self):
        self.assertAlmostEqual(whittaker_w(6, 5.5, 2.0).real, 64 * math.exp(-1), places=12)
        self.assertAlmostEqual(whittaker_w(-6, 6.5, 2.0).real, 2.0 ** -6 * math.exp(-1), places=14)

    def test_positive_alpha_recurrence(self):
        expected = complex(mpmath.whitw(6, 0.1j, 3))
        self.assertLess(abs(whittaker_w(6, 0.1j, 3.0) - expected), 1e-8 * abs(expected))

    def test_negative_alpha_integral(self):
        for y in (0.8, 3.0, 9.0):
            expected = complex(mpmath.whitw(-6, 0.7j, y))
            self.assertLess(abs(whittaker_w(-6, 0.7j, y) - expected), 1e-8 * abs(expected))

    def test_unsupported_alpha(self):
        with self.assertRaises(DomainError):
            whittaker_w(0.3, 0.2j, 1.0)


class TestMellinKExp(unittest.TestCase):

    def test_against_quadrature(self):
        s, k, t = 1.0, 12, 2.0
        integrand = lambda y: mpmath.besselk(1j * t, y) * mpmath.exp(-y) * y ** (s + k / 2 - 1)
        expected = complex(mpmath.quad(integrand, [0, 5, 20, 60, mpmath.inf]))
        value = mellin_k_exp(s, k, t)
        self.assertLess(abs(value - expected), 1e-8 * abs(expected))

    def test_t_symmetry(self):
        self.assertEqual(mellin_k_exp(0.7 + 1j, 12, 2.5), mellin_k_exp(0.7 + 1j, 12, -2.5))

    def test_small_case(self):
        """
        ∫₀^∞ K_ν(y)e^{-y}y^{μ-1}dy = √π·Γ(μ+ν)Γ(μ-ν)/(2^μ·Γ(μ+1/2)); при μ = 1/2, ν = 0
        это √π·Γ(1/2)²/(√2·Γ(1)) = π^{3/2}/√2.
        """
        self.assertAlmostEqual(mellin_k_exp(0.5, 0, 0.0).real, math.pi ** 1.5 / math.sqrt(2), places=12)
        expected = complex(mpmath.quad(lambda y: mpmath.besselk(0, y) * mpmath.exp(-y) / mpmath.sqrt(y),
                                       [0, 1, 10, mpmath.inf]))
        self.assertLess(abs(mellin_k_exp(0.5, 0, 0.0) - expected), 1e-8)


class TestRichardson(unittest.TestCase):

    def test_smooth_limit(self):
        value, err = richardson_limit(lambda e: math.sin(e) / e if e else 1.0)
        self.assertAlmostEqual(value.real, 1.0, places=12)
        self.assertLess(err, 1e-10)

    def test_removable_pole(self):
        # ε·ζ(1+ε) -> 1
        value, _ = richardson_limit(lambda e: e * zeta(1 + e))
        self.assertAlmostEqual(value.real, 1.0, places=9)

    def test_unstable(self):
        with self.assertRaises(LimitInstabilityError):
            richardson_limit(lambda e: 1 / abs(e))


if __name__ == '__main__':
    unittest.main()
