import math
import os
import random
import tempfile
import unittest
from fractions import Fraction

from models import CuspContext
from services.arithmetic import (
    delta_coefficients, delta_form, divisors, eta_power_series, eta_product_form, euler_phi,
    is_squarefree, load_holoform, mobius, prime_factors, ramanujan_rho_bruteforce, rho_closed, save_holoform,
    sigma_cusp, sigma_cusp_stable, sigma_N_limit, _ramanujan_sum)
from services.specfun import richardson_limit, zeta
from utils.error_handlers import (
    CapacityError, ConvergenceError, DomainError, SchemaError, SingularFactorError)

# эта-произведения, являющиеся новыми формами: (экспоненты, уровень)
ETA_NEWFORMS = [
    ({1: 2, 2: 2, 3: 2, 6: 2}, 6),
    ({1: 8, 2: 8}, 2),
    ({1: 6, 3: 6}, 3),
    ({1: 4, 5: 4}, 5),
]


class TestIntegerHelpers(unittest.TestCase):

    def test_mobius(self):
        self.assertEqual([mobius(n) for n in range(1, 13)],
                         [1, -1, -1, 0, -1, 1, -1, 0, 0, 1, -1, 0])

    def test_euler_phi(self):
        self.assertEqual([euler_phi(n) for n in range(1, 13)],
                         [1, 1, 2, 2, 4, 2, 6, 4, 6, 4, 10, 4])
        self.assertIsInstance(euler_phi(10), int)

    def test_squarefree(self):
        self.assertEqual([n for n in range(1, 20) if is_squarefree(n)],
                         [1, 2, 3, 5, 6, 7, 10, 11, 13, 14, 15, 17, 19])
        self.assertFalse(is_squarefree(0))


class TestDeltaCoefficients(unittest.TestCase):
    """Тесты для таблицы τ(n)."""

    @classmethod
    def setUpClass(cls):
        cls.tau = delta_coefficients(3125)

    def test_first_values(self):
        self.assertEqual(self.tau[0], 0)
        self.assertEqual(self.tau[1], 1)
        self.assertEqual(self.tau[2], -24)
        self.assertEqual(self.tau[3], 252)
        self.assertEqual(self.tau[11], 534612)

    def test_multiplicativity(self):
        self.assertEqual(self.tau[6], self.tau[2] * self.tau[3])
        self.assertEqual(self.tau[35], self.tau[5] * self.tau[7])

    def test_hecke_recursion(self):
        for p in (2, 3, 5):
            for r in range(1, 5):
                lhs = self.tau[p] * self.tau[p ** r]
                rhs = self.tau[p ** (r + 1)] + p ** 11 * self.tau[p ** (r - 1)]
                self.assertEqual(lhs, rhs)

    def test_capacity(self):
        with self.assertRaises(CapacityError):
            delta_coefficients(10 ** 9)


class TestEtaProducts(unittest.TestCase):

    def test_newforms_satisfy_hecke_relations(self):
        for exponents, level in ETA_NEWFORMS:
            form = eta_product_form(exponents, level, 300)
            a, k = form.coeffs, form.weight
            for p in (2, 3, 5, 7):
                if level % p == 0:
                    self.assertEqual(a[p] ** 2, a[p * p])
                    self.assertEqual(abs(a[p]), p ** (k // 2 - 1))
                else:
                    self.assertEqual(a[p] ** 2, a[p * p] + p ** (k - 1))

    def test_level_six_expansion(self):
        a = eta_power_series({1: 2, 2: 2, 3: 2, 6: 2}, 6)
        self.assertEqual(a[:4], [0, 1, -2, -3])
        self.assertEqual(a[4], 4)

    def test_non_integral_order(self):
        with self.assertRaises(DomainError):
            eta_power_series({1: 1}, 10)

    def test_negative_exponents(self):
        # (η(z)^2/η(2z))^8 = (Σ(-1)^n q^{n^2})^8
        a = eta_power_series({1: 16, 2: -8}, 4)
        self.assertEqual(a[:2], [1, -16])
        # 16 представлений вида (±2,0,...) и 70·16 вида (±1,±1,±1,±1,0,...)
        self.assertEqual(a[4], 16 + 70 * 16)


class TestSigmaCusp(unittest.TestCase):

    def test_trivial_cusp_is_coprime_divisor_sum(self):
        cusp = CuspContext(1, 6)
        x = -0.3 + 0.8j
        expected = sum(complex(d) ** x for d in divisors(35) if math.gcd(d, 6) == 1)
        self.assertLess(abs(sigma_cusp(cusp, x, 35) - expected), 1e-13)

    def test_level_one_divisor_scan(self):
        expected = sum(d ** -0.6 for d in range(1, 13) if 12 % d == 0)
        self.assertAlmostEqual(sigma_cusp(CuspContext(1, 1), -0.6, 12).real, expected, places=13)

    def test_printed_and_stable_forms_agree(self):
        cusp = CuspContext(2, 6)
        x = -0.4 + 1.1j
        for n in (1, 8, 12, 40):
            a = sigma_cusp(cusp, x, n)
            b = sigma_cusp_stable(cusp, x, n)
            self.assertLess(abs(a - b), 1e-12 * max(1, abs(a)))

    def test_singular_factor(self):
        with self.assertRaises(SingularFactorError):
            sigma_cusp(CuspContext(2, 2), 0, 4)
        self.assertAlmostEqual(sigma_cusp_stable(CuspContext(2, 2), 0, 1).real, -0.5)

    def test_exact_multiplicativity_trivial_cusp(self):
        rng = random.Random(11)
        cusp = CuspContext(1, 10)
        for _ in range(100):
            n1, n2 = rng.randint(1, 300), rng.randint(1, 300)
            if math.gcd(n1, n2) != 1:
                continue
            x = rng.choice([-3, -1, 2])
            self.assertEqual(sigma_cusp(cusp, x, n1 * n2, exact=True),
                             sigma_cusp(cusp, x, n1, exact=True) * sigma_cusp(cusp, x, n2, exact=True))

    def test_exact_normalized_multiplicativity(self):
        # локальный множитель при α = 0 равен -p^{x-1}, поэтому нормируем на σ(1)
        rng = random.Random(5)
        checked = 0
        while checked < 200:
            N = rng.choice([2, 6, 10, 30])
            a = rng.choice(divisors(N))
            cusp = CuspContext(a, N)
            n1, n2 = rng.randint(1, 400), rng.randint(1, 400)
            if math.gcd(n1, n2) != 1:
                continue
            x = rng.choice([-3, -1, 1, 2])
            one = sigma_cusp(cusp, x, 1, exact=True)
            self.assertIsInstance(one, Fraction)
            self.assertEqual(sigma_cusp(cusp, x, n1 * n2, exact=True) * one,
                             sigma_cusp(cusp, x, n1, exact=True) * sigma_cusp(cusp, x, n2, exact=True))
            checked += 1

    def test_primes_of_level_outside_cusp_contribute_one(self):
        for N, a in ((6, 2), (10, 5), (30, 6)):
            cusp = CuspContext(a, N)
            for p in prime_factors(N):
                if a % p == 0:
                    continue
                r = 1
                while p ** r <= 100:
                    self.assertEqual(sigma_cusp(cusp, -3, p ** r, exact=True),
                                     sigma_cusp(cusp, -3, 1, exact=True))
                    r += 1

    def test_bad_n(self):
        with self.assertRaises(DomainError):
            sigma_cusp(CuspContext(1, 1), 0.5, 0)


class TestSigmaNLimit(unittest.TestCase):

    def test_level_one(self):
        r = 0.7
        expected = sum(complex(d) ** (-2j * r) for d in divisors(18))
        self.assertLess(abs(sigma_N_limit(r, 18, 1) - expected), 1e-13)
        self.assertAlmostEqual(sigma_N_limit(0.0, 18, 1).real, 6.0, places=13)

    def test_limit_against_extrapolation(self):
        for n in (1, 4, 12):
            value, _ = richardson_limit(lambda e: sigma_cusp(CuspContext(2, 2), -2j * e, n))
            self.assertLess(abs(sigma_N_limit(0.0, n, 2) - value), 1e-8)
        self.assertAlmostEqual(sigma_N_limit(0.0, 1, 2).real, -0.5, places=14)

    def test_conjugation(self):
        for n in (3, 8, 30):
            a = sigma_N_limit(0.4, n, 6)
            b = sigma_N_limit(-0.4, n, 6)
            self.assertLess(abs(a - b.conjugate()), 1e-13)


class TestRamanujan(unittest.TestCase):

    def test_unit_count(self):
        self.assertEqual(_ramanujan_sum(6, 0), 2)

    def test_level_one_identity(self):
        s = 1.6
        value, bound = ramanujan_rho_bruteforce(CuspContext(1, 1), s, 4, gamma_max=4000,
                                                full_output=True)
        sigma = sum(d ** (1 - 2 * s) for d in (1, 2, 4))
        expected = sigma / zeta(2 * s).real
        self.assertLess(abs(value - expected), 1e-6)
        self.assertLess(bound, 1e-6)

    def test_sign_of_n(self):
        cusp = CuspContext(2, 6)
        a = ramanujan_rho_bruteforce(cusp, 1.5, 5, gamma_max=200)
        b = ramanujan_rho_bruteforce(cusp, 1.5, -5, gamma_max=200)
        self.assertLess(abs(a - b), 1e-12)

    def test_convergence_region(self):
        with self.assertRaises(ConvergenceError):
            ramanujan_rho_bruteforce(CuspContext(1, 1), 1.0, 3, gamma_max=10)

    def test_closed_form_non_constant(self):
        cusp = CuspContext(2, 6)
        brute = ramanujan_rho_bruteforce(cusp, 1.4, 4, gamma_max=4000)
        self.assertLess(abs(rho_closed(cusp, 1.4, 4) - brute), 1e-6)

    def test_closed_form_complex_s(self):
        cusp = CuspContext(2, 6)
        s = 1.4 + 0.3j
        brute = ramanujan_rho_bruteforce(cusp, s, 8, gamma_max=2000)
        self.assertLess(abs(rho_closed(cusp, s, 8) - brute), 1e-6)

    def test_closed_form_constant_term(self):
        cusp = CuspContext(3, 6)
        brute, bound = ramanujan_rho_bruteforce(cusp, 1.4, 0, gamma_max=4000, full_output=True)
        self.assertLess(abs(rho_closed(cusp, 1.4, 0) - brute), 1e-6)
        self.assertGreater(bound, 0)

    def test_level_one_reduction(self):
        expected = (1 + 3 ** -2) / zeta(3).real
        self.assertAlmostEqual(rho_closed(CuspContext(1, 1), 1.5, 3).real, expected, places=13)

    def test_random_cases_within_tail_bound(self):
        rng = random.Random(2024)
        for _ in range(50):
            N = rng.choice([1, 2, 3, 5, 6, 10])
            a = rng.choice(divisors(N))
            cusp = CuspContext(a, N)
            n = rng.randint(1, 12) * rng.choice([-1, 1])
            s = complex(rng.uniform(1.3, 2.0), rng.uniform(-2, 2))
            brute, bound = ramanujan_rho_bruteforce(cusp, s, n, gamma_max=300, full_output=True)
            self.assertLessEqual(abs(rho_closed(cusp, s, n) - brute), bound + 1e-12)


class TestCoefficientCache(unittest.TestCase):

    def test_save_and_load(self):
        form = eta_product_form({1: 8, 2: 8}, 2, 50, label='2.8.a.a')
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'f.csv')
            save_holoform(form, path)
            loaded = load_holoform(path)
        self.assertEqual(loaded, form)

    def test_bad_header(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'bad.csv')
            with open(path, 'w') as fh:
                fh.write("n,a_n\n1,1\n")
            with self.assertRaises(SchemaError):
                load_holoform(path)

    def test_delta_form_uses_cache(self):
        with tempfile.TemporaryDirectory() as tmp:
            first = delta_form(40, cache_dir=tmp)
            self.assertTrue(os.path.exists(os.path.join(tmp, 'delta.csv')))
            second = delta_form(20, cache_dir=tmp)
        self.assertEqual(second.coeffs, first.coeffs[:21])
        self.assertEqual(second.weight, 12)


if __name__ == '__main__':
    unittest.main()
