import math
import unittest

import mpmath
import numpy as np
import pytest

from models import CuspContext, MaassForm, PhiSpec, ShiftPair, SmoothingSpec
from services.arithmetic import delta_form, eta_product_form
from services.eisenstein import raised_eisenstein_coefficients
from services.lfunctions import (
    L_f_times_eisenstein, L_holomorphic, L_rankin_maass, L_rankin_selberg, L_symmetric_square,
    double_series_M, f_times_eisenstein_series, finite_series_Dfin, gamma_prefactor_G,
    holomorphic_engine, phi_coefficients, rankin_selberg_residue, shifted_series_D,
    symmetric_square_engine)
from services.maass_solver import catalog_from_config
from services.specfun import zeta
from utils.error_handlers import (
    ConvergenceError, CoverageError, DomainError, PoleError)

DELTA_NORM = 1.0353620568043209e-6
LEVEL_SIX = {1: 2, 2: 2, 3: 2, 6: 2}


class TestHolomorphicL(unittest.TestCase):
    """Тесты L(s, f) по приближенному функциональному уравнению."""

    @classmethod
    def setUpClass(cls):
        cls.delta = delta_form(n_max=2000)

    def test_absolutely_convergent_region(self):
        s = 3.0
        A = self.delta.A
        n = np.arange(1, len(A))
        direct = float(np.sum(A[1:] * n ** -s))
        value = L_holomorphic(self.delta, s)
        self.assertLess(abs(value - direct), 1e-5)

    def test_independent_of_cut(self):
        s = complex(0.5, 5.0)
        a = L_holomorphic(self.delta, s, SmoothingSpec(X=1.0))
        b = L_holomorphic(self.delta, s, SmoothingSpec(X=2.0))
        self.assertLess(abs(a - b), 1e-8 * max(1.0, abs(a)))

    def test_independent_of_cut_with_rotation(self):
        s = complex(0.5, 8.0)
        a = L_holomorphic(self.delta, s, SmoothingSpec(X=1.0))
        b = L_holomorphic(self.delta, s, SmoothingSpec(X=2.0))
        self.assertLess(abs(a - b), 1e-8 * max(1.0, abs(a)))

    def test_error_estimate_is_small(self):
        value, err = L_holomorphic(self.delta, complex(0.5, 2.0), full_output=True)
        self.assertLess(err, 1e-8 * max(1.0, abs(value)))

    def test_real_on_real_axis(self):
        value = L_holomorphic(self.delta, 0.5)
        self.assertLess(abs(value.imag), 1e-12)
        self.assertGreater(value.real, 0)

    def test_tapered_sum(self):
        s = 3.0
        exact = L_holomorphic(self.delta, s)
        value, err = L_holomorphic(self.delta, s, SmoothingSpec(reflection=False), full_output=True)
        self.assertLess(abs(value - exact), 1e-3)
        self.assertLess(err, 1e-3)

    def test_short_table(self):
        with self.assertRaises(CoverageError) as ctx:
            L_holomorphic(delta_form(n_max=20), complex(0.5, 40.0))
        self.assertGreater(ctx.exception.required, 20)

    def test_calibrated_root_number(self):
        f = eta_product_form(LEVEL_SIX, 6, 300, label='6.4.a.a')
        eps = holomorphic_engine(f).root_number
        self.assertLess(abs(eps.imag), 1e-6)
        self.assertLess(abs(abs(eps.real) - 1), 1e-6)


class TestFTimesEisenstein(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.form = eta_product_form(LEVEL_SIX, 6, 400, label='6.4.a.a')

    def test_matches_defining_series(self):
        cusp = CuspContext(2, 6)
        s, t = complex(6.0, 0.3), 0.7
        value = L_f_times_eisenstein(self.form, cusp, s, t)
        direct = f_times_eisenstein_series(self.form, cusp, s, t, n_max=300)
        self.assertLess(abs(value - direct), 1e-8 * abs(direct))

    def test_level_one_is_product(self):
        delta = delta_form(n_max=2000)
        s, t = complex(0.5, 0.0), 3.0
        value = L_f_times_eisenstein(delta, CuspContext(1, 1), s, t)
        expected = L_holomorphic(delta, s + 1j * t) * L_holomorphic(delta, s - 1j * t)
        self.assertLess(abs(value - expected), 1e-12 * max(1.0, abs(expected)))

    def test_level_mismatch(self):
        with self.assertRaises(DomainError):
            L_f_times_eisenstein(self.form, CuspContext(1, 2), 0.5, 1.0)


class TestRankinSelberg(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.delta = delta_form(n_max=2000)

    def test_residue_matches_petersson_norm(self):
        expected = (math.pi / 2) * DELTA_NORM * (4 * math.pi) ** 12 / math.factorial(11)
        value, err = rankin_selberg_residue(self.delta, full_output=True)
        self.assertLess(abs(value - expected), 1e-6 * expected)
        self.assertLess(err, 1e-6 * expected)

    def test_symmetric_square_cut(self):
        s = complex(0.5, 1.5)
        a = L_symmetric_square(self.delta, s, SmoothingSpec(X=0.8))
        b = L_symmetric_square(self.delta, s, SmoothingSpec(X=1.6))
        self.assertLess(abs(a - b), 1e-8 * max(1.0, abs(a)))

    def test_symmetric_square_cut_off_real_axis(self):
        """Значение не зависит от отсечки X по обе стороны от |Im s| = 1."""
        for height in (0.9, 1.1, 1.5):
            s = complex(0.5, height)
            values = [L_symmetric_square(self.delta, s, SmoothingSpec(X=X)) for X in (0.8, 1.0, 1.6)]
            for v in values[1:]:
                self.assertLess(abs(v - values[0]), 1e-8 * max(1.0, abs(values[0])), msg=f"Im s={height}")

    def test_rotated_kernel_covers_gaussian_tail(self):
        engine = symmetric_square_engine(self.delta)
        s0 = complex(0.5, 1.5)
        z, weights = engine._kernel(s0, engine.mu, 1, 3 * math.pi / 4)
        size = np.abs(weights)
        self.assertLess(max(size[0], size[-1]), 1e-16 * size.max())

    def test_rankin_selberg_diagonal_off_real_axis(self):
        s = complex(0.5, 1.5)
        a = L_rankin_selberg(self.delta, self.delta, s, SmoothingSpec(X=0.8))
        b = L_rankin_selberg(self.delta, self.delta, s, SmoothingSpec(X=1.6))
        self.assertLess(abs(a - b), 1e-8 * max(1.0, abs(a)))

    def test_diagonal_factorization(self):
        s = 2.5
        expected = complex(zeta(s)) * L_symmetric_square(self.delta, s)
        self.assertLess(abs(L_rankin_selberg(self.delta, self.delta, s) - expected), 1e-13)

    def test_pole(self):
        with self.assertRaises(PoleError):
            L_rankin_selberg(self.delta, self.delta, 1.0)

    def test_weight_mismatch(self):
        g = eta_product_form({1: 8, 2: 8}, 2, 50)
        with self.assertRaises(DomainError):
            L_rankin_selberg(self.delta, g, 2.0)


class TestRankinMaass(unittest.TestCase):

    def test_level_mismatch(self):
        u = MaassForm(t=9.5, parity=0, lam=(0.0, 1.0, 2.0, 2.0), rho1=1.0, level=2)
        with self.assertRaises(DomainError):
            L_rankin_maass(delta_form(n_max=200), u, 0.5)

    @pytest.mark.slow
    def test_catalog_form_is_consistent(self):
        catalog = catalog_from_config()
        if catalog.level != 1:
            self.skipTest('level-one catalog required')
        u = catalog.forms[0]
        delta = delta_form(n_max=2000)
        a = L_rankin_maass(delta, u, 0.5, SmoothingSpec(X=0.8))
        b = L_rankin_maass(delta, u, 0.5, SmoothingSpec(X=1.25))
        self.assertLess(abs(a - b), 1e-6 * max(1.0, abs(a)))


class TestShiftedSeries(unittest.TestCase):
    """Тесты рядов D(w; m), D_fin и M(s, w)."""

    @classmethod
    def setUpClass(cls):
        cls.delta = delta_form(n_max=2000)
        cls.holo = PhiSpec('holomorphic', form=cls.delta)
        cls.eis = PhiSpec('eisenstein', r=0.5, level=1)

    def test_tail_bound_is_honest(self):
        w, m = 2.5, 3
        value, bound = shifted_series_D(self.delta, self.holo, w, m, trunc=200, full_output=True)
        longer = shifted_series_D(self.delta, self.holo, w, m, trunc=400)
        self.assertLess(abs(longer - value), bound)

    def test_convergence_region(self):
        with self.assertRaises(ConvergenceError):
            shifted_series_D(self.delta, self.holo, 1.0, 2)

    def test_coverage(self):
        with self.assertRaises(CoverageError):
            shifted_series_D(self.delta, self.holo, 2.0, 5, trunc=1999)

    def test_holomorphic_coefficients(self):
        pos, neg = phi_coefficients(self.holo, 12, 5)
        self.assertAlmostEqual(pos[2].real, -24 * (8 * math.pi) ** -6, places=20)
        self.assertFalse(np.any(neg))

    def test_finite_series_trivial_cases(self):
        self.assertEqual(finite_series_Dfin(self.delta, self.eis, 0.3, 1), 0)
        self.assertEqual(finite_series_Dfin(self.delta, self.holo, 0.3, 5), 0)

    def test_finite_series_eisenstein(self):
        w, m, k = complex(0.3, 0.5), 3, 12
        _, neg = raised_eisenstein_coefficients(0.5, k, 1, m - 1)
        tau = self.delta.a
        total = sum(tau[m - n] * np.conj(neg[n]) * complex(n) ** (-(w + k / 2 - 1))
                    for n in range(1, m))
        nu_bar = -0.5j
        prefactor = complex(mpmath.gamma(w) * mpmath.gamma(1 - w)
                            / (mpmath.gamma(0.5 + k / 2 + nu_bar) * mpmath.gamma(0.5 + k / 2 - nu_bar)))
        value = finite_series_Dfin(self.delta, self.eis, w, m)
        expected = prefactor * total
        self.assertLess(abs(value - expected), 1e-12 * abs(expected))

    def test_finite_series_pole(self):
        with self.assertRaises(PoleError):
            finite_series_Dfin(self.delta, self.eis, 2, 3)

    def test_gamma_prefactor(self):
        w, k, nu = complex(0.3, 2.0), 12, 0.5j
        nb = -0.5j
        expected = complex(mpmath.gamma(w + k / 2 + nb - 0.5) * mpmath.gamma(w + k / 2 - nb - 0.5)
                           * mpmath.power(4 * mpmath.pi, 1 - w - k / 2) / mpmath.gamma(w))
        value = gamma_prefactor_G(w, k, nu)
        self.assertLess(abs(value - expected), 1e-12 * abs(expected))
        with self.assertRaises(PoleError):
            gamma_prefactor_G(-11, 12, 5.5)

    def test_double_series_swap_symmetry(self):
        s, w = complex(1.5, 0.2), 2.1
        a = double_series_M(self.delta, self.holo, self.eis, s, w, trunc=150)
        b = double_series_M(self.delta, self.eis, self.holo, w, s, trunc=150)
        self.assertLess(abs(a - b), 1e-10 * abs(a))

    def test_double_series_nested_sum(self):
        s, w, T, k = complex(1.5, 0.2), 2.1, 100, 12
        value, err = double_series_M(self.delta, self.holo, self.eis, s, w, trunc=T,
                                     full_output=True)
        c2 = np.conj(phi_coefficients(self.eis, k, T)[0])
        nested = sum(c2[m] * complex(m) ** (-(s + k / 2 - 1))
                     * shifted_series_D(self.delta, self.holo, w, m, trunc=T)
                     for m in range(1, T + 1))
        nested *= complex(zeta(2 * ShiftPair.of(s, w, k).s_prime))
        self.assertLess(abs(value - nested), 1e-10 * abs(value))
        self.assertGreater(err, 0)

    def test_double_series_region(self):
        with self.assertRaises(ConvergenceError):
            double_series_M(self.delta, self.holo, self.eis, 0.9, 2.0)


if __name__ == '__main__':
    unittest.main()
