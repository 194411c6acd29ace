import math
import unittest

import numpy as np

from models import DecayProfile, TestFunctionH, VerticalPath
from services.contour import (
    barnes_second_reduction, double_vertical_integral, h_double_closed, h_double_transform,
    line_nodes, path_for, shift_contour, tail_bound, vanishing_integral_check,
    vertical_integral, weight_cut)
from services.specfun import gamma
from utils.error_handlers import DomainError, PathCollisionError, TailBoundError

GAMMA_PROFILE = DecayProfile(rate=math.pi / 2, order=0.5)


def mellin_exp(x):
    # (1/2πi)∫ Γ(w) x^{-w} dw = e^{-x} при Re w > 0
    return lambda w: gamma(w) * np.exp(-w * math.log(x))


class TestVerticalIntegral(unittest.TestCase):
    """Тесты квадратуры по вертикальной прямой."""

    def test_nodes_cover_line(self):
        path = path_for(0.3, 10.0)
        nodes, weights = line_nodes(path)
        self.assertTrue(np.allclose(nodes.real, 0.3))
        self.assertAlmostEqual(float(np.sum(weights)) * 2 * math.pi, 20.0, places=12)
        self.assertEqual(path.n_points, 40)

    def test_inverse_mellin_of_gamma(self):
        value, err = vertical_integral(mellin_exp(2.0), path_for(1.0, 40), GAMMA_PROFILE,
                                       full_output=True)
        self.assertLess(abs(value - math.exp(-2)), 1e-12)
        self.assertLess(err, 1e-8)

    def test_conjugate_symmetric_integrand_is_real(self):
        value = vertical_integral(mellin_exp(0.7), path_for(0.5, 40))
        self.assertLess(abs(value.imag), 1e-14)

    def test_refinement_within_error(self):
        path = path_for(1.0, 30)
        value, err = vertical_integral(mellin_exp(3.0), path, GAMMA_PROFILE, full_output=True)
        refined = vertical_integral(mellin_exp(3.0), path.refined(), GAMMA_PROFILE)
        self.assertLessEqual(abs(value - refined), err + 1e-15)

    def test_cut_extension(self):
        value, err = vertical_integral(mellin_exp(2.0), path_for(1.0, 4), GAMMA_PROFILE,
                                       rtol=1e-12, full_output=True)
        self.assertLess(abs(value - math.exp(-2)), 1e-10)

    def test_profile_contradiction(self):
        with self.assertRaises(TailBoundError):
            vertical_integral(mellin_exp(2.0), path_for(1.0, 20), DecayProfile(rate=5.0))

    def test_pole_on_path(self):
        def singular_line(w):
            with np.errstate(divide='ignore'):
                return 1 / np.real(w)

        with self.assertRaises(PathCollisionError):
            vertical_integral(singular_line, VerticalPath(0.0, 1.0, 8))


class TestShiftContour(unittest.TestCase):

    def test_residue_at_origin(self):
        value = shift_contour(mellin_exp(2.0), path_for(1.0, 40), -0.5,
                              poles=[(0.0, lambda: 1.0)], profile=GAMMA_PROFILE)
        self.assertLess(abs(value - math.exp(-2)), 1e-12)

    def test_cauchy_for_gaussian(self):
        w0 = complex(0.3, 0.2)
        f = lambda w: np.exp(w ** 2) / (w - w0)
        path = path_for(-1.0, 12)
        direct = vertical_integral(f, path)
        shifted = shift_contour(f, path, 1.0, poles=[(w0, lambda: np.exp(w0 ** 2))])
        self.assertLess(abs(direct - shifted), 1e-12)

    def test_pole_free_shift(self):
        a = vertical_integral(mellin_exp(2.0), path_for(1.0, 40))
        b = shift_contour(mellin_exp(2.0), path_for(1.0, 40), 2.0)
        self.assertLess(abs(a - b), 1e-12)

    def test_pole_bookkeeping(self):
        with self.assertRaises(PathCollisionError):
            shift_contour(mellin_exp(2.0), path_for(1.0, 40), -1.0, poles=[(-1.0, lambda: 1.0)])
        with self.assertRaises(DomainError):
            shift_contour(mellin_exp(2.0), path_for(1.0, 40), 0.5, poles=[(0.0, lambda: 1.0)])


class TestDoubleIntegral(unittest.TestCase):

    def test_product_integrand(self):
        def f(u, w):
            return gamma(u) * np.exp(-u * math.log(2.0)) * gamma(w) * np.exp(-w * math.log(3.0))

        value, err = double_vertical_integral(f, path_for(1.0, 30), path_for(0.5, 30),
                                              GAMMA_PROFILE, GAMMA_PROFILE, full_output=True)
        self.assertLess(abs(value - math.exp(-5)), 1e-12)
        self.assertLess(err, 1e-8)


class TestBarnesReduction(unittest.TestCase):

    def test_identity(self):
        numeric, closed = barnes_second_reduction(complex(0.7, 2.0), 1.3)
        self.assertLess(abs(numeric - closed), 1e-8 * abs(closed))

    def test_even_in_t(self):
        a = barnes_second_reduction(complex(0.7, 2.0), 1.3)
        b = barnes_second_reduction(complex(0.7, 2.0), -1.3)
        self.assertLess(abs(a[0] - b[0]), 1e-12 * abs(a[0]))
        self.assertLess(abs(a[1] - b[1]), 1e-14 * abs(a[1]))

    def test_large_u(self):
        numeric, closed = barnes_second_reduction(30.0, 0.8)
        self.assertLess(abs(numeric - closed), 1e-2 * abs(closed))

    def test_path_collision(self):
        with self.assertRaises(PathCollisionError):
            barnes_second_reduction(complex(-0.2, 1.0), 1.0)


class TestHTransforms(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.h = TestFunctionH(T=12.0, alpha=1.0, R=100.0)

    def test_double_transform_closed_form(self):
        value = h_double_transform(self.h, 2.0, 12, 0.0)
        closed = h_double_closed(self.h, 2.0, 12, 0.0)
        self.assertLess(abs(value - closed), 1e-6 * abs(closed))

    def test_double_transform_even(self):
        a = h_double_transform(self.h, 2.0, 12, 0.0)
        b = h_double_transform(self.h, -2.0, 12, 0.0)
        self.assertLess(abs(a - b), 1e-10 * abs(a))

    def test_double_transform_linear(self):
        path = path_for(1.0, 28.0)
        a = h_double_transform(self.h, 2.0, 12, 0.0, outer_path=path)
        b = h_double_transform(lambda t: 2 * self.h(t), 2.0, 12, 0.0, outer_path=path)
        self.assertLess(abs(b - 2 * a), 1e-14 * abs(a))

    def test_vanishing(self):
        for ell in (0, 3):
            value = vanishing_integral_check(self.h, 12, 0.0, ell)
            self.assertLess(abs(value), 1e-8)

    def test_vanishing_detects_odd_part(self):
        shifted = lambda t: self.h(t + 1.0)
        value = vanishing_integral_check(shifted, 12, 0.0, 3, path=path_for(1.0, 112.0))
        self.assertGreater(abs(value), 1e-7)

    def test_weight_cut_high_order(self):
        """Гауссов хвост h перекрывает рост |u|^12 при ширине W = T."""
        t_cut, profile = weight_cut(self.h, 12.0)
        self.assertGreater(profile.rate - profile.order / (1 + t_cut), 0)
        integrand = lambda u: self.h(u / 1j) * u ** 12
        bound = tail_bound(integrand, path_for(0.5, t_cut), profile)
        t = np.linspace(t_cut, t_cut + 60.0, 6001)
        values = np.abs(integrand(0.5 + 1j * t))
        numeric = 2 * float(np.sum((values[1:] + values[:-1]) / 2 * np.diff(t))) / (2 * math.pi)
        self.assertGreaterEqual(bound, numeric)
        self.assertLess(bound, 1e-4)

    def test_weight_cut_narrow_width(self):
        h = TestFunctionH(T=6.0, alpha=1 / 3, R=16.0)
        for order in (0.0, 6.0, 12.0):
            t_cut, profile = weight_cut(h, order, t=2.0)
            self.assertGreater(profile.rate - profile.order / (1 + t_cut), 0)
            bound = tail_bound(lambda u: h(u / 1j - 2.0) * u ** order, path_for(0.5, t_cut), profile)
            self.assertTrue(math.isfinite(bound))

    def test_custom_weight_needs_path(self):
        with self.assertRaises(DomainError):
            vanishing_integral_check(lambda t: self.h(t), 12, 0.0, 0)


if __name__ == '__main__':
    unittest.main()
