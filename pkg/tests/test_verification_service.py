import unittest

from models import MomentReport
from services.verification_service import FIRST_MOMENT_TOL, first_moment_checks


def make_report(lhs: complex, rhs: complex, budget: float) -> MomentReport:
    return MomentReport(spectral_discrete=lhs, spectral_continuous=0j, main=rhs, e1=0j, e2=0j,
                        truncation_budget=budget)


class TestFirstMomentGate(unittest.TestCase):
    """Тесты критерия прохождения тождества первого момента."""

    def test_close_sides_pass(self):
        checks = first_moment_checks(make_report(1.0 + 0j, 1.01 + 0j, 1e-6), 'Delta')
        self.assertEqual([c['name'] for c in checks], ['first_moment_identity', 'first_moment_budget'])
        self.assertTrue(all(c['passed'] for c in checks))
        self.assertEqual(checks[0]['tolerance'], FIRST_MOMENT_TOL)
        self.assertAlmostEqual(checks[0]['error'], 0.01 / 1.01)
        self.assertEqual(checks[0]['details']['truncation_budget'], 1e-6)

    def test_large_budget_does_not_widen_tolerance(self):
        """Большой бюджет отсечек не делает далекие стороны согласованными."""
        checks = first_moment_checks(make_report(1.0 + 0j, 2.0 + 0j, 5.0), 'Delta')
        identity, budget = checks
        self.assertFalse(identity['passed'])
        self.assertEqual(identity['tolerance'], FIRST_MOMENT_TOL)
        self.assertFalse(budget['passed'])
        self.assertEqual(budget['value'], 5.0)

    def test_budget_flagged_when_sides_agree(self):
        identity, budget = first_moment_checks(make_report(1.0 + 0j, 1.0 + 0j, 0.2), 'Delta')
        self.assertTrue(identity['passed'])
        self.assertFalse(budget['passed'])
        self.assertAlmostEqual(budget['tolerance'], FIRST_MOMENT_TOL)


if __name__ == '__main__':
    unittest.main()
