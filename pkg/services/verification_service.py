"""Сборка отчетов команд проверки: общий формат для CLI и HTTP API."""
import logging
import math
from typing import Any, Dict, List, Optional

import numpy as np

from config import active_config
from models import CuspContext, PhiSpec, RunConfig, TestFunctionH, UpperHalfPoint
from schemas import RunConfigSchema, VerificationReportSchema
from services.arithmetic import (
    delta_form, divisors, eta_product_form, ramanujan_rho_bruteforce, rho_closed, sigma_cusp)
from services.contour import (
    barnes_second_reduction, h_double_closed, h_double_transform, path_for,
    vanishing_integral_check, weight_cut)
from services.eisenstein import eisenstein_direct, eisenstein_fourier, tau_coefficient
from services.lfunctions import double_series_M, rankin_selberg_residue
from services.maass_solver import shipped_catalog
from services.maassdata import load_catalog
from services.moments import (
    H_family, catalog_requirement, first_moment_report, kernel_structure, second_moment_main,
    second_moment_terms, shifted_h_integral)
from services.specfun import zeta, zeta_star
from utils.error_handlers import CoverageError, DomainError, log_operation

logger = logging.getLogger(__name__)

# эта-произведения, дающие новые формы уровней 2, 3, 5, 6, 11
ETA_NEWFORMS = {
    2: ({1: 8, 2: 8}, '2.8.a.a'),
    3: ({1: 6, 3: 6}, '3.6.a.a'),
    5: ({1: 4, 5: 4}, '5.4.a.a'),
    6: ({1: 2, 2: 2, 3: 2, 6: 2}, '6.4.a.a'),
    11: ({1: 2, 11: 2}, '11.2.a.a'),
}
FORM_TABLE_SIZE = 2000
TRANSFORM_WEIGHT = 12
TRANSFORM_TOL = 1e-6
DIVISOR_CASES = 50
MULTIPLICATIVITY_CASES = 200
SYMMETRY_CASES = 5
SYMMETRY_TOL = 1e-10
SYMMETRY_TRUNC = 150
FD_STEP = 1e-4
FIRST_MOMENT_TOL = 5e-2
H_SETTINGS = ((20.0, 0.5, 50.0), (30.0, 1 / 3, 200.0))


def reference_form(N: int, n_max: int = FORM_TABLE_SIZE):
    """Δ для N = 1, иначе новая форма из таблицы эта-произведений."""
    if N == 1:
        return delta_form(n_max=n_max)
    if N not in ETA_NEWFORMS:
        raise DomainError(
            f"No reference newform for level N={N}; available levels: 1, {', '.join(map(str, ETA_NEWFORMS))}.")
    exponents, label = ETA_NEWFORMS[N]
    return eta_product_form(exponents, N, n_max, label=label)


def _check(name: str, value=None, expected=None, error: Optional[float] = None,
           tolerance: Optional[float] = None, passed: Optional[bool] = None, **details) -> Dict[str, Any]:
    if passed is None:
        passed = error is not None and tolerance is not None and error <= tolerance
    return {'name': name, 'value': value, 'expected': expected, 'error': error,
            'tolerance': tolerance, 'passed': bool(passed), 'details': details}


def build_report(config: RunConfig, results: List[Dict[str, Any]],
                 budgets: Optional[Dict[str, float]] = None, moment=None) -> Dict[str, Any]:
    """Единый JSON-отчет: schema_version, command, config, results, budgets, pass, seed."""
    passed = bool(results) and all(r['passed'] for r in results)
    report = VerificationReportSchema().dump({
        'command': config.command,
        'config': RunConfigSchema().dump(config),
        'results': results,
        'budgets': budgets or {},
        'passed': passed,
        'seed': config.seed,
        'moment': moment,
    })
    log_operation('verify', config.command, details={'pass': passed, 'checks': len(results)})
    return report


# ---- Команды ----

def verify_eisenstein(config: RunConfig) -> Dict[str, Any]:
    """Прямая сумма по смежным классам против ряда Фурье в каждом каспе уровня N."""
    rng = np.random.default_rng(config.seed)
    N = config.N
    results = []
    for a in divisors(N):
        cusp = CuspContext(a, N)
        for _ in range(config.points):
            z = UpperHalfPoint(rng.uniform(-0.5, 0.5), rng.uniform(0.6, 1.6))
            s = complex(rng.uniform(1.3, 2.0), rng.uniform(-2.0, 2.0))
            direct, db = eisenstein_direct(cusp, z, s, full_output=True)
            fourier, fb = eisenstein_fourier(cusp, z, s, full_output=True)
            deviation = abs(direct - fourier)
            bound = db + fb + 1e-12
            results.append(_check(
                f'cusp_{a}', direct, fourier, deviation, bound,
                passed=deviation <= bound and deviation <= 1e-8,
                z=[z.x, z.y], s=[s.real, s.imag]))
    if N == 1:
        # рассеяние уровня 1: τ(s, 0) = ζ*(2s-1)/ζ*(2s)
        for _ in range(3):
            s = complex(rng.uniform(1.3, 2.0), rng.uniform(-2.0, 2.0))
            value = tau_coefficient(CuspContext(1, 1), s, 0)
            expected = complex(zeta_star(2 * s - 1)) / complex(zeta_star(2 * s))
            results.append(_check('scattering', value, expected, abs(value - expected),
                                  1e-12 * abs(expected), s=[s.real, s.imag]))
    logger.info("verify eisenstein N=%s: %s checks", N, len(results))
    return build_report(config, results)


def verify_transforms(config: RunConfig) -> Dict[str, Any]:
    """Лемма Барнса, замкнутая форма h** и обращение в ноль интегралов с h(u/i)."""
    rng = np.random.default_rng(config.seed)
    params = config.h_params()
    k = TRANSFORM_WEIGHT
    results = []
    for _ in range(3):
        u = complex(rng.uniform(0.3, 1.5), rng.uniform(-3.0, 3.0))
        t = float(rng.uniform(-3.0, 3.0))
        numeric, closed, err = barnes_second_reduction(u, t, full_output=True)
        results.append(_check('barnes', numeric, closed, abs(numeric - closed), TRANSFORM_TOL,
                              u=[u.real, u.imag], t=t, quadrature=err))
    for t in (float(rng.uniform(0.5, 4.0)),):
        value, err = h_double_transform(params, t, k, 0.0, full_output=True)
        closed = h_double_closed(params, t, k, 0.0)
        results.append(_check('h_double', value, closed, abs(value - closed), TRANSFORM_TOL,
                              t=t, quadrature=err))
    for ell in (0, 1, 3):
        value, err = vanishing_integral_check(params, k, 0.0, ell, full_output=True)
        results.append(_check(f'vanishing_{ell}', value, 0.0, abs(value), TRANSFORM_TOL,
                              quadrature=err))
    # контроль: сдвинутая h не четна, интеграл обязан быть заметно ненулевым
    t_cut, _ = weight_cut(params, 2 * 3 + 2 - k)
    shifted = lambda t: params(t + 1.0)
    value, err = vanishing_integral_check(shifted, k, 0.0, 3, path=path_for(1.0, t_cut), full_output=True)
    results.append(_check('control_shifted_h', value, None, abs(value), 100 * err,
                          passed=abs(value) > max(100 * err, 1e-10)))
    return build_report(config, results)


def verify_divisors(config: RunConfig) -> Dict[str, Any]:
    """Замкнутые формулы ρ_{1/a}(s, n) против двойной суммы Рамануджана и мультипликативность σ^a."""
    rng = np.random.default_rng(config.seed)
    gamma_max = active_config().GAMMA_MAX
    results = []
    for _ in range(DIVISOR_CASES):
        N = int(rng.choice([1, 2, 3, 5, 6, 10]))
        a = int(rng.choice(divisors(N)))
        n = int(rng.integers(0, 31))
        s = complex(rng.uniform(1.3, 2.0), rng.uniform(-2.0, 2.0))
        cusp = CuspContext(a, N)
        closed = rho_closed(cusp, s, n)
        brute, bound = ramanujan_rho_bruteforce(cusp, s, n, gamma_max, full_output=True)
        results.append(_check('rho_closed', closed, brute, abs(closed - brute),
                              bound + 1e-12 * abs(closed), N=N, a=a, n=n, s=[s.real, s.imag]))
    checked = 0
    bad = []
    while checked < MULTIPLICATIVITY_CASES:
        N = int(rng.choice([2, 6, 10, 30]))
        cusp = CuspContext(int(rng.choice(divisors(N))), N)
        n1, n2 = int(rng.integers(1, 401)), int(rng.integers(1, 401))
        if math.gcd(n1, n2) != 1:
            continue
        x = int(rng.choice([-3, -1, 1, 2]))
        one = sigma_cusp(cusp, x, 1, exact=True)
        if sigma_cusp(cusp, x, n1 * n2, exact=True) * one != (
                sigma_cusp(cusp, x, n1, exact=True) * sigma_cusp(cusp, x, n2, exact=True)):
            bad.append([cusp.a, N, n1, n2, x])
        checked += 1
    results.append(_check('sigma_multiplicativity', passed=not bad, cases=checked, failures=bad[:10]))
    return build_report(config, results)


def verify_symmetry(config: RunConfig) -> Dict[str, Any]:
    """M_{f,φ₁,φ₂}(s, w) = M_{f,φ₂,φ₁}(w, s) в области абсолютной сходимости."""
    rng = np.random.default_rng(config.seed)
    f = reference_form(config.N)
    holo = PhiSpec('holomorphic', form=f)
    eis = PhiSpec('eisenstein', r=config.r or 0.5, level=config.N)
    results = []
    for _ in range(SYMMETRY_CASES):
        s = complex(rng.uniform(1.2, 2.5), rng.uniform(-2.0, 2.0))
        w = complex(rng.uniform(1.2, 2.5), rng.uniform(-2.0, 2.0))
        a, err = double_series_M(f, holo, eis, s, w, trunc=SYMMETRY_TRUNC, full_output=True)
        b = double_series_M(f, eis, holo, w, s, trunc=SYMMETRY_TRUNC)
        results.append(_check('swap', a, b, abs(a - b), SYMMETRY_TOL * abs(a),
                              s=[s.real, s.imag], w=[w.real, w.imag], truncation=err))
    return build_report(config, results)


def h_integrals(config: RunConfig) -> Dict[str, Any]:
    """Тождества для производных H₁^-(ir) и H₁^+(3ir) по r в нуле конечными разностями."""
    k = reference_form(config.N).weight
    settings = [(config.T, config.alpha, config.R)] + [s for s in H_SETTINGS
                                                        if s != (config.T, config.alpha, config.R)]
    results = []
    for T, alpha, R in settings:
        params = TestFunctionH(T=T, alpha=alpha, R=R)
        family = H_family(k, params)
        setting = {'T': T, 'alpha': alpha, 'R': R, 'H': family.as_dict()}
        minus = lambda r: shifted_h_integral(params, k, -1j * r, 1j * r)
        triple = lambda r: shifted_h_integral(params, k, 3j * r, 1j * r)
        for label, F, d1, d2 in (
                ('minus', minus, -2j * family.H2, -4 * family.H3),
                ('triple', triple, 2j * family.H2, -8 * family.H0 - 4 * family.H3)):
            first = (F(FD_STEP) - F(-FD_STEP)) / (2 * FD_STEP)
            second = (F(FD_STEP) - 2 * F(0.0) + F(-FD_STEP)) / FD_STEP ** 2
            results.append(_check(f'{label}_first_derivative', first, d1, abs(first - d1),
                                  1e-4 * abs(d1), **setting))
            results.append(_check(f'{label}_second_derivative', second, d2, abs(second - d2),
                                  1e-3 * abs(d2), **setting))
    return build_report(config, results)


def second_moment(config: RunConfig) -> Dict[str, Any]:
    """Главный член второго момента для f = g уровня N и его устойчивость к шагам предела."""
    f = reference_form(config.N)
    params = config.h_params()
    steps = active_config().LIMIT_STEPS
    terms = second_moment_terms(f, f, config.r)
    value, err = second_moment_main(f, f, config.r, params, terms=terms, full_output=True)
    finer = second_moment_terms(f, f, config.r, steps=tuple(s / 2 for s in steps))
    tight, tight_err = second_moment_main(f, f, config.r, params, terms=finer, full_output=True)
    results = [_check('main_term', value, tight, abs(value - tight),
                      err + tight_err + config.tol * abs(value), form=f.label)]
    budgets = {'limit': err}
    if config.r == 0:
        coeffs = kernel_structure(f, f, terms=terms)
        residue, res_err = rankin_selberg_residue(f, full_output=True)
        expected = residue / (3 * complex(zeta(2.0)).real)
        results.append(_check('leading_coefficient', coeffs['H4'], expected,
                              abs(coeffs['H4'] - expected), 1e-3 * abs(expected),
                              coefficients={name: [c.real, c.imag] for name, c in coeffs.items()}))
        budgets['residue'] = res_err
    return build_report(config, results, budgets)


def first_moment(config: RunConfig) -> Dict[str, Any]:
    """
    Обе стороны тождества первого момента.

    Raises:
        CoverageError: если каталог не задан или не покрывает нужный отрезок t;
            без явного каталога на уровне 1 берется каталог по поставляемым затравкам.
    """
    params = config.h_params()
    required = catalog_requirement(params, config.tol)
    path = config.catalog or active_config().MOMENTLAB_CATALOG
    if path:
        catalog = load_catalog(path, t_required=required)
    else:
        catalog = shipped_catalog(config.N, required)
    if catalog is None:
        raise CoverageError(
            f"first-moment needs a Maass form catalog covering t <= {required:.4g}; pass --catalog.",
            required=required, available=0.0)
    f = reference_form(config.N)
    report = first_moment_report(f, config.m, config.r, params, catalog, tol=config.tol)
    return build_report(config, first_moment_checks(report, f.label), report.budgets, moment=report)


def first_moment_checks(report, label: str) -> List[Dict[str, Any]]:
    """
    Тождество проверяется по относительному расхождению с допуском FIRST_MOMENT_TOL.

    Суммарный бюджет отсечек идет отдельной проверкой: если он больше допуска
    в абсолютной мере, совпадение сторон ничего не доказывает.
    """
    scale = max(abs(report.lhs), abs(report.rhs))
    return [
        _check('first_moment_identity', report.lhs, report.rhs, report.relative_discrepancy,
               FIRST_MOMENT_TOL, discrepancy=report.discrepancy,
               truncation_budget=report.truncation_budget, form=label),
        _check('first_moment_budget', report.truncation_budget, None, report.truncation_budget,
               FIRST_MOMENT_TOL * scale, form=label),
    ]


COMMAND_HANDLERS = {
    'verify-eisenstein': verify_eisenstein,
    'verify-transforms': verify_transforms,
    'verify-divisors': verify_divisors,
    'verify-symmetry': verify_symmetry,
    'first-moment': first_moment,
    'h-integrals': h_integrals,
    'second-moment-main': second_moment,
}


def run_command(config: RunConfig) -> Dict[str, Any]:
    """Выполняет команду из RunConfig и возвращает отчет."""
    logger.info("Running %s with %s", config.command, config)
    return COMMAND_HANDLERS[config.command](config)
