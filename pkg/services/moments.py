"""
Моменты L-функций Ранкина-Сельберга: обе стороны тождества первого момента
(спектральная сумма против главного члена и двух контурных ошибок) и главный
член второго момента с коэффициентами из L-значений.
"""
import logging
import math
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import active_config
from models import (
    CuspContext, DecayProfile, HFamily, HoloForm, MaassForm, MainTermPiece, MomentReport,
    PhiSpec, SpectralCatalog, TestFunctionH, VerticalPath)
from services.arithmetic import divisors, euler_phi, prime_factors, sigma_cusp_stable, sigma_N_table
from services.contour import (
    GL_CHECK_ORDER, double_vertical_integral, line_nodes, path_for, shift_contour,
    vertical_integral, weight_cut)
from services.eisenstein import tau_coefficient
from services.lfunctions import (
    L_f_times_eisenstein, L_rankin_maass, L_rankin_selberg, shifted_series_D)
from services.maassdata import maass_coefficient
from services.specfun import EULER_GAMMA, digamma, gamma_ratio, richardson_limit, zeta, zeta_star
from utils.error_handlers import ConvergenceError, CoverageError, DomainError, PathCollisionError

logger = logging.getLogger(__name__)

# прямые после сдвига в E^{(2)}: σ_u' и σ_w' = σ_u' - 1/2
E2_OUTER_SIGMA = 3.25
E2_START_SIGMA = 0.75
E1_OUTER_SIGMA = 1.0
INNER_REACH = 16.0
RESIDUE_LINE_CUT = 24.0
LIMIT_RTOL = 1e-5
LOCAL_DEGREE = 8
_SERIES_CHUNK = 512
_CACHE_MIN_SIZE = 64
_LOG_2PI = math.log(2 * math.pi)


def _refine(path: VerticalPath, refinement: int) -> VerticalPath:
    if refinement < 1 or refinement & (refinement - 1):
        raise DomainError(f"Refinement must be a power of two, got {refinement}.")
    while refinement > 1:
        path = path.refined()
        refinement //= 2
    return path


def _local_euler(N: int, r: float) -> complex:
    """Π_{p|N}(1 - p^{-1-2ir})."""
    out = 1.0 + 0j
    for p in prime_factors(N):
        out *= 1 - complex(p) ** (-1 - 2j * r)
    return out


def _coefficient(f: HoloForm, m: int) -> float:
    if m < 1:
        raise DomainError(f"m must be positive, got {m}.")
    if m > f.n_max:
        raise CoverageError(f"a({m}) is beyond the coefficient table.", required=m, available=f.n_max)
    return float(f.a[m])


# ---- Вес h и H-интегралы ----

def h_weight(t, params: TestFunctionH):
    """h_{T,α,R}(t) = (e^{-((t-T)/T^α)²} + e^{-((t+T)/T^α)²})·(t²+1/4)/(t²+R)."""
    return params(t)


def spectral_integral(params: TestFunctionH, density: Callable[[np.ndarray], np.ndarray],
                      order: float = 2.0, full_output: bool = False):
    """
    (1/π²)∫ h(t)·t·tanh(πt)·density(t) dt по вещественной прямой.

    Args:
        params: Вес h.
        density: Векторизованная функция t; вызывается на вещественных t (комплексный dtype).
        order: Степень роста t·density(t) для выбора отсечки.
    """
    t_cut, profile = weight_cut(params, order)

    def integrand(w):
        t = -1j * w
        return params(t) * t * np.tanh(np.pi * t) * density(t)

    value, err = vertical_integral(integrand, path_for(0.0, t_cut), profile, full_output=True)
    # (1/2πi)∫ f(w) dw по Re w = 0 равно (1/2π)∫ g(t) dt
    scale = 2 / math.pi
    return (value * scale, err * scale) if full_output else value * scale


def _psi_sum(k: int, t: np.ndarray, order: int = 0) -> np.ndarray:
    return digamma(k / 2 + 1j * t, order) + digamma(k / 2 - 1j * t, order)


@lru_cache(maxsize=1024)
def shifted_h_integral(params: TestFunctionH, k: int, numer_shift: complex, denom_shift: complex,
                       full_output: bool = False):
    """
    (1/π²)∫ h(t)·t·tanh(πt)·Γ(k/2+p+it)Γ(k/2+p-it)/(Γ(k/2+q+it)Γ(k/2+q-it)) dt,
    p = numer_shift, q = denom_shift.
    """
    p, q = complex(numer_shift), complex(denom_shift)
    half_k = k / 2

    def density(t):
        it = 1j * t
        return gamma_ratio([half_k + p + it, half_k + p - it], [half_k + q + it, half_k + q - it])

    order = 2.0 + 2 * (p - q).real
    return spectral_integral(params, density, order, full_output)


def H1_shifted(k: int, params: TestFunctionH, s: complex, nu: complex, sign: int) -> complex:
    """H₁^±(s; ν): числитель Γ(1-2s+k/2±ν±it), знаменатель Γ(k/2+ν±it)."""
    if sign not in (1, -1):
        raise DomainError(f"sign must be +1 or -1, got {sign}.")
    s, nu = complex(s), complex(nu)
    return shifted_h_integral(params, k, 1 - 2 * s + sign * nu, nu)


@lru_cache(maxsize=64)
def H_family(k: int, params: TestFunctionH) -> HFamily:
    """
    Семь базовых интегралов с S(t) = ψ(k/2+it) + ψ(k/2-it) и функции H₁^±(ν).

    Raises:
        DomainError: при нечетном k.
    """
    if k < 2 or k % 2:
        raise DomainError(f"Weight k must be a positive even integer, got {k}.")
    S = lambda t: _psi_sum(k, t)
    S1 = lambda t: _psi_sum(k, t, 1)
    S2 = lambda t: _psi_sum(k, t, 2)
    densities = {
        'H1': lambda t: np.ones_like(t),
        'H2': S,
        'H3': lambda t: S(t) ** 2,
        'H4': lambda t: S(t) ** 3,
        'H10': lambda t: S(t) * S1(t),
        'H0': S1,
        'H01': S2,
    }
    values = {}
    for name, density in densities.items():
        value = spectral_integral(params, density, order=2.0)
        if abs(value.imag) > 1e-10 * max(1.0, abs(value)):
            logger.warning("H-integral %s has imaginary part %.3e", name, value.imag)
        values[name] = value.real
    logger.debug("H_family k=%s params=%s: %s", k, params, values)
    return HFamily(
        H1plus=lambda nu: shifted_h_integral(params, k, complex(nu), complex(nu)),
        H1minus=lambda nu: shifted_h_integral(params, k, -complex(nu), complex(nu)),
        **values)


# ---- Главный член первого момента ----

def main_term_first(f: HoloForm, m: int, r: float, params: TestFunctionH,
                    full_output: bool = False):
    """
    M_f(m; r) = ζ(1+2ir)a(m)m^{-k/2-ir}·H₁
        + (2π)^{4ir}φ(N)ζ(1-2ir)/(N^{1+2ir}Π(1-p^{-1-2ir}))·a(m)m^{-k/2+ir}·H₁^-(ir).

    При r = 0 полюса сокращаются, и используется ψ-форма:
    a(m)m^{-k/2}{H₂ + (-2 log 2π - Σ_{p|N} log p/(p-1) - log m + 2γ)H₁}.
    """
    k, N = f.weight, f.level
    a_m = _coefficient(f, m)
    family = H_family(k, params)
    base = a_m * m ** (-k / 2)
    if r == 0:
        const = (-2 * _LOG_2PI - sum(math.log(p) / (p - 1) for p in prime_factors(N))
                 - math.log(m) + 2 * EULER_GAMMA)
        value = complex(base * (family.H2 + const * family.H1))
        _, err1 = shifted_h_integral(params, k, 0j, 0j, full_output=True)
        err = abs(base) * (1 + abs(const)) * err1
        return (value, err) if full_output else value

    ir = 1j * r
    h1, err1 = shifted_h_integral(params, k, 0j, 0j, full_output=True)
    h1m, err2 = shifted_h_integral(params, k, -ir, ir, full_output=True)
    log_m = math.log(m)
    first = complex(zeta(1 + 2 * ir)) * base * np.exp(-ir * log_m)
    second = (np.exp(4 * ir * _LOG_2PI) * euler_phi(N) * complex(zeta(1 - 2 * ir))
              / (complex(N) ** (1 + 2 * ir) * _local_euler(N, r)) * base * np.exp(ir * log_m))
    value = complex(first * h1 + second * h1m)
    err = abs(first) * err1 + abs(second) * err2
    return (value, err) if full_output else value


# ---- Контурные ошибки ----

class _ShiftedSum:
    """m^w·Σ_n c_n·n^{-w-k/2} на массивах w; значения на длинных массивах кэшируются."""

    def __init__(self, coeffs: np.ndarray, n: np.ndarray, k: int, m: int):
        keep = coeffs != 0
        self.coeffs = np.asarray(coeffs[keep], dtype=complex)
        self.log_n = np.log(n[keep].astype(float))
        self.half_k = k / 2
        self.log_m = math.log(m)
        self._cache: Dict[tuple, np.ndarray] = {}

    def _compute(self, flat: np.ndarray) -> np.ndarray:
        out = np.zeros(flat.shape, dtype=complex)
        if self.coeffs.size:
            for start in range(0, flat.size, _SERIES_CHUNK):
                block = flat[start:start + _SERIES_CHUNK]
                powers = np.exp(-np.multiply.outer(block + self.half_k, self.log_n))
                out[start:start + block.size] = powers @ self.coeffs
        return out * np.exp(flat * self.log_m)

    def __call__(self, w):
        w = np.asarray(w, dtype=complex)
        flat = w.ravel()
        if flat.size < _CACHE_MIN_SIZE:
            return self._compute(flat).reshape(w.shape)
        key = (w.shape, complex(flat[0]), complex(flat[-1]))
        if key not in self._cache:
            self._cache[key] = self._compute(flat).reshape(w.shape)
        return self._cache[key]


def _absolute_mass(fn, path: VerticalPath) -> float:
    nodes, weights = line_nodes(path, GL_CHECK_ORDER)
    return float(np.sum(np.abs(np.asarray(fn(nodes)) * weights)))


def error_E1_first(f: HoloForm, m: int, r: float, params: TestFunctionH, refinement: int = 1,
                   full_output: bool = False, budgets: Optional[Dict[str, float]] = None):
    """
    E^{(1)}_f(m; r): двойной интеграл по σ_u = 1/2+2ε и σ_w = 1/2-k/2-ε
    с конечной суммой Σ_{n<m} a(m-n)σ^N_{-2ir}(n)n^{ir}·n^{-w-k/2}.

    Args:
        refinement: Во сколько раз сгустить панели (степень двойки).
        budgets: Если задан, сюда пишется 'e1_quadrature'.
    """
    k, N = f.weight, f.level
    _coefficient(f, m)
    if m == 1:
        if budgets is not None:
            budgets['e1_quadrature'] = 0.0
        return (0j, 0.0) if full_output else 0j

    ir = 1j * r
    half_k = k / 2
    n = np.arange(1, m)
    sig = sigma_N_table(r, m - 1, N)[1:]
    coeffs = f.a[m - n] * sig * np.exp(ir * np.log(n.astype(float)))
    series = _ShiftedSum(coeffs, n, k, m)
    sigma_w = 0.5 - half_k - 0.25

    def integrand(u, w):
        outer = params(u / 1j) * u * np.tan(np.pi * u)
        ratio = gamma_ratio([u - w, -u - w, w + half_k - ir, w + half_k + ir],
                            [half_k + ir + u, half_k + ir - u])
        return outer * ratio * series(w)

    t_cut, outer_profile = weight_cut(params, float(k))
    outer_path = _refine(path_for(E1_OUTER_SIGMA, t_cut), refinement)
    inner_path = _refine(path_for(sigma_w, RESIDUE_LINE_CUT), refinement)
    value, err = double_vertical_integral(
        integrand, outer_path, inner_path, outer_profile=outer_profile,
        inner_profile=DecayProfile(rate=math.pi, order=float(k)), full_output=True)
    C1 = (-4 * np.exp(2 * ir * _LOG_2PI) * np.cos(np.pi * ir)
          / (math.pi * _local_euler(N, r)))
    value, err = complex(C1 * value), abs(C1) * err
    if budgets is not None:
        budgets['e1_quadrature'] = err
    logger.info("E1 for %s, m=%s, r=%s: %s (err %.2e)", f.label, m, r, value, err)
    return (value, err) if full_output else value


def _outer_poles(params: TestFunctionH, sigma_new: float) -> List[Tuple[float, str]]:
    poles = [(0.5 + j, 'gamma') for j in range(1, int(math.ceil(sigma_new)) + 1) if 0.5 + j < sigma_new]
    root = math.sqrt(params.R)
    if abs(root - E1_OUTER_SIGMA) < 1e-9:
        raise PathCollisionError(f"h has a pole at u = {root} on the starting line.")
    if E1_OUTER_SIGMA < root < sigma_new:
        if any(abs(root - p) < 1e-9 for p, _ in poles):
            raise DomainError(f"sqrt(R) = {root} coincides with a pole of Γ(1/2-u).")
        poles.append((root, 'weight'))
    return poles


def error_E2_first(f: HoloForm, m: int, r: float, params: TestFunctionH,
                   trunc: Optional[int] = None, refinement: int = 1, full_output: bool = False,
                   budgets: Optional[Dict[str, float]] = None, outer_sigma: Optional[float] = None):
    """
    E^{(2)}_f(m; r) с рядом D(w) = Σ_n a(m+n)σ^N_{-2ir}(n)n^{ir}·n^{-w-k/2}.

    Ряд по n сходится при Re w > 1/2, но медленно, поэтому внешняя прямая
    переносится на σ_u' = 3.25 (3.75, если √R рядом), внутренняя на σ_w' = σ_u' - 1/2.
    Пересеченные полюса Γ(1/2-u) в u = 1/2+j и полюс h в u = √R дают
    одномерные интегралы по w, для которых, в свою очередь, сдвигается прямая
    через полюса Γ(u-w) в w = u+n.

    Args:
        trunc: Число членов ряда по n; по умолчанию вся таблица a(n).
        budgets: Если задан, сюда пишутся 'e2_quadrature' и 'e2_series_tail'.
        outer_sigma: Внешняя прямая вместо σ_u'; значение не зависит от выбора.

    Raises:
        CoverageError: если таблица a(n) короче trunc + m.
        DomainError: если outer_sigma <= 3/2.
        PathCollisionError: если outer_sigma попадает на полюс Γ(1/2-u) или h.
    """
    k, N = f.weight, f.level
    _coefficient(f, m)
    trunc = trunc or f.n_max - m
    if trunc < 1 or trunc + m > f.n_max:
        raise CoverageError(f"E2 with {trunc} series terms needs a({trunc + m}).",
                            required=trunc + m, available=f.n_max)
    ir = 1j * r
    half_k = k / 2
    n = np.arange(1, trunc + 1)
    sig = sigma_N_table(r, trunc, N)[1:]
    coeffs = f.a[m + n] * sig * np.exp(ir * np.log(n.astype(float)))
    series = _ShiftedSum(coeffs, n, k, m)
    phi = PhiSpec('eisenstein', r=-r, level=N)

    def series_tail(sigma: float) -> float:
        _, bound = shifted_series_D(f, phi, sigma + 0.5, m, trunc, full_output=True)
        return bound * m ** sigma

    if outer_sigma is None:
        sigma_u = E2_OUTER_SIGMA
        if abs(math.sqrt(params.R) - sigma_u) < 0.25:
            sigma_u += 0.5
    else:
        sigma_u = float(outer_sigma)
        if sigma_u <= 1.5:
            raise DomainError(f"The outer line must lie right of 3/2, got {sigma_u}.")
        if min(abs(sigma_u - 0.5 - round(sigma_u - 0.5)), abs(sigma_u - math.sqrt(params.R))) < 1e-9:
            raise PathCollisionError(f"The outer line Re u = {sigma_u} passes through a pole.")
    sigma_w = sigma_u - 0.5

    def outer_factor(u):
        return params(u / 1j) * u

    def kernel(u, w):
        return outer_factor(u) * gamma_ratio(
            [0.5 + u, 0.5 - u, u - w, w + half_k + ir, w + half_k - ir],
            [half_k + ir + u, half_k + ir - u, 1 + w + u])

    def integrand(u, w):
        return kernel(u, w) * series(w)

    def inner_path(block):
        reach = float(np.max(np.abs(np.imag(block))))
        cut = 8 * math.ceil((reach + INNER_REACH) / 8)
        return _refine(path_for(sigma_w, cut), refinement)

    t_cut, outer_profile = weight_cut(params, float(k))
    outer_path = _refine(path_for(sigma_u, t_cut), refinement)
    inner_profile = DecayProfile(rate=math.pi, order=float(k))
    double, quad_err = double_vertical_integral(
        integrand, outer_path, inner_path, outer_profile=outer_profile,
        inner_profile=inner_profile, full_output=True)

    tail_new = series_tail(sigma_w)
    mass = 0.0
    u_nodes, u_weights = line_nodes(path_for(sigma_u, t_cut), GL_CHECK_ORDER)
    for point, weight in zip(u_nodes, u_weights):
        mass += abs(weight) * _absolute_mass(lambda w: kernel(point, w), inner_path(np.array([point])))
    series_err = tail_new * mass

    residue_sum = 0j
    for u_p, kind in _outer_poles(params, sigma_u):
        if kind == 'gamma':
            j = int(round(u_p - 0.5))
            res_a = (-(-1) ** j / math.factorial(j) * complex(params(u_p / 1j)) * u_p
                     * complex(gamma_ratio([0.5 + u_p], [half_k + ir + u_p, half_k + ir - u_p])))
        else:
            res_a = (complex(params.envelope(u_p / 1j)) * (0.25 - params.R) / (-2 * u_p) * u_p
                     * complex(gamma_ratio([0.5 + u_p, 0.5 - u_p],
                                           [half_k + ir + u_p, half_k + ir - u_p])))

        def line_kernel(w, u=u_p):
            return gamma_ratio([u - w, w + half_k + ir, w + half_k - ir], [1 + w + u])

        def residue_factor(w_n, order, u=u_p):
            return (-(-1) ** order / math.factorial(order)
                    * complex(gamma_ratio([w_n + half_k + ir, w_n + half_k - ir], [1 + w_n + u])))

        inner_poles = []
        order = 0
        while u_p + order < sigma_w:
            w_n = u_p + order
            inner_poles.append((w_n, lambda w_n=w_n, order=order:
                                residue_factor(w_n, order) * complex(series(w_n))))
            series_err += (abs(res_a) * abs(residue_factor(w_n, order))
                           * series_tail(w_n))
            order += 1
        start = _refine(path_for(E2_START_SIGMA, RESIDUE_LINE_CUT), refinement)
        inner, inner_err = shift_contour(lambda w: line_kernel(w) * series(w), start, sigma_w,
                                         poles=inner_poles, profile=inner_profile, full_output=True)
        moved = VerticalPath(sigma_w, start.t_cut, start.n_points)
        series_err += abs(res_a) * tail_new * _absolute_mass(line_kernel, moved)
        quad_err += abs(res_a) * inner_err
        residue_sum += res_a * inner
        logger.debug("E2 residue at u=%s (%s): %s x %s", u_p, kind, res_a, inner)

    C2 = (4 * (1j ** k) * np.exp(2 * ir * _LOG_2PI) / (math.pi * _local_euler(N, r)))
    value = complex(C2 * (double - residue_sum))
    quad_err *= abs(C2)
    series_err *= abs(C2)
    if budgets is not None:
        budgets['e2_quadrature'] = quad_err
        budgets['e2_series_tail'] = series_err
    logger.info("E2 for %s, m=%s, r=%s: %s (quad %.2e, series tail %.2e)",
                f.label, m, r, value, quad_err, series_err)
    err = quad_err + series_err
    return (value, err) if full_output else value


# ---- Спектральная сторона ----

def catalog_requirement(params: TestFunctionH, tol: float) -> float:
    """t_max, при котором гауссов хвост h за каталогом ниже tol: T + T^α·√log(1/tol) + 1."""
    if not 0 < tol < 1:
        raise DomainError(f"Tolerance must lie in (0, 1), got {tol}.")
    return params.T + params.width * math.sqrt(math.log(1 / tol)) + 1


def _inner_prefactor(k: int, N: int, r1: float, t: float) -> complex:
    """(-1)^{k/2}(4π)^{-k/2}(2π)^{-2ir₁}Π_{p|N}(1-p^{-1-2ir₁})Γ(ir₁+k/2+it)Γ(ir₁+k/2-it)."""
    ir1 = 1j * r1
    gammas = complex(gamma_ratio([ir1 + k / 2 + 1j * t, ir1 + k / 2 - 1j * t]))
    return ((-1) ** (k // 2) * (4 * math.pi) ** (-k / 2) * np.exp(-2 * ir1 * _LOG_2PI)
            * _local_euler(N, r1) * gammas)


def inner_product_maass(f: HoloForm, form: MaassForm, r1: float = 0.0, full_output: bool = False):
    """
    ⟨u_j, U_{f, E_N^{(k)}(·, 1/2+conj(ir₁))}⟩ в замкнутом виде:
    гамма-префактор, умноженный на (-1)^α·𝓛(1/2+ir₁, f×u_j).

    Функция u_j понимается как Σ_{n≠0} ρ_j(n)√y K_{it_j}(2π|n|y)e(nx), т.е.
    eval_maass(form, z, complex_phase=True).

    Raises:
        DomainError: если уровни f и u_j различны.
    """
    L, err = L_rankin_maass(f, form, 0.5 + 1j * r1, full_output=True)
    front = _inner_prefactor(f.weight, f.level, r1, form.t) * (-1) ** form.parity
    value, err = front * L, abs(front) * err
    return (value, err) if full_output else value


def inner_product_eisenstein(f: HoloForm, cusp: CuspContext, t: float, r1: float = 0.0,
                             full_output: bool = False):
    """
    ⟨E_{1/a}(·, 1/2+it), U_{f, E_N^{(k)}(·, 1/2+conj(ir₁))}⟩ в замкнутом виде через
    L(1/2+ir₁, f×E_{1/a}(·, 1/2+it)).
    """
    N = f.level
    it = 1j * t
    L, err = L_f_times_eisenstein(f, cusp, 0.5 + 1j * r1, t, full_output=True)
    front = (_inner_prefactor(f.weight, N, r1, t) * 2 * complex(N / cusp.a) ** (-0.5 - it)
             / (complex(zeta_star(1 + 2 * it)) * _local_euler(N, t)))
    value, err = front * L, abs(front) * err
    return (value, err) if full_output else value


def _gamma0_index(N: int) -> float:
    out = float(N)
    for p in prime_factors(N):
        out *= 1 + 1 / p
    return out


def spectral_side_first(f: HoloForm, m: int, r: float, params: TestFunctionH,
                        catalog: Optional[SpectralCatalog], tol: float = 1e-8,
                        full_output: bool = False, budgets: Optional[Dict[str, float]] = None):
    """
    Левая часть тождества первого момента: дискретная сумма
    Σ_j h(t_j)/cosh(πt_j)·conj(ρ_j(m))·𝓛(1/2+ir, f×u_j) и непрерывный вклад
    Σ_{a|N} (1/4π)∫ h(t)/cosh(πt)·τ_{1/a}(1/2-it, m)·2(N/a)^{-1/2-it}
    ·L(1/2+ir, f×E_{1/a}(·, 1/2+it))/(ζ*(1+2it)Π(1-p^{-1-2it})) dt.

    Returns:
        Пара (discrete, continuous); при full_output еще суммарная ошибка.

    Raises:
        CoverageError: если каталог не покрывает t <= T + T^α√log(1/tol) + 1.
        DomainError: если уровень каталога отличен от уровня f.
    """
    k, N = f.weight, f.level
    _coefficient(f, m)
    required = catalog_requirement(params, tol)
    if catalog is None:
        raise CoverageError(f"A Maass form catalog covering t <= {required:.4g} is required.",
                            required=required, available=0.0)
    if catalog.level != N:
        raise DomainError(f"Catalog level {catalog.level} differs from form level {N}.")
    if catalog.t_max < required:
        raise CoverageError(
            f"Catalog covers t <= {catalog.t_max}, but t <= {required:.4g} is required.",
            required=required, available=catalog.t_max)
    s = 0.5 + 1j * r

    discrete = 0j
    l_err = 0.0
    scale = 0.0
    for form in catalog.forms:
        weight = complex(params(form.t)) / math.cosh(math.pi * form.t)
        L, err = L_rankin_maass(f, form, s, full_output=True)
        rho = maass_coefficient(form, m)
        discrete += weight * rho * L
        l_err += abs(weight * rho) * err
        scale = max(scale, abs(rho * L) / math.cosh(math.pi * form.t))
    tail = (scale or 1.0) * _gamma0_index(N) * catalog.t_max ** 2 / 12 * math.exp(
        -((catalog.t_max - params.T) / params.width) ** 2)

    t_cut, profile = weight_cut(params, 2.0)
    path = path_for(0.0, t_cut)
    continuous = 0j
    cont_err = 0.0
    for a in divisors(N):
        cusp = CuspContext(a, N)
        cache: Dict[float, Tuple[complex, float]] = {}

        def point(t: float) -> Tuple[complex, float]:
            if t not in cache:
                it = 1j * t
                denom = complex(zeta_star(1 + 2 * it)) * _local_euler(N, t)
                L, err = L_f_times_eisenstein(f, cusp, s, t, full_output=True)
                front = (complex(params(t)) / math.cosh(math.pi * t)
                         * tau_coefficient(cusp, 0.5 - it, m)
                         * 2 * complex(N / a) ** (-0.5 - it) / denom / (4 * math.pi))
                cache[t] = (front * L, abs(front) * err)
            return cache[t]

        def integrand(w):
            return np.array([point(float(t.real))[0] for t in np.ravel(-1j * w)]).reshape(np.shape(w))

        value, err = vertical_integral(integrand, path, profile, full_output=True)
        nodes, weights = line_nodes(path)
        l_part = sum(abs(wt) * point(float((-1j * x).real))[1] for x, wt in zip(nodes, weights))
        continuous += 2 * math.pi * value
        cont_err += 2 * math.pi * (err + l_part)

    if budgets is not None:
        budgets['catalog_tail'] = tail
        budgets['discrete_L'] = l_err
        budgets['continuous'] = cont_err
    logger.info("Spectral side for %s, m=%s, r=%s: discrete %s, continuous %s (%s forms)",
                f.label, m, r, discrete, continuous, len(catalog))
    if full_output:
        return discrete, continuous, tail + l_err + cont_err
    return discrete, continuous


def first_moment_rhs(f: HoloForm, m: int, r: float, params: TestFunctionH, refinement: int = 1,
                     budgets: Optional[Dict[str, float]] = None) -> Tuple[complex, complex, complex]:
    """
    Слагаемые правой части (M_f, E^{(1)}_f, E^{(2)}_f); каталог не нужен.

    Args:
        budgets: Если задан, сюда пишутся 'main_quadrature' и бюджеты E1 и E2.
    """
    if budgets is None:
        budgets = {}
    main, main_err = main_term_first(f, m, r, params, full_output=True)
    budgets['main_quadrature'] = main_err
    e1 = error_E1_first(f, m, r, params, refinement=refinement, budgets=budgets)
    e2 = error_E2_first(f, m, r, params, refinement=refinement, budgets=budgets)
    return main, e1, e2


def first_moment_report(f: HoloForm, m: int, r: float, params: TestFunctionH,
                        catalog: Optional[SpectralCatalog], tol: float = 1e-8,
                        refinement: int = 1) -> MomentReport:
    """Обе стороны тождества первого момента с поименным бюджетом ошибок."""
    budgets: Dict[str, float] = {}
    discrete, continuous = spectral_side_first(f, m, r, params, catalog, tol, budgets=budgets)
    main, e1, e2 = first_moment_rhs(f, m, r, params, refinement=refinement, budgets=budgets)

    notes = []
    if any(form.parity for form in catalog.forms):
        notes.append("odd forms enter with conj(rho_j(m)); the rho_j(-m) convention flips their sign")
    if r == 0 and f.level > 1:
        notes.append("r=0 main term uses -sum log p/(p-1); the r->0 limit of the general-r "
                     "formula gives +sum p log p/(p-1)")
    report = MomentReport(
        spectral_discrete=discrete, spectral_continuous=continuous, main=main, e1=e1, e2=e2,
        truncation_budget=float(sum(budgets.values())), budgets=budgets,
        params={'N': f.level, 'k': f.weight, 'm': m, 'r': r, 'T': params.T,
                'alpha': params.alpha, 'R': params.R, 'tol': tol, 'refinement': refinement,
                'form': f.label},
        catalog_provenance=catalog.provenance, notes=tuple(notes))
    logger.info("First moment report: lhs=%s rhs=%s relative discrepancy %.3e",
                report.lhs, report.rhs, report.relative_discrepancy)
    return report


# ---- Главный член второго момента ----

def _poly_from_roots(exponents: Sequence[complex], p: int) -> np.ndarray:
    poly = np.array([1.0 + 0j])
    for e in exponents:
        poly = np.polynomial.polynomial.polymul(poly, [1.0, -complex(p) ** e])
    return poly


def eisenstein_rankin_polynomial(a: int, N: int, s: complex, it: complex, ir1: complex) -> complex:
    """
    P_a(s; it, ir₁): 𝓛(s, E_{1/a}(·,1/2-it)×E_N^{(k)}(·,1/2+ir₁))
    = P_a/ζ*(1-2it)·ζ(s+it+ir₁)ζ(s+it-ir₁)ζ(s-it+ir₁)ζ(s-it-ir₁).

    Собирается из локальных рядов при p | N: Σ_j c_a(p^j)c_N(p^j)X^j, X = p^{-s},
    умноженных на четыре дзета-множителя (получается кубический многочлен)
    и на ζ_p(2s).

    Raises:
        ConvergenceError: если произведение не оказалось многочленом степени 3.
    """
    if N % a:
        raise DomainError(f"a={a} does not divide N={N}.")
    s, it, ir1 = complex(s), complex(it), complex(ir1)
    x_a, x_N = 2 * it, -2 * ir1
    c1 = sigma_cusp_stable(CuspContext(N, N), x_N, 1)
    width = N // a
    value = 2 * complex(width) ** (-0.5 + it) / c1
    for p in prime_factors(N):
        value /= 1 - complex(p) ** (-1 + 2 * it)
        cusp_a = CuspContext(p if a % p == 0 else 1, N)
        cusp_N = CuspContext(p, N)
        series = np.array([
            sigma_cusp_stable(cusp_a, x_a, p ** j) * complex(p) ** (-j * it)
            * sigma_cusp_stable(cusp_N, x_N, p ** j) * complex(p) ** (j * ir1)
            for j in range(LOCAL_DEGREE)])
        roots = _poly_from_roots([it + ir1, it - ir1, -it + ir1, -it - ir1], p)
        product = np.polynomial.polynomial.polymul(series, roots)[:LOCAL_DEGREE]
        head, rest = product[:4], product[4:]
        if np.max(np.abs(rest)) > 1e-9 * max(1.0, float(np.max(np.abs(head)))):
            raise ConvergenceError(f"Local factor at p={p} is not a cubic polynomial.")
        X = complex(p) ** (-s)
        value *= np.polynomial.polynomial.polyval(X, head) / (1 - X * X)
    return complex(value)


def _cusp_weighted_P(f: HoloForm, g: HoloForm, s: complex, it: complex, ir1: complex) -> complex:
    N = f.level
    A, B = f.A, g.A
    total = 0j
    for a in divisors(N):
        c = N // a
        total += c * A[c] * np.conj(B[c]) * eisenstein_rankin_polynomial(a, N, s, it, ir1)
    return complex(total)


@lru_cache(maxsize=256)
def _main_term_pieces(f: HoloForm, g: HoloForm, s: complex, r1: float) -> Tuple[MainTermPiece, ...]:
    """Четыре слагаемых главного члена в точке (s, r₁)."""
    N = f.level
    b = 1j * r1
    z = lambda x: complex(zeta(x))
    L = lambda x: complex(L_rankin_selberg(f, g, x))
    pre_plus = np.exp(-2 * b * math.log(2) - (0.5 + 2 * b) * math.log(math.pi)) / 2
    pre_minus = np.exp(2 * b * math.log(2) - (0.5 - 2 * b) * math.log(math.pi)) / 2
    two_pi = np.exp((-2 + 4 * s) * _LOG_2PI)
    sin_s = np.sin(np.pi * s)

    first = (pre_plus * _local_euler(N, r1) * z(2 * s) * z(1 + 2 * b) / z(2 * s + 2 * b + 1)
             * L(s + 0.5 + b))
    third = (pre_minus * euler_phi(N) / complex(N) ** (1 + 2 * b) * z(2 * s) * z(1 - 2 * b)
             / z(2 * s - 2 * b + 1) * L(s + 0.5 - b))
    second = (pre_minus * two_pi / 4
              * (np.cos(np.pi * b) - np.cos(np.pi * (2 * s + b))) / (sin_s * np.sin(np.pi * (s + b)))
              * z(1 - 2 * b) * z(2 - 2 * s) / z(3 - 2 * s - 2 * b)
              * _cusp_weighted_P(f, g, s, -s + 1 - b, b) * L(1.5 - s - b))
    fourth = (pre_plus * two_pi / 4
              * (np.cos(np.pi * b) - np.cos(np.pi * (2 * s - b))) / (sin_s * np.sin(np.pi * (s - b)))
              * z(1 + 2 * b) * z(2 - 2 * s) / z(3 - 2 * s + 2 * b)
              * _cusp_weighted_P(f, g, s, -s + 1 + b, b) * L(1.5 - s + b))
    return (
        MainTermPiece(complex(first), b, b, 'plus'),
        MainTermPiece(complex(second), 1 - 2 * s - b, b, 'minus_s'),
        MainTermPiece(complex(third), -b, b, 'minus'),
        MainTermPiece(complex(fourth), 1 - 2 * s + b, b, 'plus_s'),
    )


class SecondMomentTerms:
    """
    Главный член второго момента в s = 1/2 - ir, r₁ = r как предел по η -> 0.

    При r != 0 берется s = 1/2 - ir + η; при r = 0 одновременно r₁ = η и
    s = 1/2 + η - iη. Все полюса отдельных слагаемых сокращаются в сумме, так что
    сумма аналитична по η, и предел находится экстраполяцией Ричардсона.
    Коэффициенты в каждом узле η вычисляются один раз.
    """

    def __init__(self, f: HoloForm, g: HoloForm, r: float, steps: Optional[Sequence[float]] = None):
        if f.weight != g.weight or f.level != g.level:
            raise DomainError("Second moment needs forms of equal weight and level.")
        self.f, self.g, self.r = f, g, float(r)
        self.steps = tuple(steps or active_config().LIMIT_STEPS)
        ir = 1j * self.r
        self.normalizer = complex((4 * math.pi) ** -0.5 * np.exp(-2 * ir * _LOG_2PI)
                                  * _local_euler(f.level, self.r))

    def point(self, eta: float) -> Tuple[complex, float]:
        if self.r == 0:
            return complex(0.5 + eta, -eta), eta
        return complex(0.5 + eta, -self.r), self.r

    def pieces(self, eta: float) -> Tuple[MainTermPiece, ...]:
        s, r1 = self.point(eta)
        return _main_term_pieces(self.f, self.g, s, r1)

    def limit(self, evaluate: Callable[[MainTermPiece], complex]) -> Tuple[complex, float]:
        """lim_{η->0} Σ_i evaluate(piece_i(η)), деленный на нормировку."""
        def combined(eta):
            return sum(piece.coefficient * evaluate(piece) for piece in self.pieces(eta))

        value, err = richardson_limit(combined, h=self.steps[0], levels=len(self.steps),
                                      rtol=LIMIT_RTOL)
        scale = abs(self.normalizer)
        return value / self.normalizer, err / scale


def second_moment_terms(f: HoloForm, g: HoloForm, r: float, N: Optional[int] = None,
                        steps: Optional[Sequence[float]] = None) -> SecondMomentTerms:
    """
    Разложение главного члена на четыре слагаемых coefficient·H(p, q).

    Raises:
        DomainError: если N задан и отличен от уровня форм.
    """
    if N is not None and N != f.level:
        raise DomainError(f"Level N={N} differs from form level {f.level}.")
    return SecondMomentTerms(f, g, r, steps)


def second_moment_kernel(f: HoloForm, g: HoloForm, r: float, t, N: Optional[int] = None,
                         terms: Optional[SecondMomentTerms] = None) -> np.ndarray:
    """
    Плотность K(t): нормированный главный член равен (1/π²)∫ h(t)·t·tanh(πt)·K(t) dt.
    """
    terms = terms or second_moment_terms(f, g, r, N)
    half_k = f.weight / 2
    out = []
    for x in np.atleast_1d(np.asarray(t, dtype=float)):
        it = 1j * x

        def density(piece, it=it):
            return complex(gamma_ratio(
                [half_k + piece.numer_shift + it, half_k + piece.numer_shift - it],
                [half_k + piece.denom_shift + it, half_k + piece.denom_shift - it]))

        out.append(terms.limit(density)[0])
    return np.array(out)


def second_moment_main(f: HoloForm, g: HoloForm, r: float, params: TestFunctionH,
                       N: Optional[int] = None, terms: Optional[SecondMomentTerms] = None,
                       full_output: bool = False):
    """
    Нормированный главный член второго момента
    ((4π)^{-1/2}(2π)^{-2ir}Π(1-p^{-1-2ir}))^{-1}·M(1/2-ir) при r₁ = r.

    Raises:
        LimitInstabilityError: если экстраполяция по η неустойчива.
    """
    terms = terms or second_moment_terms(f, g, r, N)
    k = f.weight

    def integral(piece):
        return shifted_h_integral(params, k, complex(piece.numer_shift), complex(piece.denom_shift))

    value, err = terms.limit(integral)
    logger.info("Second moment main term for %s x %s, r=%s: %s (err %.2e)",
                f.label, g.label, r, value, err)
    return (value, err) if full_output else value


KERNEL_BASIS = ('H4', 'H3', 'H2', 'H1', 'H10', 'H0', 'H01')


def kernel_structure(f: HoloForm, g: HoloForm, t_values: Optional[Sequence[float]] = None,
                     terms: Optional[SecondMomentTerms] = None) -> Dict[str, complex]:
    """
    Коэффициенты K(t) при r = 0 в базисе [S³, S², S, 1, S·S', S', S''],
    названные по соответствующим H-интегралам (S³ -> H4, ..., S'' -> H01).
    """
    terms = terms or second_moment_terms(f, g, 0.0)
    if terms.r != 0:
        raise DomainError("Kernel structure is defined at r = 0.")
    t = np.asarray(t_values if t_values is not None else np.linspace(1.0, 40.0, 24), dtype=float)
    if t.size < len(KERNEL_BASIS):
        raise DomainError(f"At least {len(KERNEL_BASIS)} points are needed for the fit.")
    k = f.weight
    S = _psi_sum(k, t).real
    S1 = _psi_sum(k, t, 1).real
    S2 = _psi_sum(k, t, 2).real
    basis = np.column_stack([S ** 3, S ** 2, S, np.ones_like(S), S * S1, S1, S2])
    norms = np.linalg.norm(basis, axis=0)
    values = second_moment_kernel(f, g, 0.0, t, terms=terms)
    coeffs, *_ = np.linalg.lstsq(basis / norms, values, rcond=None)
    return {name: complex(c / n) for name, c, n in zip(KERNEL_BASIS, coeffs, norms)}
