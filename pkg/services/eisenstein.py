"""Ряды Эйзенштейна E_{1/a}(z, s) для Γ₀(N): прямая сумма по смежным классам
и разложение Фурье, а также поднятый ряд E_N^{(k)}(z, 1/2 + ir)."""
import logging
import math
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from scipy import special

from config import active_config
from models import CosetList, CuspContext, UpperHalfPoint
from services.arithmetic import (
    euler_phi, prime_factors, rho_closed, sigma_cusp_stable, sigma_N_table, tau_from_rho)
from services.specfun import (
    EPS, bessel_k_any, gamma_ratio, richardson_limit, whittaker_w, zeta, zeta_star)
from utils.error_handlers import CapacityError, ConvergenceError, DomainError

logger = logging.getLogger(__name__)

# Прямая сумма надежна только правее этой границы
DIRECT_MIN_SIGMA = 1.3
_TAIL_SERIES_TERMS = 16


def default_n_max(y: float) -> int:
    return int(math.ceil(10.0 / y)) + 5


def _check_height(z: UpperHalfPoint) -> None:
    min_y = active_config().FOURIER_MIN_Y
    if z.y < min_y:
        raise DomainError(
            f"Fourier expansion needs y >= {min_y}, got y={z.y}; move z into a fundamental domain.")


# ---- Смежные классы ----

def coset_classes(cusp: CuspContext, c_max: int) -> List[Tuple[int, np.ndarray]]:
    """
    Нижние строки σ_{1/a}^{-1}γ, сгруппированные по c: пары (c, вычеты d mod c)
    с a | c, gcd(c, N/a) = 1 и gcd(c, d) = 1, 1 <= c <= c_max.
    """
    a, m = cusp.a, cusp.width
    out = []
    for c in range(a, c_max + 1, a):
        if math.gcd(c, m) != 1:
            continue
        d = np.arange(c)
        out.append((c, d[np.gcd(d, c) == 1]))
    return out


def _complete(cusp: CuspContext, c: int, d: int) -> np.ndarray:
    """Матрица γ ∈ Γ₀(N), у которой σ^{-1}γ имеет нижнюю строку (c, d)."""
    a, m, N = cusp.a, cusp.width, cusp.N
    if c == 0:
        A, B = 1, 0
    else:
        _, u, v = _egcd(d, c)
        A, B = u, -v
        if m > 1:
            k = ((-c * pow(a, -1, m) - A) * pow(c, -1, m)) % m
            A, B = A + k * c, B + k * d
    gamma = np.array([[A, B], [a * A + c, a * B + d]], dtype=np.int64)
    if gamma[1, 0] % N:
        raise ArithmeticError(f"Completion of ({c}, {d}) left Γ₀({N}).")
    return gamma


def _egcd(x: int, y: int) -> Tuple[int, int, int]:
    """(g, u, v) с u·x + v·y = g."""
    u0, v0, u1, v1 = 1, 0, 0, 1
    while y:
        q = x // y
        x, y = y, x - q * y
        u0, u1 = u1, u0 - q * u1
        v0, v1 = v1, v0 - q * v1
    if x < 0:
        return -x, -u0, -v0
    return x, u0, v0


@lru_cache(maxsize=64)
def _coset_matrices(a: int, N: int, height_bound: float, x: float, y: float) -> np.ndarray:
    cusp = CuspContext(a, N)
    m = cusp.width
    limit = active_config().COSET_LIMIT
    reach = y / (m * height_bound)
    rows = []
    if m == 1 and y >= height_bound:
        rows.append((0, 1))
    c_top = int(math.floor(math.sqrt(reach) / y)) if reach > 0 else 0
    for c in range(a, c_top + 1, a):
        if math.gcd(c, m) != 1:
            continue
        spread = reach - (c * y) ** 2
        if spread < 0:
            continue
        r = math.sqrt(spread)
        for d in range(int(math.ceil(-c * x - r)), int(math.floor(-c * x + r)) + 1):
            if math.gcd(c, d) == 1:
                rows.append((c, d))
        if len(rows) > limit:
            raise CapacityError(f"More than {limit} coset representatives requested.")
    mats = np.array([_complete(cusp, c, d) for c, d in rows], dtype=np.int64).reshape(-1, 2, 2)
    mats.setflags(write=False)
    return mats


def coset_reps(cusp: CuspContext, height_bound: float,
               z: Optional[UpperHalfPoint] = None) -> CosetList:
    """
    Представители Γ_{1/a}\\Γ₀(N), для которых Im(σ_{1/a}^{-1}γz) >= height_bound.

    Нижняя строка σ^{-1}γ пробегает взаимно простые (c, d) с a | c,
    gcd(c, N/a) = 1, c > 0 (или c = 0 при a = N); знак фиксирован.

    Raises:
        DomainError: если height_bound <= 0.
        CapacityError: если число представителей больше COSET_LIMIT.
    """
    if not height_bound > 0:
        raise DomainError("height_bound must be positive.")
    z = z or UpperHalfPoint(0.0, 1.0)
    mats = _coset_matrices(cusp.a, cusp.N, float(height_bound), z.x, z.y)
    return CosetList(cusp=cusp, matrices=mats, height_bound=float(height_bound))


def gamma0_coset_reps(N: int) -> List[np.ndarray]:
    """
    Представители Γ₀(N)\\SL₂(ℤ) по точкам P¹(ℤ/N); их N·Π(1 + 1/p).
    """
    if N == 1:
        return [np.eye(2, dtype=np.int64)]
    seen = set()
    reps = []
    units = [u for u in range(1, N) if math.gcd(u, N) == 1]
    for c in range(N):
        for d in range(N):
            if math.gcd(math.gcd(c, d), N) != 1:
                continue
            key = min(((u * c) % N, (u * d) % N) for u in units)
            if key in seen:
                continue
            seen.add(key)
            cc, dd = (c, d) if c else (N, d)
            while math.gcd(cc, dd) != 1:
                dd += N
            _, u, v = _egcd(dd, cc)
            reps.append(np.array([[u, -v], [cc, dd]], dtype=np.int64))
    expected = N
    for p in prime_factors(N):
        expected = expected * (p + 1) // p
    if len(reps) != expected:
        raise ArithmeticError(f"Found {len(reps)} cosets of Γ₀({N}), expected {expected}.")
    return reps


# ---- Прямая сумма ----

def _line_integral_tail(V: np.ndarray, y: float, s: complex) -> np.ndarray:
    """∫_V^∞ (w² + y²)^{-s} dw разложением по (y/V)²."""
    total = np.zeros(V.shape, dtype=complex)
    coeff = 1.0 + 0j
    for k in range(_TAIL_SERIES_TERMS):
        if k:
            coeff *= (-s - k + 1) / k
        total += coeff * y ** (2 * k) * np.exp((1 - 2 * s - 2 * k) * np.log(V)) / (2 * s + 2 * k - 1)
    return total


def _em_tail(V: np.ndarray, y: float, s: complex) -> Tuple[np.ndarray, np.ndarray]:
    """Σ_{j>=0} G(V + 1/2 + j) для G(w) = (w² + y²)^{-s} по формуле Эйлера-Маклорена."""
    Q = V ** 2 + y ** 2
    logQ = np.log(Q)
    d1 = -2 * s * V * np.exp((-s - 1) * logQ)
    d3 = (12 * s * (s + 1) * V * np.exp((-s - 2) * logQ)
          - 8 * s * (s + 1) * (s + 2) * V ** 3 * np.exp((-s - 3) * logQ))
    last = 7 * d3 / 5760
    return _line_integral_tail(V, y, s) + d1 / 24 - last, np.abs(last)


def _fourier_weight_bound(y: float, s: complex, n: np.ndarray) -> np.ndarray:
    """|Ĝ(n)| <= 2π^σ n^{σ-1/2} y^{1/2-σ} K_{σ-1/2}(2πny)/|Γ(s)|."""
    sigma = s.real
    inv_gamma = abs(complex(gamma_ratio([], [s])))
    return (2 * math.pi ** sigma * n ** (sigma - 0.5) * y ** (0.5 - sigma)
            * special.kv(sigma - 0.5, 2 * math.pi * n * y) * inv_gamma)


def eisenstein_direct(cusp: CuspContext, z: UpperHalfPoint, s, c_max: Optional[int] = None,
                      full_output: bool = False):
    """
    E_{1/a}(z, s) как сумма Im(σ_{1/a}^{-1}γz)^s по смежным классам.

    Слагаемые с c <= c_max суммируются явно: по d в каждом классе вычетов
    mod c: окно |j| <= J и хвосты Эйлера-Маклорена. Постоянная мода
    хвоста c > c_max добавляется точно через ρ(s, 0); остальные моды
    оцениваются сверху.

    Returns:
        Значение (и оценку ошибки при full_output=True).

    Raises:
        ConvergenceError: если Re(s) < 1.3.
    """
    s = complex(s)
    if s.real < DIRECT_MIN_SIGMA:
        raise ConvergenceError(f"Direct coset sum needs Re(s) >= {DIRECT_MIN_SIGMA}, got {s}.")
    if c_max is None:
        c_max = active_config().EISENSTEIN_C_MAX
    a, m, N = cusp.a, cusp.width, cusp.N
    x, y = z.x - math.floor(z.x), z.y
    J = max(20, int(math.ceil(4 * y)) + 8)
    j = np.arange(-J, J + 1, dtype=float)

    classes = coset_classes(cusp, c_max)
    cs = np.concatenate([np.full(len(units), c, dtype=float) for c, units in classes])
    us = x + np.concatenate([units / c for c, units in classes])
    weights = np.exp(-2 * s * np.log(cs))

    # класс единицы у каспа ∞ дает (y/m)^s после умножения на scale
    total = 1 + 0j if cusp.is_infinity else 0j
    em_err = 0.0
    chunk = max(1, 400_000 // j.size)
    for start in range(0, us.size, chunk):
        u = us[start:start + chunk]
        w = u[:, None] + j[None, :]
        window = np.exp(-s * np.log(w ** 2 + y ** 2)).sum(axis=1)
        right, err_r = _em_tail(J + 0.5 + u, y, s)
        left, err_l = _em_tail(J + 0.5 - u, y, s)
        wt = weights[start:start + chunk]
        total += complex(np.dot(wt, window + right + left))
        em_err += float(np.dot(np.abs(wt), err_r + err_l))

    scale = complex(y / m) ** s
    total *= scale
    em_err *= abs(scale)

    # постоянная мода по c > c_max
    full_const = complex(a) ** (-2 * s) * complex(a * N) ** s * rho_closed(cusp, s, 0)
    partial_const = complex(weights.sum())
    line_integral = math.sqrt(math.pi) * complex(gamma_ratio([s - 0.5], [s])) * complex(y) ** (1 - 2 * s)
    total += scale * line_integral * (full_const - partial_const)

    n = np.arange(1, 4 * default_n_max(y) + 1, dtype=float)
    mode_sum = 2 * float(np.sum(_fourier_weight_bound(y, s, n) * n))
    tail = (y / m) ** s.real * mode_sum * c_max ** (1 - 2 * s.real) / (2 * s.real - 1)
    bound = tail + em_err + 64 * EPS * abs(total)
    logger.debug("eisenstein_direct a=%s N=%s z=%s s=%s classes=%s bound=%.3e",
                 a, N, z.z, s, us.size, bound)
    return (total, bound) if full_output else total


# ---- Разложение Фурье ----

def tau_coefficient(cusp: CuspContext, s, n: int) -> complex:
    """τ_{1/a}(s, n) через замкнутую форму ρ_{1/a}(s, n)."""
    s = complex(s)
    return tau_from_rho(s, n, rho_closed(cusp, s, n))


def constant_term(cusp: CuspContext, s, y: float) -> complex:
    """δ_{a,N}·y^s + τ(s, 0)·y^{1-s}."""
    s = complex(s)
    value = tau_coefficient(cusp, s, 0) * complex(y) ** (1 - s)
    if cusp.is_infinity:
        value += complex(y) ** s
    return value


def eisenstein_fourier_coefficients(cusp: CuspContext, s, n_max: int) -> np.ndarray:
    """Массив τ(s, n) для -n_max <= n <= n_max; индекс n + n_max."""
    s = complex(s)
    half = np.array([tau_coefficient(cusp, s, n) for n in range(1, n_max + 1)], dtype=complex)
    return np.concatenate([half[::-1], [tau_coefficient(cusp, s, 0)], half])


def _tau_modulus_bound(cusp: CuspContext, s: complex, n: np.ndarray) -> np.ndarray:
    denom = abs(complex(zeta(2 * s)))
    for p in prime_factors(cusp.N):
        denom *= abs(1 - complex(p) ** (-2 * s))
    sig = np.array([abs(sigma_cusp_stable(cusp, 1 - 2 * s, int(k))) for k in n])
    inv_gamma = abs(complex(gamma_ratio([], [s])))
    return (2 * math.pi ** s.real * cusp.width ** (-s.real) * sig / denom
            * n ** (s.real - 0.5) * inv_gamma)


def eisenstein_fourier(cusp: CuspContext, z: UpperHalfPoint, s, n_max: Optional[int] = None,
                       full_output: bool = False):
    """
    E_{1/a}(z, s) = δ·y^s + τ(s,0)·y^{1-s} + Σ_{n≠0} τ(s,n)·√y·K_{s-1/2}(2π|n|y)·e(nx).

    Returns:
        Значение (и оценку хвоста при full_output=True).

    Raises:
        DomainError: если y < FOURIER_MIN_Y.
    """
    s = complex(s)
    _check_height(z)
    x, y = z.x, z.y
    if n_max is None:
        n_max = default_n_max(y)
    value = constant_term(cusp, s, y)
    n = np.arange(1, n_max + 1, dtype=float)
    tau = eisenstein_fourier_coefficients(cusp, s, n_max)[n_max + 1:]
    kv, kv_err = bessel_k_any(s - 0.5, 2 * math.pi * n * y, full_output=True)
    value += complex(np.sum(tau * math.sqrt(y) * kv * 2 * np.cos(2 * math.pi * n * x)))

    far = np.arange(n_max + 1, n_max + 41, dtype=float)
    tail_terms = (2 * _tau_modulus_bound(cusp, s, far) * math.sqrt(y)
                  * special.kv(s.real - 0.5, 2 * math.pi * far * y))
    ratio = math.exp(-2 * math.pi * y)
    bound = (float(tail_terms.sum()) + float(tail_terms[-1]) * ratio / (1 - ratio)
             + 2 * math.sqrt(y) * float(np.sum(np.abs(tau) * kv_err)) + 64 * EPS * abs(value))
    return (value, bound) if full_output else value


# ---- Поднятый ряд E_N^{(k)} ----

def _raised_constant_parts(r: float, k: int, N: int) -> Tuple[complex, complex]:
    """Множители A(r), B(r) при y^{1/2+ir} и y^{1/2-ir}."""
    sign = (-1) ** (k // 2)
    ir = 1j * r
    local = 1.0 + 0j
    for p in prime_factors(N):
        local *= 1 - complex(p) ** (-1 - 2 * ir)
    first = (complex(zeta_star(1 + 2 * ir)) * local
             * complex(gamma_ratio([ir + (1 + k) / 2], [ir + 0.5])))
    second = (complex(zeta_star(2 * ir)) * euler_phi(N) * complex(N) ** (-1 - 2 * ir)
              * complex(gamma_ratio([-ir + (1 + k) / 2], [0.5 - ir])))
    return sign * first, sign * second


def raised_constant_term(r: float, k: int, N: int, y):
    """
    Постоянный член E_N^{(k)}(z, 1/2+ir) как функция y (скаляр или массив).

    При r = 0 полюса ζ*(1+2ir) и ζ*(2ir) сокращаются; предел равен
    √y·(C + 2i·a·log y), где a = lim r·A(r), C = lim (A(r) + B(r)).
    """
    y = np.asarray(y, dtype=float)
    if abs(r) < 1e-6:
        a, _ = richardson_limit(lambda e: e * _raised_constant_parts(e, k, N)[0], levels=4)
        c, _ = richardson_limit(lambda e: sum(_raised_constant_parts(e, k, N)), levels=4)
        value = np.sqrt(y) * (c + 2j * a * np.log(y))
    else:
        A, B = _raised_constant_parts(r, k, N)
        value = A * np.exp((0.5 + 1j * r) * np.log(y)) + B * np.exp((0.5 - 1j * r) * np.log(y))
    return complex(value) if value.ndim == 0 else value


def raised_eisenstein_coefficients(r: float, k: int, N: int, n_max: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Коэффициенты при W_{k/2,ir}(4πny)e(nx) (n >= 1) и W_{-k/2,ir}(4πny)e(-nx).

    Returns:
        Пара массивов длины n_max + 1 (индекс n, элемент 0 равен нулю).
    """
    if k < 0 or k % 2:
        raise DomainError(f"Weight k must be a non-negative even integer, got {k}.")
    n = np.arange(n_max + 1, dtype=float)
    n[0] = 1.0
    positive = sigma_N_table(r, n_max, N) * np.exp(1j * r * np.log(n)) / np.sqrt(n)
    positive[0] = 0
    ratio = complex(gamma_ratio([1j * r + (k + 1) / 2], [1j * r + (1 - k) / 2]))
    return positive, ratio * positive


def raised_eisenstein_values(r: float, k: int, N: int, z, n_max: Optional[int] = None,
                             full_output: bool = False):
    """
    E_N^{(k)}(z, 1/2+ir) для массива комплексных z по разложению Фурье
    с функциями Уиттекера W_{±k/2, ir}.

    Raises:
        DomainError: если min Im z < FOURIER_MIN_Y или k не четно.
    """
    CuspContext(N, N)  # проверка уровня
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    x, y = z.real, z.imag
    y_min = float(np.min(y))
    _check_height(UpperHalfPoint(0.0, y_min))
    if n_max is None:
        n_max = default_n_max(y_min)
    pos, neg = raised_eisenstein_coefficients(r, k, N, n_max + 10)
    n = np.arange(1, n_max + 11, dtype=float)[:, None]
    arg = 4 * math.pi * n * y[None, :]
    w_plus, err_plus = whittaker_w(k // 2, 1j * r, arg, full_output=True)
    w_minus, err_minus = whittaker_w(-(k // 2), 1j * r, arg, full_output=True)
    phase = np.exp(2j * math.pi * n * x[None, :])
    terms = pos[1:, None] * w_plus * phase + neg[1:, None] * w_minus * np.conj(phase)
    value = raised_constant_term(r, k, N, y) + terms[:n_max].sum(axis=0)
    bound = (np.abs(terms[n_max:]).sum(axis=0)
             + (np.abs(pos[1:n_max + 1, None]) * err_plus[:n_max]
                + np.abs(neg[1:n_max + 1, None]) * err_minus[:n_max]).sum(axis=0)
             + 64 * EPS * np.abs(value))
    logger.debug("raised_eisenstein_values r=%s k=%s N=%s points=%s n_max=%s",
                 r, k, N, z.size, n_max)
    return (value, bound) if full_output else value


def raised_eisenstein_fourier(r: float, k: int, N: int, z: UpperHalfPoint,
                              n_max: Optional[int] = None, full_output: bool = False):
    """E_N^{(k)}(z, 1/2+ir) в одной точке; см. raised_eisenstein_values."""
    value, bound = raised_eisenstein_values(r, k, N, [z.z], n_max, full_output=True)
    value, bound = complex(value[0]), float(bound[0])
    return (value, bound) if full_output else value
