"""Точная арифметика: делительные суммы каспов, суммы Рамануджана, q-ряды."""
import csv
import logging
import math
import os
from fractions import Fraction
from numbers import Integral
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from sympy.functions.combinatorial.numbers import mobius as _mobius, totient
from sympy.ntheory import divisors as _divisors, factorint

from models import CuspContext, HoloForm, is_squarefree
from services.specfun import gamma_ratio, zeta
from utils.error_handlers import (
    CapacityError, ConvergenceError, DomainError, SchemaError, SingularFactorError)

logger = logging.getLogger(__name__)

Number = Union[Fraction, complex]


# ---- Целочисленные помощники ----

def prime_factors(n: int) -> List[int]:
    """Простые делители n по возрастанию."""
    return sorted(factorint(n)) if n > 1 else []


def divisors(n: int) -> List[int]:
    return list(_divisors(abs(n)))


def euler_phi(n: int) -> int:
    return int(totient(n))


def mobius(n: int) -> int:
    return int(_mobius(n))


def valuation(p: int, n: int) -> int:
    """Показатель α с p^α || n."""
    alpha = 0
    while n % p == 0:
        n //= p
        alpha += 1
    return alpha


def _integral_exponent(x) -> Optional[int]:
    if isinstance(x, Integral):
        return int(x)
    z = complex(x)
    if z.imag == 0 and z.real == round(z.real):
        return int(round(z.real))
    return None


# ---- Делительные суммы ----

def _coprime_divisor_sum(n: int, N: int, x, exact: bool) -> Number:
    total = Fraction(0) if exact else 0j
    for d in divisors(n):
        if math.gcd(d, N) == 1:
            total += Fraction(d) ** x if exact else complex(d) ** x
    return total


def sigma_cusp(cusp: CuspContext, x, n: int, exact: bool = False) -> Number:
    """
    σ^a_x(n) в напечатанной форме с множителем
    p^{x-1}/(1-p^x)·(p - p^{αx+1} - 1 + p^{(α+1)x}) для каждого p | a.

    При целом вещественном x и exact=True вычисление ведется в Fraction.

    Raises:
        DomainError: если n < 1.
        SingularFactorError: если 1 - p^x = 0 для некоторого p | a.
    """
    if n < 1:
        raise DomainError(f"sigma_cusp requires n >= 1, got {n}.")
    xi = _integral_exponent(x)
    exact = exact and xi is not None
    if exact:
        x = xi
    total = _coprime_divisor_sum(n, cusp.N, x, exact)
    for p in prime_factors(cusp.a):
        alpha = valuation(p, n)
        if exact:
            q = Fraction(p) ** x
            if q == 1:
                raise SingularFactorError(f"1 - {p}^x vanishes; use sigma_cusp_stable.")
            total *= (q / p) / (1 - q) * (p - p * q ** alpha - 1 + q ** (alpha + 1))
        else:
            q = complex(p) ** x
            if abs(1 - q) < 1e-14:
                raise SingularFactorError(f"1 - {p}^x vanishes; use sigma_cusp_stable.")
            total *= (q / p) / (1 - q) * (p - p * q ** alpha - 1 + q ** (alpha + 1))
    return total if exact else complex(total)


def _stable_local_factor(p: int, alpha: int, x, exact: bool) -> Number:
    # p^{x-1}(p·Σ_{i<α} q^i - Σ_{i≤α} q^i), q = p^x
    q = Fraction(p) ** x if exact else complex(p) ** x
    powers = [q ** i for i in range(alpha + 1)]
    head = sum(powers[:alpha], Fraction(0) if exact else 0j)
    return (q / p) * (p * head - (head + powers[alpha]))


def sigma_cusp_stable(cusp: CuspContext, x, n: int, exact: bool = False) -> Number:
    """σ^a_x(n) с геометрической формой локальных множителей; конечна при p^x = 1."""
    if n < 1:
        raise DomainError(f"sigma_cusp_stable requires n >= 1, got {n}.")
    xi = _integral_exponent(x)
    exact = exact and xi is not None
    if exact:
        x = xi
    total = _coprime_divisor_sum(n, cusp.N, x, exact)
    for p in prime_factors(cusp.a):
        total *= _stable_local_factor(p, valuation(p, n), x, exact)
    return total if exact else complex(total)


def sigma_N_limit(r: float, n: int, N: int) -> complex:
    """σ^N_{-2ir}(n); при r = 0 множители берутся в предельной форме."""
    return sigma_cusp_stable(CuspContext(N, N), -2j * r, n)


def sigma_N_table(r: float, n_max: int, N: int) -> np.ndarray:
    """Массив σ^N_{-2ir}(n) для 0 <= n <= n_max (элемент 0 равен нулю)."""
    out = np.zeros(n_max + 1, dtype=complex)
    for n in range(1, n_max + 1):
        out[n] = sigma_N_limit(r, n, N)
    return out


# ---- Коэффициенты ρ_{1/a}(s, n) ----

def _euler_correction(N: int, s) -> complex:
    prod = 1.0 + 0j
    for p in prime_factors(N):
        prod *= 1 - complex(p) ** (-2 * s)
    return prod


def _ramanujan_sum(q: int, n: int) -> float:
    delta = np.arange(1, q + 1)
    units = delta[np.gcd(delta, q) == 1]
    if n == 0:
        return float(units.size)
    return float(np.cos(2 * np.pi * ((n * units) % q) / q).sum())


def ramanujan_rho_bruteforce(cusp: CuspContext, s, n: int, gamma_max: Optional[int] = None,
                             full_output: bool = False):
    """
    Прямое суммирование ρ_{1/a}(s, n) по γ <= gamma_max и вычетам δ mod γa.

    Для n = 0 к частичной сумме добавляется плотностная поправка хвоста
    C·Γ^{2-2s}/(2s-2). Возвращает значение (и границу хвоста при full_output=True).

    Raises:
        ConvergenceError: если Re(s) <= 1.
    """
    s = complex(s)
    if s.real <= 1:
        raise ConvergenceError(f"Ramanujan double sum needs Re(s) > 1, got {s}.")
    if gamma_max is None:
        from config import active_config
        gamma_max = active_config().GAMMA_MAX
    if gamma_max < 1:
        raise DomainError("gamma_max must be at least 1.")
    a, N, M = cusp.a, cusp.N, cusp.width
    sigma = s.real

    total = 0j
    for g in range(1, gamma_max + 1):
        if math.gcd(g, M) != 1:
            continue
        total += complex(g) ** (-2 * s) * _ramanujan_sum(g * a, n)

    if n == 0:
        density = euler_phi(a)
        for p in prime_factors(M):
            density *= 1 - 1 / p
        density /= complex(zeta(2.0)) * _euler_correction(N, 1.0)
        total += density * complex(gamma_max) ** (2 - 2 * s) / (2 * s - 2)
        bound = (a * (math.log(gamma_max) + 2) * gamma_max ** (1 - 2 * sigma)
                 * (1 + 2 * abs(s) / (2 * sigma - 1)))
    else:
        bound = abs(n) * gamma_max ** (1 - 2 * sigma) / (2 * sigma - 1)

    scale = complex(a * N) ** (-s)
    value = scale * total
    bound *= abs(scale)
    logger.debug("ramanujan_rho_bruteforce a=%s N=%s n=%s gamma_max=%s bound=%.3e",
                 a, N, n, gamma_max, bound)
    return (value, bound) if full_output else value


def rho_closed(cusp: CuspContext, s, n: int) -> complex:
    """
    ρ_{1/a}(s, n) по замкнутым формулам.

    n != 0: (N/a)^{-s} σ^a_{1-2s}(|n|) / (ζ(2s)·Π_{p|N}(1 - p^{-2s})).
    n = 0: ζ(2s-1)·Π_{p|N/a}(1 - p^{1-2s})·φ(a)·(aN)^{-s} / (ζ(2s)·Π_{p|N}(1 - p^{-2s})).
    """
    s = complex(s)
    denom = complex(zeta(2 * s)) * _euler_correction(cusp.N, s)
    if denom == 0:
        raise DomainError("rho_closed: vanishing denominator.")
    if n != 0:
        sig = sigma_cusp_stable(cusp, 1 - 2 * s, abs(n))
        return complex(cusp.width) ** (-s) * sig / denom
    num = complex(zeta(2 * s - 1)) * euler_phi(cusp.a) * complex(cusp.a * cusp.N) ** (-s)
    for p in prime_factors(cusp.width):
        num *= 1 - complex(p) ** (1 - 2 * s)
    return num / denom


def tau_from_rho(s, n: int, rho: complex) -> complex:
    """τ(s, 0) = √π Γ(s-1/2)/Γ(s)·ρ(s, 0); τ(s, n) = 2π^s ρ(s, n)|n|^{s-1/2}/Γ(s)."""
    s = complex(s)
    if n == 0:
        return math.sqrt(math.pi) * complex(gamma_ratio([s - 0.5], [s])) * rho
    return 2 * complex(math.pi) ** s * rho * complex(abs(n)) ** (s - 0.5) * complex(gamma_ratio([], [s]))


# ---- q-ряды ----

def _sigma1_table(n_max: int) -> np.ndarray:
    out = np.zeros(n_max + 1, dtype=np.int64)
    for d in range(1, n_max + 1):
        out[d::d] += d
    return out


def eta_power_series(exponents: Dict[int, int], n_max: int) -> List[int]:
    """
    Точные коэффициенты q-разложения Π_d η(dz)^{e_d} до q^{n_max}.

    Используется логарифмическая производная: q·P'/P = Σ_j c_j q^j,
    c_j = -Σ_{d|j} e_d·d·σ₁(j/d), и P_n = (1/n)·Σ_j c_j P_{n-j}.

    Raises:
        DomainError: если Σ d·e_d не делится на 24.
    """
    weight_sum = sum(d * e for d, e in exponents.items())
    if weight_sum % 24:
        raise DomainError("Eta quotient must have an integral q-order (sum d*e_d divisible by 24).")
    shift = weight_sum // 24
    if shift < 0:
        raise DomainError("Eta quotient has a pole at the cusp.")
    length = max(n_max - shift, 0)
    sigma1 = _sigma1_table(length)
    c = np.zeros(length + 1, dtype=object)
    for d, e in exponents.items():
        for m in range(1, length // d + 1):
            c[d * m] -= e * d * int(sigma1[m])
    series = np.zeros(length + 1, dtype=object)
    series[0] = 1
    for n in range(1, length + 1):
        acc = np.dot(c[1:n + 1], series[n - 1::-1])
        if acc % n:
            raise ArithmeticError("Non-integral coefficient in eta product.")
        series[n] = acc // n
    out = [0] * (n_max + 1)
    for n in range(length + 1):
        out[n + shift] = int(series[n])
    return out


def delta_coefficients(n_max: int) -> List[int]:
    """
    τ(n) для Δ = q·Π(1 - q^n)^24, 0 <= n <= n_max (τ(0) = 0).

    Raises:
        CapacityError: если n_max больше DELTA_TABLE_LIMIT.
    """
    from config import active_config
    limit = active_config().DELTA_TABLE_LIMIT
    if n_max < 1:
        raise DomainError("n_max must be at least 1.")
    if n_max > limit:
        raise CapacityError(f"Requested {n_max} coefficients, limit is {limit}.")
    return eta_power_series({1: 24}, n_max)


def check_multiplicativity(coeffs: Sequence[int]) -> List[tuple]:
    """Пары (m, n), gcd = 1, m·n <= n_max, для которых a(mn) != a(m)a(n)."""
    n_max = len(coeffs) - 1
    bad = []
    for m in range(2, int(math.isqrt(n_max)) + 1):
        for n in range(m + 1, n_max // m + 1):
            if math.gcd(m, n) == 1 and coeffs[m * n] != coeffs[m] * coeffs[n]:
                bad.append((m, n))
    return bad


def holoform_from_coefficients(coeffs: Sequence[int], weight: int, level: int,
                               label: str = '') -> HoloForm:
    """Проверяет a(1) = 1 и мультипликативность и строит HoloForm."""
    coeffs = tuple(int(c) for c in coeffs)
    if len(coeffs) < 2 or coeffs[1] != 1:
        raise DomainError("Newform must satisfy a(1) = 1.")
    bad = check_multiplicativity(coeffs)
    if bad:
        raise DomainError(f"Coefficient table is not multiplicative at {bad[:5]}.")
    return HoloForm(weight=weight, level=level, coeffs=coeffs, label=label)


def eta_product_form(exponents: Dict[int, int], level: int, n_max: int, label: str = '') -> HoloForm:
    """Новая форма, заданная эта-произведением (вес Σe_d/2)."""
    weight = sum(exponents.values()) // 2
    return holoform_from_coefficients(eta_power_series(exponents, n_max), weight, level,
                                      label or f"eta{sorted(exponents.items())}")


def save_holoform(form: HoloForm, path: str) -> None:
    """Пишет таблицу коэффициентов в CSV `n,a_n` с заголовком n_max/weight/level."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as fh:
        fh.write(f"# n_max={form.n_max}\n# weight={form.weight}\n# level={form.level}\n")
        fh.write(f"# label={form.label}\n")
        writer = csv.writer(fh)
        writer.writerow(['n', 'a_n'])
        for n in range(1, form.n_max + 1):
            writer.writerow([n, form.coeffs[n]])


def load_holoform(path: str) -> HoloForm:
    """
    Читает таблицу, записанную save_holoform.

    Raises:
        SchemaError: если заголовок или строки не соответствуют формату.
    """
    meta = {}
    rows = []
    with open(path, encoding='utf-8') as fh:
        for line in fh:
            if line.startswith('#'):
                key, _, value = line[1:].strip().partition('=')
                meta[key.strip()] = value.strip()
            else:
                rows.append(line)
    try:
        n_max = int(meta['n_max'])
        weight = int(meta['weight'])
        level = int(meta['level'])
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"{path}: missing or malformed header ({exc}).")
    reader = csv.DictReader(rows)
    if reader.fieldnames != ['n', 'a_n']:
        raise SchemaError(f"{path}: expected columns n,a_n.")
    coeffs = [0] * (n_max + 1)
    for row in reader:
        try:
            n = int(row['n'])
            coeffs[n] = int(row['a_n'])
        except (ValueError, IndexError, TypeError):
            raise SchemaError(f"{path}: bad row {row}.")
    return holoform_from_coefficients(coeffs, weight, level, meta.get('label', ''))


def delta_form(n_max: int = 2000, cache_dir: Optional[str] = None) -> HoloForm:
    """Δ как HoloForm; таблица кэшируется в MOMENTLAB_CACHE_DIR."""
    if cache_dir is None:
        from config import active_config
        cache_dir = active_config().MOMENTLAB_CACHE_DIR
    path = os.path.join(cache_dir, 'delta.csv')
    if os.path.exists(path):
        try:
            cached = load_holoform(path)
            if cached.n_max >= n_max:
                return HoloForm(12, 1, cached.coeffs[:n_max + 1], 'Delta')
        except (SchemaError, DomainError) as exc:
            logger.warning("Ignoring corrupt coefficient cache %s: %s", path, exc)
    form = HoloForm(12, 1, tuple(delta_coefficients(n_max)), 'Delta')
    try:
        save_holoform(form, path)
    except OSError as exc:
        logger.warning("Could not write coefficient cache %s: %s", path, exc)
    return form

