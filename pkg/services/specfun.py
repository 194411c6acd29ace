"""Специальные функции комплексного аргумента.

Все функции векторизованы по numpy и принимают full_output=True,
тогда возвращается пара (значение, оценка ошибки).
"""
import logging

import numpy as np
from scipy import special

from utils.error_handlers import (
    DomainError, LimitInstabilityError, PoleError)

logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps
EULER_GAMMA = float(np.euler_gamma)

# Число поправок Бернулли в асимптотиках
_BERNOULLI_TERMS = 10
_BERNOULLI = special.bernoulli(2 * _BERNOULLI_TERMS + 2)
_ZETA_TERMS = 8


def _complex_input(z):
    arr = np.asarray(z, dtype=complex)
    return arr, arr.ndim == 0


def _finish(value, err, scalar, full_output):
    if scalar:
        value = complex(np.asarray(value).reshape(()))
        err = float(np.asarray(err).reshape(()))
    if full_output:
        return value, err
    return value


def _at_nonpositive_integer(z):
    return (z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))


def log_gamma(z, full_output=False):
    """
    Главная ветвь log Γ(z).

    Args:
        z: Комплексное число или массив.
        full_output: Вернуть также оценку ошибки.

    Returns:
        log Γ(z) (и оценку ошибки при full_output=True).
    """
    z, scalar = _complex_input(z)
    if np.any(_at_nonpositive_integer(z)):
        raise PoleError("log_gamma has a pole at a non-positive integer.")
    value = special.loggamma(z)
    err = 8 * EPS * np.maximum(1.0, np.abs(value))
    return _finish(value, err, scalar, full_output)


def gamma(z, full_output=False):
    """Γ(z) как exp(log Γ(z))."""
    z, scalar = _complex_input(z)
    lg, lg_err = log_gamma(z, full_output=True) if scalar else (log_gamma(z), 8 * EPS)
    value = np.exp(lg)
    err = np.abs(value) * (lg_err + 8 * EPS * np.abs(lg))
    return _finish(value, err, scalar, full_output)


def gamma_ratio(numer, denom=(), full_output=False):
    """
    Произведение Γ(numer_i) / произведение Γ(denom_j), собранное в лог-пространстве.

    Полюс в знаменателе дает нулевой множитель 1/Γ; полюс в числителе вызывает PoleError.
    """
    numer = [np.asarray(a, dtype=complex) for a in numer]
    denom = [np.asarray(b, dtype=complex) for b in denom]
    shapes = [a.shape for a in numer + denom]
    scalar = all(len(s) == 0 for s in shapes)
    shape = np.broadcast_shapes(*shapes) if shapes else ()

    total = np.zeros(shape, dtype=complex)
    zero = np.zeros(shape, dtype=bool)
    for a in numer:
        if np.any(_at_nonpositive_integer(a)):
            raise PoleError("gamma_ratio: numerator argument at a gamma pole.")
        total = total + special.loggamma(a)
    for b in denom:
        pole = np.broadcast_to(_at_nonpositive_integer(b), shape)
        safe = np.where(pole, 1.0, b)
        total = total - special.loggamma(safe)
        zero = zero | pole
    value = np.where(zero, 0.0, np.exp(total))
    err = 8 * EPS * np.abs(value) * (1 + np.abs(total)) * max(1, len(numer) + len(denom))
    return _finish(value, err, scalar, full_output)


def _polygamma_asymptotic(z, order):
    """ψ^(order)(z) для order >= 1 через сдвиг и ряд Стирлинга."""
    shift = int(max(0.0, np.ceil(15.0 - np.min(z.real)))) if z.size else 0
    sign = (-1.0) ** (order + 1)
    fact = float(special.factorial(order))
    acc = np.zeros_like(z)
    for k in range(shift):
        acc = acc + 1.0 / (z + k) ** (order + 1)
    w = z + shift
    series = special.factorial(order - 1) / w ** order + fact / (2 * w ** (order + 1))
    last = np.zeros_like(w)
    for j in range(1, _BERNOULLI_TERMS + 1):
        coef = _BERNOULLI[2 * j] * special.factorial(2 * j + order - 1) / special.factorial(2 * j)
        last = coef / w ** (2 * j + order)
        series = series + last
    value = sign * (series + fact * acc)
    err = np.abs(last) + 8 * EPS * np.abs(value)
    return value, err


def digamma(z, order=0, full_output=False):
    """
    ψ(z) и производные ψ′, ψ″.

    Args:
        z: Комплексное число или массив.
        order: 0, 1 или 2.
    """
    if order not in (0, 1, 2):
        raise DomainError(f"digamma order must be 0, 1 or 2, got {order}.")
    z, scalar = _complex_input(z)
    if np.any(_at_nonpositive_integer(z)):
        raise PoleError("digamma has a pole at a non-positive integer.")
    if order == 0:
        value = special.psi(z)
        err = 8 * EPS * np.maximum(1.0, np.abs(value))
    else:
        flat = np.atleast_1d(z)
        value, err = _polygamma_asymptotic(flat, order)
        value = value.reshape(z.shape)
        err = err.reshape(z.shape)
    return _finish(value, err, scalar, full_output)


def _zeta_em(s):
    """Эйлер–Маклорен для Re s > 0, s != 1 (одномерный массив)."""
    values = np.empty_like(s)
    errs = np.empty(s.shape)
    # блоки, чтобы матрица n^{-s} оставалась умеренной
    order = np.argsort(np.abs(s.imag))
    for start in range(0, len(s), 256):
        idx = order[start:start + 256]
        block = s[idx]
        cutoff = int(10 * (1 + np.max(np.abs(block.imag)))) + 10
        n = np.arange(1, cutoff, dtype=float)
        head = np.exp(-np.outer(block, np.log(n))).sum(axis=1)
        Nf = float(cutoff)
        total = head + Nf ** (1 - block) / (block - 1) + 0.5 * Nf ** (-block)
        rising = block.copy()
        term = np.zeros_like(block)
        for j in range(1, _ZETA_TERMS + 2):
            if j > 1:
                rising = rising * (block + 2 * j - 3) * (block + 2 * j - 2)
            term = (_BERNOULLI[2 * j] / special.factorial(2 * j)) * rising * Nf ** (-block - 2 * j + 1)
            if j <= _ZETA_TERMS:
                total = total + term
        values[idx] = total
        errs[idx] = np.abs(term) + 16 * EPS * np.abs(head) + 4 * EPS * cutoff
    return values, errs


def zeta(s, full_output=False):
    """
    Дзета-функция Римана.

    При Re s > 0 используется формула Эйлера–Маклорена с отсечкой N >= 10·(1+|Im s|)
    и 8 поправками Бернулли; при Re s <= 0 функциональное уравнение.
    """
    s, scalar = _complex_input(s)
    if np.any(s == 1):
        raise PoleError("zeta has a pole at s = 1.")
    flat = np.atleast_1d(s).ravel()
    values = np.empty_like(flat)
    errs = np.empty(flat.shape)

    right = flat.real > 0
    if np.any(right):
        values[right], errs[right] = _zeta_em(flat[right])
    left = ~right
    if np.any(left):
        sl = flat[left]
        origin = sl == 0
        sl = np.where(origin, -1.0, sl)
        mirror, mirror_err = _zeta_em(1 - sl)
        factor = (2.0 ** sl) * np.pi ** (sl - 1) * np.sin(np.pi * sl / 2) * np.exp(special.loggamma(1 - sl))
        values[left] = np.where(origin, -0.5, factor * mirror)
        errs[left] = np.abs(factor) * mirror_err + 8 * EPS * np.abs(values[left])
    return _finish(values.reshape(s.shape), errs.reshape(s.shape), scalar, full_output)


def zeta_star(s, full_output=False):
    """Пополненная дзета ζ*(s) = π^{-s/2} Γ(s/2) ζ(s), симметричная при s -> 1-s."""
    s, scalar = _complex_input(s)
    if np.any((s == 0) | (s == 1)):
        raise PoleError("zeta_star has poles at s = 0 and s = 1.")
    flat = np.atleast_1d(s).ravel()
    # слева от 1/2 используем функциональное уравнение
    work = np.where(flat.real < 0.5, 1 - flat, flat)
    z, z_err = zeta(work, full_output=True)
    pre = np.exp(-0.5 * work * np.log(np.pi) + special.loggamma(work / 2))
    value = pre * z
    err = np.abs(pre) * z_err + 8 * EPS * np.abs(value)
    return _finish(value.reshape(s.shape), err.reshape(s.shape), scalar, full_output)


# ---- K-Бессель ----

def _bessel_nodes(nu, y_min):
    """Сдвиг контура α, шаг и полуширина для трапеций по u."""
    tau = nu.imag
    theta = max(0.0, np.pi / 2 - 1.0 / abs(tau)) if tau != 0 else 0.0
    strip = np.pi / 2 - theta
    step = np.pi * strip / 40.0
    cos_t = np.cos(theta)
    sigma = abs(nu.real)
    half = 1.0
    for _ in range(4):
        half = np.arccosh(1.0 + (40.0 + sigma * half) / (y_min * cos_t)) + 0.5
    return np.copysign(theta, tau), step, half


def _kbessel(nu, y, derivative=False):
    """
    K_ν(y) (или K′_ν(y)) трапециями по сдвинутому контуру
    K_ν(y) = ½∫ exp(-y·cosh(u+iα) + ν(u+iα)) du.

    Порядок ν: любой комплексный скаляр; y: положительный массив.
    Возвращает (значение, оценка ошибки).
    """
    nu = complex(nu)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    alpha, step, half = _bessel_nodes(nu, float(np.min(y)))
    count = int(np.ceil(half / step))
    j = np.arange(-count, count + 1)
    w = j * step + 1j * alpha
    cosh_w = np.cosh(w)
    phase = np.exp(nu * w)
    weight = -cosh_w * phase if derivative else phase
    even = (j % 2 == 0)

    values = np.empty(y.shape, dtype=complex)
    errs = np.empty(y.shape)
    chunk = max(1, 2_000_000 // j.size)
    for start in range(0, y.size, chunk):
        yy = y[start:start + chunk, None]
        integrand = 0.5 * np.exp(-yy * cosh_w[None, :]) * weight[None, :]
        fine = step * integrand.sum(axis=1)
        coarse = 2 * step * integrand[:, even].sum(axis=1)
        scale = step * np.abs(integrand).sum(axis=1)
        diff = np.abs(fine - coarse)
        values[start:start + chunk] = fine
        errs[start:start + chunk] = diff ** 2 / np.maximum(np.abs(fine), 1e-300) + 32 * EPS * scale
    if nu.real == 0 or nu.imag == 0:
        values = values.real.astype(complex)
    return values, errs


def bessel_k(order, y, full_output=False):
    """
    Модифицированная функция Бесселя K_ν(y) комплексного порядка.

    Args:
        order: ν с |Re ν| < 1.
        y: Положительное число или массив.
        full_output: Вернуть также оценку ошибки.

    Raises:
        DomainError: если y <= 0 или |Re ν| >= 1.
    """
    nu = complex(order)
    if abs(nu.real) >= 1:
        raise DomainError(f"bessel_k requires |Re(order)| < 1, got {nu}.")
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr <= 0):
        raise DomainError("bessel_k requires y > 0.")
    values, errs = _kbessel(nu, y_arr.ravel())
    return _finish(values.reshape(y_arr.shape), errs.reshape(y_arr.shape),
                   y_arr.ndim == 0, full_output)


def bessel_k_any(order, y, full_output=False):
    """K_ν(y) для произвольного комплексного ν (нужно Фурье-рядам Эйзенштейна)."""
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr <= 0):
        raise DomainError("bessel_k_any requires y > 0.")
    values, errs = _kbessel(complex(order), y_arr.ravel())
    return _finish(values.reshape(y_arr.shape), errs.reshape(y_arr.shape),
                   y_arr.ndim == 0, full_output)


# ---- Уиттекер ----

def _is_integer(x):
    return float(x) == float(np.round(x))


def _whittaker_integral(alpha, nu, y):
    """Интегральное представление, нужно Re(ν - α + 1/2) > 0."""
    a = nu - alpha + 0.5
    b = nu + alpha - 0.5
    if a.real <= 0:
        raise DomainError("Whittaker integral representation needs Re(nu - alpha + 1/2) > 0.")
    step = 0.05
    values = np.empty(y.shape, dtype=complex)
    errs = np.empty(y.shape)
    for i, yy in enumerate(y):
        lo = -50.0 / a.real - 5.0
        hi = np.log((50.0 + a.real + abs(b)) / yy) + 3.0
        j = np.arange(int(np.floor(lo / step)), int(np.ceil(hi / step)) + 1)
        v = j * step
        log_f = -yy * np.exp(v) + a * v + b * np.logaddexp(0.0, v)
        peak = np.max(log_f.real)
        f = np.exp(log_f - peak)
        fine = step * f.sum()
        coarse = 2 * step * f[j % 2 == 0].sum()
        pre = (nu + 0.5) * np.log(yy) - yy / 2 - special.loggamma(a) + peak
        values[i] = np.exp(pre) * fine
        diff = abs(fine - coarse)
        errs[i] = abs(np.exp(pre)) * (diff ** 2 / max(abs(fine), 1e-300) + 32 * EPS * np.abs(f).sum() * step)
    return values, errs


def _whittaker_recurrence(alpha, nu, y):
    """Прямая рекуррентность по κ от W_{0,ν}, устойчива при росте κ."""
    k_half, k_half_err = _kbessel(nu, y / 2)
    dk_half, _ = _kbessel(nu, y / 2, derivative=True)
    w0 = np.sqrt(y / np.pi) * k_half
    dw0 = k_half / (2 * np.sqrt(np.pi * y)) + np.sqrt(y / np.pi) * 0.5 * dk_half
    prev, cur = w0, 0.5 * y * w0 - y * dw0
    for kappa in range(1, int(alpha)):
        prev, cur = cur, (y - 2 * kappa) * cur - (kappa - nu - 0.5) * (kappa + nu - 0.5) * prev
    rel = k_half_err / np.maximum(np.abs(k_half), 1e-300)
    return cur, (rel + 64 * EPS * alpha) * np.abs(cur)


def whittaker_w(alpha, nu, y, full_output=False):
    """
    Функция Уиттекера W_{α,ν}(y) для α ∈ {0, ±k/2} и вырожденных параметров.

    α = 0 сводится к K-Бесселю, при α < 0 берется интегральное представление,
    при α > 0 рекуррентность по первому индексу. Вырожденный случай
    ν = ±(α - 1/2) дает y^α e^{-y/2}.
    """
    nu = complex(nu)
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr <= 0):
        raise DomainError("whittaker_w requires y > 0.")
    flat = np.atleast_1d(y_arr).ravel()

    if abs(nu - (alpha - 0.5)) < 1e-15 or abs(nu + (alpha - 0.5)) < 1e-15:
        values = (flat ** alpha * np.exp(-flat / 2)).astype(complex)
        errs = 4 * EPS * np.abs(values)
    elif alpha == 0:
        k_val, k_err = _kbessel(nu, flat / 2)
        values = np.sqrt(flat / np.pi) * k_val
        errs = np.sqrt(flat / np.pi) * k_err
    elif _is_integer(alpha) and alpha < 0:
        values, errs = _whittaker_integral(float(alpha), nu, flat)
    elif _is_integer(alpha) and alpha > 0:
        values, errs = _whittaker_recurrence(int(alpha), nu, flat)
    else:
        raise DomainError(f"whittaker_w does not support alpha={alpha}, nu={nu}.")
    return _finish(values.reshape(y_arr.shape), errs.reshape(y_arr.shape),
                   y_arr.ndim == 0, full_output)


def mellin_k_exp(s, k, t, full_output=False):
    """∫₀^∞ K_{it}(y) e^{-y} y^{s+k/2} dy/y в замкнутом виде."""
    s = np.asarray(s, dtype=complex)
    if np.any((s + k / 2).real <= abs(np.imag(t))):
        raise DomainError("mellin_k_exp requires Re(s + k/2) > |Im(t)|.")
    ratio, err = gamma_ratio([s + k / 2 - 1j * t, s + k / 2 + 1j * t],
                             [s + (k + 1) / 2], full_output=True)
    pre = np.exp(-(s + k / 2) * np.log(2.0)) * np.sqrt(np.pi)
    value = pre * ratio
    scalar = np.ndim(value) == 0
    return _finish(value, np.abs(pre) * err, scalar, full_output)


def richardson_limit(fn, h=0.02, levels=3, symmetric=True, rtol=1e-6, atol=1e-10):
    """
    Предел fn(ε) при ε -> 0 по шагам h, h/2, h/4, ...

    При symmetric=True используется S(h) = (fn(h) + fn(-h))/2, и экстраполяция
    идет по степеням h².

    Returns:
        Пара (значение, оценка ошибки).

    Raises:
        LimitInstabilityError: если последние экстраполянты расходятся.
    """
    if levels < 2:
        raise DomainError("richardson_limit needs at least two levels.")
    steps = [h / 2 ** j for j in range(levels)]
    base = 4.0 if symmetric else 2.0
    table = []
    for j, step in enumerate(steps):
        if symmetric:
            row = [0.5 * (complex(fn(step)) + complex(fn(-step)))]
        else:
            row = [complex(fn(step))]
        for i in range(1, j + 1):
            factor = base ** i
            row.append((factor * row[i - 1] - table[j - 1][i - 1]) / (factor - 1))
        table.append(row)
    value = table[-1][-1]
    err = abs(value - table[-1][-2])
    logger.debug("richardson_limit: value=%s err=%.3e steps=%s", value, err, steps)
    if err > max(atol, rtol * abs(value)):
        raise LimitInstabilityError(
            f"Richardson extrapolation unstable: successive estimates differ by {err:.3e}.")
    return value, err
