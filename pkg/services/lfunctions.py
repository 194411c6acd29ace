"""L-функции и сдвинутые ряды Дирихле.

Пополненные L-функции вычисляются приближенным функциональным уравнением
с гладким ядром G(z) = exp(z²/B² - iβz); корневое число, если оно не задано,
калибруется по двум масштабам отсечения.
"""
import logging
import math
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np

from config import active_config
from models import CuspContext, HoloForm, MaassForm, PhiSpec, ShiftPair, SmoothingSpec
from services.arithmetic import prime_factors, sigma_cusp_stable
from services.eisenstein import raised_eisenstein_coefficients
from services.specfun import EPS, gamma_ratio, log_gamma, richardson_limit, zeta
from utils.error_handlers import (
    ConvergenceError, CoverageError, DomainError, PoleError)

logger = logging.getLogger(__name__)

KERNEL_WIDTH = 8.0
KERNEL_STEP = 0.125
KERNEL_SPAN = 52.0
KERNEL_SPAN_MAX = 416.0
# концы сетки по τ обязаны быть на e^{-40} ниже максимума ядра
KERNEL_TAIL_LOG = -40.0
# поворот ядра включается, когда без него теряется больше e^{10} относительной точности
ROTATION_LOSS_LOG = 10.0
V_TAIL_TOL = 1e-15
CALIBRATION_POINT = complex(0.5, 0.8)
ROOT_NUMBER_TOL = 1e-6
_CHUNK = 512
_LOG_PI = math.log(math.pi)


def _log_gamma_r(z):
    """log Γ_ℝ(z) = -(z/2)·log π + log Γ(z/2)."""
    return -0.5 * z * _LOG_PI + log_gamma(z / 2)


def _divisor_counts(n_max: int) -> np.ndarray:
    counts = np.zeros(n_max + 1)
    for d in range(1, n_max + 1):
        counts[d::d] += 1
    return counts


def _squarefree_convolution(base: np.ndarray, level: int, n_max: int) -> np.ndarray:
    """c(n) = Σ_{d²|n, (d,N)=1} base(n/d²), т.е. коэффициенты ζ^{(N)}(2s)·Σ base(n) n^{-s}."""
    out = np.zeros(n_max + 1, dtype=complex)
    d = 1
    while d * d <= n_max:
        if math.gcd(d, level) == 1:
            m = np.arange(1, n_max // (d * d) + 1)
            out[m * d * d] += base[m]
        d += 1
    return out


def _level_zeta_correction(level: int, s: complex) -> complex:
    """Π_{p|N} (1 - p^{-2s})^{-1}: переход от ζ^{(N)}(2s) к ζ(2s)."""
    out = 1.0 + 0j
    for p in prime_factors(level):
        out /= 1 - complex(p) ** (-2 * s)
    return out


class SmoothedL:
    """
    L(s) = Σ b(n) n^{-s} с пополнением Λ(s) = q^{s/2}·Π Γ_ℝ(s+μ_j)·L(s) = ε·Λ̄(1-s).

    Args:
        coeffs: b(0), ..., b(M), элемент 0 игнорируется.
        mu: Сдвиги μ_j гамма-множителя.
        conductor: Кондуктор q.
        root_number: Корневое число ε; None означает калибровку.
        label: Имя для логов.
    """

    def __init__(self, coeffs: Sequence[complex], mu: Sequence[complex], conductor: float,
                 root_number: Optional[complex] = None, label: str = ''):
        self.coeffs = np.array(coeffs, dtype=complex)
        self.coeffs[0] = 0
        self.mu = tuple(complex(m) for m in mu)
        self.conductor = float(conductor)
        self.label = label
        self._root_number = None if root_number is None else complex(root_number)

    @property
    def degree(self) -> int:
        return len(self.mu)

    @property
    def n_max(self) -> int:
        return len(self.coeffs) - 1

    def _log_gamma_factor(self, s, mus):
        return sum(_log_gamma_r(s + m) for m in mus)

    def _terms_needed(self, s0: complex, mus, scale: float) -> int:
        size = 1.0
        for m in mus:
            size *= math.sqrt((abs(s0 + m) + 2) / (2 * math.pi))
        return int(math.ceil(6 * size / scale)) + 10

    def _rotation(self, s: complex) -> float:
        """β = ±πd/4, если exp(πd|Im s|/4) уже съедает точность; иначе 0."""
        loss = math.pi * self.degree * abs(s.imag) / 4
        return math.copysign(math.pi * self.degree / 4, s.imag) if loss > ROTATION_LOSS_LOG else 0.0

    def _kernel(self, s0: complex, mus, sign: int, beta: float):
        """
        Узлы z и веса правила трапеций для V(y) = (1/2πi)∫ y^{-z} G(z) γ(s0+z)/γ(s0) dz/z.

        При β ≠ 0 экспоненциальное убывание γ-отношения погашено, и хвост держит
        только гауссов множитель; отрезок по τ удваивается, пока концы не станут
        пренебрежимы.
        """
        # линия правее всех полюсов Π Γ_ℝ(s0 + z + μ_j) и нуля
        line = max(1.0, 1.0 - s0.real - min(m.real for m in mus))
        span = KERNEL_SPAN
        while True:
            tau = np.arange(-span, span + KERNEL_STEP / 2, KERNEL_STEP)
            z = line + 1j * tau
            log_ratio = self._log_gamma_factor(s0 + z, mus) - self._log_gamma_factor(s0, mus)
            log_w = z ** 2 / KERNEL_WIDTH ** 2 - 1j * sign * beta * z + log_ratio - np.log(z)
            size = log_w.real
            if max(size[0], size[-1]) < size.max() + KERNEL_TAIL_LOG:
                return z, KERNEL_STEP / (2 * math.pi) * np.exp(log_w)
            if span >= KERNEL_SPAN_MAX:
                raise ConvergenceError(
                    f"Smoothing kernel of {self.label} at s0={s0} does not decay within |Im z| <= {span}.")
            span *= 2

    @staticmethod
    def _v_tail(kernel, s0: complex, scale: float, n: float) -> float:
        """Грубая оценка хвоста Σ_{m>=n} |n^{-s0} V(n·scale)|."""
        z, weights = kernel
        v = abs(np.exp(-math.log(n * scale) * z) @ weights)
        return v * n ** (1 - s0.real)

    def _count(self, kernel, s0: complex, scale: float, estimate: int) -> int:
        """Число слагаемых: оценка по размеру гамма-множителя, увеличенная до фактического затухания V."""
        count = estimate
        limit = 50 * max(self.n_max, estimate)
        while count < limit and max(self._v_tail(kernel, s0, scale, count),
                                    self._v_tail(kernel, s0, scale, 1.1 * count)) > V_TAIL_TOL:
            count = int(1.25 * count) + 1
        return count

    def _smoothed_sum(self, coeffs: np.ndarray, s0: complex, scale: float, kernel,
                      count: int) -> complex:
        """Σ_{n<=count} c(n) n^{-s0} V(n·scale)."""
        z, weights = kernel
        total = 0j
        for start in range(1, count + 1, _CHUNK):
            stop = min(count, start + _CHUNK - 1)
            n = np.arange(start, stop + 1, dtype=float)
            log_n = np.log(n)
            v = np.exp(-np.outer(log_n + math.log(scale), z)) @ weights
            total += np.sum(coeffs[start:stop + 1] * np.exp(-s0 * log_n) * v)
        return total

    def parts(self, s: complex, X: float) -> Tuple[complex, complex]:
        """Прямая сумма и двойственная сумма (без ε) при отсечке X."""
        s = complex(s)
        q = self.conductor
        dual_mu = tuple(m.conjugate() for m in self.mu)
        beta = self._rotation(s)
        main_kernel = self._kernel(s, self.mu, 1, beta)
        dual_kernel = self._kernel(1 - s, dual_mu, -1, beta)
        main_count = self._count(main_kernel, s, 1.0 / X, self._terms_needed(s, self.mu, 1.0 / X))
        dual_count = self._count(dual_kernel, 1 - s, X / q,
                                 self._terms_needed(1 - s, dual_mu, X / q))
        required = max(main_count, dual_count)
        if required > self.n_max:
            raise CoverageError(
                f"L-function {self.label or ''} at s={s} needs {required} coefficients, "
                f"table has {self.n_max}.", required=required, available=self.n_max)
        main = self._smoothed_sum(self.coeffs, s, 1.0 / X, main_kernel, main_count)
        dual_sum = self._smoothed_sum(np.conj(self.coeffs), 1 - s, X / q, dual_kernel, dual_count)
        factor = q ** (0.5 - s) * np.exp(
            self._log_gamma_factor(1 - s, dual_mu) - self._log_gamma_factor(s, self.mu))
        return main, complex(factor * dual_sum)

    @property
    def root_number(self) -> complex:
        if self._root_number is None:
            self._root_number = self._calibrate()
        return self._root_number

    def _calibrate(self) -> complex:
        s0 = CALIBRATION_POINT
        root_q = math.sqrt(self.conductor)
        a1, b1 = self.parts(s0, 0.7 * root_q)
        a2, b2 = self.parts(s0, 1.4 * root_q)
        if b2 == b1:
            raise ConvergenceError(f"Root number of {self.label} cannot be calibrated.")
        eps = (a1 - a2) / (b2 - b1)
        logger.debug("Calibrated root number of %s: %s", self.label, eps)
        if abs(abs(eps) - 1) > ROOT_NUMBER_TOL:
            raise ConvergenceError(
                f"Calibrated root number of {self.label} has modulus {abs(eps):.9f}; "
                "coefficients or gamma factor are inconsistent.")
        return eps

    def evaluate(self, s: complex, X: Optional[float] = None) -> complex:
        X = X or math.sqrt(self.conductor)
        main, dual = self.parts(s, X)
        return main + self.root_number * dual

    def tapered(self, s: complex, X: Optional[float] = None) -> complex:
        """Σ b(n) n^{-s} e^{-(n/X)²} без отражения; годится при Re s > 1."""
        X = X or self.n_max / 3
        n = np.arange(1, self.n_max + 1, dtype=float)
        return complex(np.sum(self.coeffs[1:] * np.exp(-complex(s) * np.log(n) - (n / X) ** 2)))

    def __call__(self, s: complex, spec: Optional[SmoothingSpec] = None,
                 full_output: bool = False):
        spec = spec or SmoothingSpec()
        if spec.reflection:
            X = spec.X or math.sqrt(self.conductor)
            value = self.evaluate(s, X)
            if not full_output:
                return value
            err = abs(value - self.evaluate(s, 1.25 * X)) + 64 * EPS * max(1.0, abs(value))
            return value, err
        X = spec.X or self.n_max / 3
        value = self.tapered(s, X)
        if not full_output:
            return value
        n_max = self.n_max
        err = abs(value - self.tapered(s, X / math.sqrt(2))) + math.exp(-(n_max / X) ** 2)
        return value, err


# ---- Конкретные L-функции ----

@lru_cache(maxsize=64)
def holomorphic_engine(f: HoloForm) -> SmoothedL:
    k = f.weight
    eps = (-1) ** (k // 2) if f.level == 1 else None
    return SmoothedL(f.A, ((k - 1) / 2, (k + 1) / 2), f.level, root_number=eps,
                     label=f.label or f"f_{k}_{f.level}")


@lru_cache(maxsize=64)
def symmetric_square_engine(f: HoloForm) -> SmoothedL:
    M = math.isqrt(f.n_max)
    A = f.A
    squares = np.zeros(M + 1)
    squares[1:] = A[np.arange(1, M + 1) ** 2]
    coeffs = _squarefree_convolution(squares, f.level, M)
    k = f.weight
    return SmoothedL(coeffs, (1, k - 1, k), f.level ** 2,
                     root_number=1 if f.level == 1 else None,
                     label=f"sym2({f.label or k})")


@lru_cache(maxsize=64)
def rankin_selberg_engine(f: HoloForm, g: HoloForm) -> SmoothedL:
    M = min(f.n_max, g.n_max)
    base = f.A[:M + 1] * np.conj(g.A[:M + 1])
    k = f.weight
    return SmoothedL(_squarefree_convolution(base, f.level, M), (0, 1, k - 1, k), f.level ** 2,
                     label=f"{f.label}x{g.label}")


@lru_cache(maxsize=256)
def rankin_maass_engine(f: HoloForm, u: MaassForm) -> SmoothedL:
    if f.level != u.level:
        raise DomainError(f"Levels differ: form has N={f.level}, Maass form has N={u.level}.")
    M = min(f.n_max, u.n_max)
    base = f.A[:M + 1] * np.asarray(u.lam[:M + 1])
    k, it = f.weight, 1j * u.t
    mu = ((k - 1) / 2 + it, (k - 1) / 2 - it, (k + 1) / 2 + it, (k + 1) / 2 - it)
    return SmoothedL(_squarefree_convolution(base, f.level, M), mu, f.level ** 2,
                     label=f"{f.label}xu(t={u.t:.6f})")


def L_holomorphic(f: HoloForm, s: complex, spec: Optional[SmoothingSpec] = None,
                  full_output: bool = False):
    """
    L(s, f) = Σ A(n) n^{-s} в нормировке с центром s = 1/2.

    Args:
        f: Новая форма.
        s: Точка.
        spec: Параметры сглаживания.
        full_output: Вернуть также оценку ошибки.

    Raises:
        CoverageError: если таблица коэффициентов коротка для данного s.
    """
    return holomorphic_engine(f)(s, spec, full_output)


def L_symmetric_square(f: HoloForm, s: complex, spec: Optional[SmoothingSpec] = None,
                       full_output: bool = False):
    """L(s, sym² f) = ζ^{(N)}(2s)·Σ A(n²) n^{-s}."""
    return symmetric_square_engine(f)(s, spec, full_output)


def _local_product(level: int, s: complex, sign: int) -> complex:
    out = 1.0 + 0j
    for p in prime_factors(level):
        out /= 1 + sign * complex(p) ** (-s)
    return out


def L_rankin_selberg(f: HoloForm, g: HoloForm, s: complex,
                     spec: Optional[SmoothingSpec] = None, full_output: bool = False):
    """
    L(s, f×ḡ) = ζ(2s)·Σ A(n) B̄(n) n^{-s}.

    Raises:
        DomainError: если веса или уровни различны.
        PoleError: при f = g и s = 1.
    """
    if f.weight != g.weight or f.level != g.level:
        raise DomainError("Rankin-Selberg product needs forms of equal weight and level.")
    s = complex(s)
    if f.coeffs == g.coeffs:
        if abs(s - 1) < 1e-12:
            raise PoleError("L(s, f x f) has a pole at s = 1.")
        z, z_err = zeta(s, full_output=True)
        sym, sym_err = L_symmetric_square(f, s, spec, full_output=True)
        local = _local_product(f.level, s, 1)
        value = z * sym * local
        err = abs(local) * (abs(z) * sym_err + abs(sym) * z_err)
    else:
        raw, raw_err = rankin_selberg_engine(f, g)(s, spec, full_output=True)
        corr = _level_zeta_correction(f.level, s)
        value, err = raw * corr, raw_err * abs(corr)
    return (value, err) if full_output else value


def rankin_selberg_residue(f: HoloForm, full_output: bool = False):
    """Вычет L(s, f×f̄) в s = 1 экстраполяцией ε·L(1+ε, f×f̄) при ε -> 0."""
    steps = active_config().LIMIT_STEPS

    def scaled(e):
        return e * zeta(1 + e) * L_symmetric_square(f, 1 + e) * _local_product(f.level, 1 + e, 1)

    value, err = richardson_limit(scaled, h=steps[0], levels=len(steps))
    logger.info("Rankin-Selberg residue of %s: %.12g (err %.2e)", f.label, value.real, err)
    return (value.real, err) if full_output else value.real


def L_rankin_maass(f: HoloForm, u: MaassForm, s: complex,
                   spec: Optional[SmoothingSpec] = None, full_output: bool = False):
    """
    𝓛(s, f×u) = ζ(2s)·Σ A(n) ρ(n) n^{-s}, ρ(n) = ρ(1)λ(n).

    Raises:
        DomainError: если уровни различны.
        CoverageError: если таблица λ(n) коротка.
    """
    s = complex(s)
    raw, raw_err = rankin_maass_engine(f, u)(s, spec, full_output=True)
    corr = u.rho1 * _level_zeta_correction(f.level, s)
    value, err = raw * corr, raw_err * abs(corr)
    return (value, err) if full_output else value


def L_f_times_eisenstein(f: HoloForm, cusp: CuspContext, s: complex, t: float,
                         spec: Optional[SmoothingSpec] = None, full_output: bool = False):
    """
    L(s, f×E_{1/a}(·, 1/2+it)) = ζ(2s)·Σ A(n) σ^a_{-2it}(n) n^{it-s},
    через произведение L(s+it, f)·L(s-it, f) и локальные множители при p | N.
    """
    if cusp.N != f.level:
        raise DomainError(f"Cusp level {cusp.N} differs from form level {f.level}.")
    s = complex(s)
    it = 1j * t
    A = f.A
    corr = _level_zeta_correction(f.level, s)
    for p in prime_factors(f.level):
        ps = complex(p)
        if cusp.a % p == 0:
            corr *= A[p] * ps ** (-it - s) - ps ** (-2 * it - 1)
        else:
            corr *= 1 - A[p] * ps ** (-it - s)
    plus, plus_err = L_holomorphic(f, s + it, spec, full_output=True)
    minus, minus_err = L_holomorphic(f, s - it, spec, full_output=True)
    value = corr * plus * minus
    err = abs(corr) * (abs(plus) * minus_err + abs(minus) * plus_err)
    return (value, err) if full_output else value


def f_times_eisenstein_series(f: HoloForm, cusp: CuspContext, s: complex, t: float,
                              n_max: Optional[int] = None) -> complex:
    """Прямая частичная сумма определяющего ряда; для Re s > 1."""
    s = complex(s)
    n_max = min(n_max or f.n_max, f.n_max)
    A = f.A
    total = 0j
    for n in range(1, n_max + 1):
        if A[n]:
            total += A[n] * sigma_cusp_stable(cusp, -2j * t, n) * complex(n) ** (1j * t - s)
    return complex(zeta(2 * s)) * total


# ---- Сдвинутые ряды ----

def phi_coefficients(phi: PhiSpec, k: int, n_max: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Коэффициенты φ при W_{k/2,ν}(4πny)e(nx) (n >= 1) и при n <= -1.

    Для φ = g·y^{k/2}: c(n) = b(n)(4πn)^{-k/2}, отрицательные равны нулю.
    """
    if phi.kind == 'eisenstein':
        return raised_eisenstein_coefficients(phi.r, k, phi.level, n_max)
    g = phi.form
    if g.weight != k:
        raise DomainError(f"Weight mismatch: phi has weight {g.weight}, expected {k}.")
    if g.n_max < n_max:
        raise CoverageError(f"phi needs {n_max} coefficients, table has {g.n_max}.",
                            required=n_max, available=g.n_max)
    n = np.arange(n_max + 1, dtype=float)
    n[0] = 1.0
    pos = np.asarray(g.a[:n_max + 1], dtype=complex) * (4 * math.pi * n) ** (-k / 2)
    pos[0] = 0
    return pos, np.zeros(n_max + 1, dtype=complex)


def _shifted_tail(f: HoloForm, coeffs: np.ndarray, sigma: float, m: int, trunc: int) -> float:
    """Оценка Σ_{n>trunc} по |a(n)| <= d(n) n^{(k-1)/2} и |c(n)| <= K d(n)/√n."""
    k = f.weight
    counts = _divisor_counts(2 * (trunc + m))
    n = np.arange(1, trunc + 1, dtype=float)
    K = float(np.max(np.abs(coeffs[1:trunc + 1]) * np.sqrt(n) / counts[1:trunc + 1]))
    D = float(np.max(counts))
    exponent = sigma - 1
    growth = (1 + m / trunc) ** ((k - 1) / 2)
    return 4 * K * D ** 2 * growth * trunc ** (-exponent) / exponent


def shifted_series_D(f: HoloForm, phi: PhiSpec, w: complex, m: int,
                     trunc: Optional[int] = None, full_output: bool = False):
    """
    D(w; m) = Σ_{n>=1} a(n+m)·c̄_φ(n)·n^{-(w+k/2-1)}.

    Args:
        f: Форма f.
        phi: Второй сомножитель.
        w: Точка, Re w > 1.
        m: Сдвиг m >= 1.
        trunc: Число слагаемых; по умолчанию все доступные.

    Raises:
        ConvergenceError: если Re w <= 1.
        CoverageError: если таблица a(n) коротка.
    """
    w = complex(w)
    if w.real <= 1:
        raise ConvergenceError(f"Shifted series needs Re w > 1, got {w}.")
    if m < 1:
        raise DomainError(f"Shift m must be positive, got {m}.")
    k = f.weight
    trunc = trunc or f.n_max - m
    if trunc < 1 or trunc + m > f.n_max:
        raise CoverageError(f"D(w; {m}) with {trunc} terms needs a({trunc + m}).",
                            required=trunc + m, available=f.n_max)
    pos, _ = phi_coefficients(phi, k, trunc)
    n = np.arange(1, trunc + 1, dtype=float)
    terms = f.a[m + 1:m + trunc + 1] * np.conj(pos[1:]) * np.exp(-(w + k / 2 - 1) * np.log(n))
    value = complex(np.sum(terms))
    if not full_output:
        return value
    tail = _shifted_tail(f, pos, w.real, m, trunc)
    return value, tail + 16 * EPS * float(np.sum(np.abs(terms)))


def shifted_series_D_holo(f: HoloForm, g: HoloForm, w: complex, m: int,
                          trunc: Optional[int] = None, full_output: bool = False):
    """D(w; m) для φ = g·y^{k/2}."""
    return shifted_series_D(f, PhiSpec('holomorphic', form=g, level=g.level), w, m,
                            trunc, full_output)


def finite_series_Dfin(f: HoloForm, phi: PhiSpec, w: complex, m: int) -> complex:
    """
    Конечный ряд Σ_{n=1}^{m-1} a(m-n)·c̄_φ(-n)·n^{-(w+k/2-1)}
    с множителем Γ(w)Γ(1-w)/(Γ(1/2+k/2+ν̄)Γ(1/2+k/2-ν̄)).

    Raises:
        PoleError: если сумма ненулевая, а w целое.
    """
    w = complex(w)
    if m <= 1:
        return 0j
    k = f.weight
    _, neg = phi_coefficients(phi, k, m - 1)
    if not np.any(neg[1:m]):
        return 0j
    n = np.arange(1, m, dtype=float)
    a_rev = f.a[m - 1:0:-1]
    total = complex(np.sum(a_rev * np.conj(neg[1:m]) * np.exp(-(w + k / 2 - 1) * np.log(n))))
    nu_bar = phi.nu.conjugate()
    prefactor = complex(gamma_ratio([w, 1 - w], [0.5 + k / 2 + nu_bar, 0.5 + k / 2 - nu_bar]))
    return prefactor * total


def gamma_prefactor_G(w: complex, k: int, nu: complex) -> complex:
    """G(w) = Γ(w+k/2+ν̄-1/2)Γ(w+k/2-ν̄-1/2)(4π)^{1-w-k/2}/Γ(w)."""
    w = complex(w)
    nu_bar = complex(nu).conjugate()
    ratio = complex(gamma_ratio([w + k / 2 + nu_bar - 0.5, w + k / 2 - nu_bar - 0.5], [w]))
    return ratio * (4 * math.pi) ** (1 - w - k / 2)


def double_series_M(f: HoloForm, phi1: PhiSpec, phi2: PhiSpec, s: complex, w: complex,
                    trunc: Optional[int] = None, full_output: bool = False):
    """
    M(s, w) = ζ(2s')·Σ_{n,m>=1} a(n+m)·c̄₁(n)·c̄₂(m)·m^{-(s+k/2-1)}·n^{-(w+k/2-1)},
    s' = s + w + k/2 - 1.

    Ошибка складывается из разности порядков суммирования и разности M(T) - M(T/2).

    Raises:
        ConvergenceError: если Re s <= 1 или Re w <= 1.
    """
    s, w = complex(s), complex(w)
    if s.real <= 1 or w.real <= 1:
        raise ConvergenceError(f"Double series needs Re s, Re w > 1, got s={s}, w={w}.")
    k = f.weight
    trunc = trunc or min(300, f.n_max // 2)
    if 2 * trunc > f.n_max:
        raise CoverageError(f"Double series with {trunc} terms needs a({2 * trunc}).",
                            required=2 * trunc, available=f.n_max)
    shift = ShiftPair.of(s, w, k)
    c1 = np.conj(phi_coefficients(phi1, k, trunc)[0][1:])
    c2 = np.conj(phi_coefficients(phi2, k, trunc)[0][1:])
    idx = np.arange(1, trunc + 1)
    log_idx = np.log(idx.astype(float))
    row = c1 * np.exp(-(w + k / 2 - 1) * log_idx)
    col = c2 * np.exp(-(s + k / 2 - 1) * log_idx)
    inner = f.a[idx[:, None] + idx[None, :]] * row[:, None] * col[None, :]
    z2 = complex(zeta(2 * shift.s_prime))
    by_rows = complex(np.sum(np.sum(inner, axis=0)))
    value = z2 * by_rows
    if not full_output:
        return value
    by_cols = complex(np.sum(np.sum(inner, axis=1)))
    half = trunc // 2
    coarse = complex(np.sum(inner[:half, :half]))
    err = abs(z2) * (abs(by_rows - by_cols) + abs(by_rows - coarse))
    return value, err
