"""Квадратура по вертикальным прямым для интегралов Меллина-Барнса.

Интеграл (1/2πi)∫_{(σ)} f(w) dw считается составной формулой Гаусса-Лежандра
на панелях высоты 0.5; хвост за |Im w| > t_cut оценивается по профилю убывания.
Полюса при сдвиге прямой перечисляет вызывающий код.
"""
import logging
import math
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

from models import DecayProfile, TestFunctionH, VerticalPath
from services.specfun import EPS, gamma_ratio
from utils.error_handlers import DomainError, PathCollisionError, TailBoundError

logger = logging.getLogger(__name__)

PANEL_HEIGHT = 0.5
GL_ORDER = 12
GL_CHECK_ORDER = 8
# σ_w = ε и σ_u = 1/2 + 2ε для тождеств с ядром Барнса
CONTOUR_EPS = 0.25
_TAIL_WINDOW = 4.0
_TAIL_SAMPLES = 9
_MAX_EXTENSIONS = 6
_POLY_ORDER_LIMIT = -6
_OUTER_CHUNK = 64

Pole = Tuple[complex, Callable[[], complex]]
InnerPath = Union[VerticalPath, Callable[[np.ndarray], VerticalPath]]


def path_for(sigma: float, t_cut: float) -> VerticalPath:
    """Прямая Re w = sigma с панелями высоты не больше PANEL_HEIGHT."""
    return VerticalPath(sigma, t_cut, max(8, int(math.ceil(2 * t_cut / PANEL_HEIGHT))))


def line_nodes(path: VerticalPath, order: int = GL_ORDER) -> Tuple[np.ndarray, np.ndarray]:
    """Узлы w_j и веса c_j, для которых (1/2πi)∫ f(w) dw ≈ Σ c_j f(w_j)."""
    g, wts = leggauss(order)
    edges = np.linspace(-path.t_cut, path.t_cut, path.n_points + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    t = (mid[:, None] + half[:, None] * g[None, :]).ravel()
    weights = (half[:, None] * wts[None, :]).ravel() / (2 * math.pi)
    return path.sigma + 1j * t, weights


def _evaluate(integrand, nodes) -> np.ndarray:
    values = np.asarray(integrand(nodes), dtype=complex)
    if not np.all(np.isfinite(values)):
        raise PathCollisionError("Integrand is not finite on the path; a pole lies on the line.")
    return values


def _log_envelope(profile: DecayProfile, t: np.ndarray) -> np.ndarray:
    a = np.abs(t)
    return profile.order * np.log1p(a) - profile.rate * a


def tail_bound(integrand, path: VerticalPath, profile: DecayProfile) -> float:
    """
    Оценка |(1/2πi)∫_{|Im w|>t_cut}| по профилю C·(1+|t|)^order·e^{-rate|t|}.

    Константа C берется по выборке у края отрезка.

    Raises:
        TailBoundError: если выборка убывает медленнее профиля или профиль не интегрируем.
    """
    a = path.t_cut
    window = min(_TAIL_WINDOW, a / 2)
    t = a - window * np.linspace(1.0, 0.0, _TAIL_SAMPLES)
    t = np.concatenate([t, -t])
    values = _evaluate(integrand, path.sigma + 1j * t)
    with np.errstate(divide='ignore'):
        log_ratio = np.log(np.abs(values)) - _log_envelope(profile, t)
    outer = np.abs(t) > a - window / 2
    lo, hi = np.max(log_ratio[~outer]), np.max(log_ratio[outer])
    if np.isfinite(hi) and hi > lo + math.log(10):
        raise TailBoundError(
            f"Integrand on Re w = {path.sigma} decays slower than the profile "
            f"(rate={profile.rate}, order={profile.order}) near t_cut={a}.")
    log_c = float(np.max(log_ratio))
    if not np.isfinite(log_c):
        return 0.0
    decay = profile.rate - max(profile.order, 0.0) / (1 + a)
    if decay > 0:
        log_tail = profile.order * math.log1p(a) - profile.rate * a - math.log(decay)
    elif profile.rate == 0 and profile.order < -1:
        log_tail = (profile.order + 1) * math.log1p(a) - math.log(-profile.order - 1)
    else:
        raise TailBoundError(f"Decay profile {profile} is not integrable beyond t_cut={a}.")
    return 2 * math.exp(log_c + log_tail) / (2 * math.pi)


def _line_value(integrand, path: VerticalPath) -> Tuple[complex, float]:
    nodes, weights = line_nodes(path, GL_ORDER)
    terms = _evaluate(integrand, nodes) * weights
    value = complex(np.sum(terms))
    nodes, weights = line_nodes(path, GL_CHECK_ORDER)
    coarse = complex(np.sum(_evaluate(integrand, nodes) * weights))
    return value, abs(value - coarse) + 16 * EPS * float(np.sum(np.abs(terms)))


def vertical_integral(integrand, path: VerticalPath, profile: Optional[DecayProfile] = None,
                      rtol: Optional[float] = None, atol: float = 0.0, full_output: bool = False):
    """
    (1/2πi)∫ f(w) dw по прямой Re w = path.sigma, |Im w| <= path.t_cut.

    Args:
        integrand: Векторизованная функция комплексного массива.
        path: Прямая и отсечка.
        profile: Профиль убывания для оценки хвоста.
        rtol, atol: Если заданы, отсечка удваивается, пока хвост не станет меньше допуска.
        full_output: Вернуть также оценку ошибки (квадратура + хвост).

    Raises:
        TailBoundError: если выборка противоречит профилю или хвост не сходится.
        PathCollisionError: если подынтегральная функция не конечна на прямой.
    """
    for _ in range(_MAX_EXTENSIONS + 1):
        value, quad_err = _line_value(integrand, path)
        tail = tail_bound(integrand, path, profile) if profile is not None else 0.0
        if rtol is None or tail <= max(atol, rtol * abs(value)):
            break
        path = path.extended()
    else:
        raise TailBoundError(f"Tail bound {tail:.3e} still above tolerance at t_cut={path.t_cut}.")
    logger.debug("vertical_integral sigma=%s t_cut=%s value=%s quad=%.2e tail=%.2e",
                 path.sigma, path.t_cut, value, quad_err, tail)
    return (value, quad_err + tail) if full_output else value


def shift_contour(integrand, path: VerticalPath, new_sigma: float, poles: Sequence[Pole] = (),
                  profile: Optional[DecayProfile] = None, full_output: bool = False):
    """
    Значение интеграла по path, вычисленное на прямой Re w = new_sigma плюс вычеты.

    Args:
        poles: Пары (точка полюса, функция без аргументов, возвращающая вычет),
            по одной на каждый полюс между прямыми.

    Raises:
        PathCollisionError: если полюс лежит на одной из прямых.
        DomainError: если полюс не лежит между прямыми.
    """
    lo, hi = sorted((path.sigma, new_sigma))
    residues = 0j
    for location, residue in poles:
        location = complex(location)
        if min(abs(location.real - lo), abs(location.real - hi)) < 1e-12:
            raise PathCollisionError(f"Pole {location} lies on a contour line.")
        if not lo < location.real < hi:
            raise DomainError(f"Pole {location} is not between Re w = {lo} and Re w = {hi}.")
        residues += complex(residue())
    moved = VerticalPath(new_sigma, path.t_cut, path.n_points)
    value, err = vertical_integral(integrand, moved, profile, full_output=True)
    # сдвиг вправо обходит полюса по часовой стрелке
    value += -residues if new_sigma > path.sigma else residues
    return (value, err) if full_output else value


def _inner_integrals(integrand, u: np.ndarray, inner_path: InnerPath, order: int) -> np.ndarray:
    out = np.empty(len(u), dtype=complex)
    for start in range(0, len(u), _OUTER_CHUNK):
        block = u[start:start + _OUTER_CHUNK]
        path = inner_path(block) if callable(inner_path) else inner_path
        w, weights = line_nodes(path, order)
        values = np.asarray(integrand(block[:, None], w[None, :]), dtype=complex)
        if not np.all(np.isfinite(values)):
            raise PathCollisionError("Double integrand is not finite on the inner line.")
        out[start:start + len(block)] = values @ weights
    return out


def double_vertical_integral(integrand, outer_path: VerticalPath, inner_path: InnerPath,
                             outer_profile: Optional[DecayProfile] = None,
                             inner_profile: Optional[DecayProfile] = None,
                             full_output: bool = False):
    """
    Повторный интеграл (1/2πi)²∫_u ∫_w f(u, w) dw du: внутренний по w, внешний по u.

    Args:
        integrand: f(u, w), векторизованная с broadcasting.
        inner_path: Прямая по w либо функция блока узлов u, возвращающая прямую.
    """
    def inner(u, order=GL_ORDER):
        return _inner_integrals(integrand, np.atleast_1d(u), inner_path, order)

    u, weights = line_nodes(outer_path, GL_ORDER)
    values = inner(u)
    value = complex(np.sum(values * weights))
    u_c, weights_c = line_nodes(outer_path, GL_CHECK_ORDER)
    coarse = complex(np.sum(inner(u_c, GL_CHECK_ORDER) * weights_c))
    err = abs(value - coarse) + 16 * EPS * float(np.sum(np.abs(values * weights)))
    if outer_profile is not None:
        err += tail_bound(inner, outer_path, outer_profile)
    if inner_profile is not None:
        sample = u[np.linspace(0, len(u) - 1, 9).astype(int)]
        worst = 0.0
        for point in sample:
            path = inner_path(np.array([point])) if callable(inner_path) else inner_path
            worst = max(worst, tail_bound(lambda w: integrand(point, w), path, inner_profile))
        err += worst * float(np.sum(np.abs(weights)))
    logger.debug("double_vertical_integral value=%s err=%.2e", value, err)
    return (value, err) if full_output else value


# ---- Тождества с гамма-отношениями ----

def barnes_second_reduction(u: complex, t: float, path: Optional[VerticalPath] = None,
                            full_output: bool = False):
    """
    Вторая лемма Барнса в виде
    (1/2πi)∫_{(ε)} Γ(u-w)Γ(1/2-w)Γ(1/2+w)Γ(w-it)Γ(w+it)/Γ(1+w+u) dw
    = Γ(1/2-it)Γ(1/2+it)/((u+it)(u-it)).

    Returns:
        Пара (численное значение, замкнутая форма); при full_output добавляется ошибка.

    Raises:
        PathCollisionError: если Re u <= 0 и семейства полюсов не разделяются.
    """
    u = complex(u)
    if u.real <= 0:
        raise PathCollisionError(f"Re u must be positive to separate pole families, got u={u}.")
    it = 1j * t
    sigma = min(CONTOUR_EPS, u.real / 2)
    path = path or path_for(sigma, 2 * (abs(u.imag) + abs(t)) + 12)

    def integrand(w):
        return gamma_ratio([u - w, 0.5 - w, 0.5 + w, w - it, w + it], [1 + w + u])

    numeric, err = vertical_integral(integrand, path, DecayProfile(rate=math.pi, order=0.0),
                                     full_output=True)
    closed = complex(gamma_ratio([0.5 - it, 0.5 + it])) / ((u + it) * (u - it))
    return (numeric, closed, err) if full_output else (numeric, closed)


def weight_cut(h, order: float, t: float = 0.0) -> Tuple[float, DecayProfile]:
    """
    Отсечка и профиль для интеграла с весом h(u/i), когда остальные множители
    убывают как |Im u|^order.

    При быстром степенном убывании достаточно уйти за пик h; иначе нужен гауссов хвост.
    За точкой b гауссиана e^{-((u-T)/W)^2} мажорируется касательной экспонентой
    со скоростью 2(b-T)/W^2; b берется у внутреннего края окна выборки tail_bound.
    """
    if not isinstance(h, TestFunctionH):
        raise DomainError("An explicit path is required for a custom weight h.")
    if order + 1 <= _POLY_ORDER_LIMIT:
        return max(24.0, h.T + h.width) + 2 * abs(t), DecayProfile(rate=0.0, order=order + 1)
    order = max(order, 0.0)
    t_cut = h.T + 8 * h.width + 2 * abs(t) + 4
    while True:
        tangent = t_cut - min(_TAIL_WINDOW, t_cut / 2) - h.T - abs(t)
        rate = max(1.0 / h.width, 2 * tangent / h.width ** 2)
        if rate - order / (1 + t_cut) >= rate / 2:
            return t_cut, DecayProfile(rate=rate, order=order)
        t_cut += h.width


def h_double_closed(h, t: float, k: int, nu: complex) -> complex:
    """Замкнутая форма h**(t) = (1/2)h(t)Γ(1/2-it)Γ(1/2+it)/(Γ(k/2+ν̄+it)Γ(k/2+ν̄-it))."""
    nu_bar = complex(nu).conjugate()
    it = 1j * t
    return 0.5 * complex(h(t)) * complex(
        gamma_ratio([0.5 - it, 0.5 + it], [k / 2 + nu_bar + it, k / 2 + nu_bar - it]))


def h_double_transform(h, t: float, k: int, nu: complex, outer_path: Optional[VerticalPath] = None,
                       full_output: bool = False):
    """
    h**(t): двойной интеграл по σ_u = 1/2+2ε (внешний) и σ_w = ε (внутренний)
    с ядром Барнса, деленный на Γ(1/2-it)Γ(1/2+it).

    Args:
        h: Вес TestFunctionH либо четная функция (тогда нужен outer_path).
        t: Вещественная точка.
        k: Четный вес.
        nu: Спектральный параметр φ.
    """
    nu_bar = complex(nu).conjugate()
    it = 1j * t
    half_k = k / 2
    profile = None
    if outer_path is None:
        # внутренний интеграл убывает как |u|^{-2}
        t_cut, profile = weight_cut(h, -k - 2 * nu_bar.real, t)
        outer_path = path_for(0.5 + 2 * CONTOUR_EPS, t_cut)

    def integrand(u, w):
        outer = h(u / 1j) * u * gamma_ratio([0.5 + u, 0.5 - u],
                                            [half_k + nu_bar + u, half_k + nu_bar - u])
        barnes = gamma_ratio([u - w, 0.5 - w, 0.5 + w, w - it, w + it], [1 + w + u])
        return outer * barnes

    def inner_path(block):
        reach = float(np.max(np.abs(np.imag(block)))) + abs(t)
        return path_for(CONTOUR_EPS, 2 * reach + 12)

    value, err = double_vertical_integral(
        integrand, outer_path, inner_path, outer_profile=profile,
        inner_profile=DecayProfile(rate=math.pi, order=0.0), full_output=True)
    norm = complex(gamma_ratio([], [0.5 - it, 0.5 + it]))
    value, err = value * norm, err * abs(norm)
    return (value, err) if full_output else value


def vanishing_integral_check(h, k: int, nu: complex, ell: int, path: Optional[VerticalPath] = None,
                             full_output: bool = False):
    """
    (1/ℓ!)(1/2πi)∫_{(1/2+2ε)} h(u/i)·u·Γ(1/2+ℓ+u)Γ(1/2+ℓ-u)/(Γ(k/2+ν̄+u)Γ(k/2+ν̄-u)) du.

    Для четной h с h(±i/2) = 0 интеграл равен нулю.
    """
    if ell < 0:
        raise DomainError(f"ell must be non-negative, got {ell}.")
    nu_bar = complex(nu).conjugate()
    half_k = k / 2
    profile = None
    if path is None:
        t_cut, profile = weight_cut(h, 2 * ell + 2 - k - 2 * nu_bar.real)
        path = path_for(0.5 + 2 * CONTOUR_EPS, t_cut)

    def integrand(u):
        return h(u / 1j) * u * gamma_ratio([0.5 + ell + u, 0.5 + ell - u],
                                           [half_k + nu_bar + u, half_k + nu_bar - u])

    value, err = vertical_integral(integrand, path, profile, full_output=True)
    scale = 1.0 / math.factorial(ell)
    return (value * scale, err * scale) if full_output else value * scale
