"""
Формы Мааса уровня 1 методом коллокации Хейхала.

Затравочное t_j уточняется по совпадению коэффициентов, найденных на двух
высотах Y; λ(p) для больших простых p снимаются дискретным преобразованием
Фурье на низких горизонталях, составные λ(n) восстанавливаются по
мультипликативности Гекке, а ρ(1) нормируется численным ⟨u, u⟩ = 1.
"""
import csv
import logging
import math
import os
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize
from sympy import primerange
from sympy.ntheory import factorint

from config import active_config
from models import MaassForm, QuadratureSpec, SpectralCatalog
from services.maassdata import (
    check_automorphy, check_hecke, eval_maass, load_catalog, petersson_inner_numeric,
    reduce_to_fundamental_domain, save_catalog)
from services.specfun import bessel_k
from utils.error_handlers import ConvergenceError, DomainError, HeckeViolationError, SchemaError

logger = logging.getLogger(__name__)

MIN_HEIGHT = math.sqrt(3) / 2
TRUNCATION_LOG = 40.0
EXTRA_POINTS = 20
HEIGHT_GRID = np.linspace(0.60, 0.84, 25)
HEIGHT_GAP = 0.05
BRACKET_START = 1e-6
BRACKET_MAX = 2e-2
CONSISTENCY_TOL = 1e-6
BLOCK_RATIO = 1.25
CATALOG_FILE = 'maass_level1.csv'


def _k_scaled(R: float, x) -> np.ndarray:
    """K̃(x) = e^{πR/2}·K_{iR}(x); порядок величины не зависит от R."""
    values = bessel_k(1j * R, np.atleast_1d(np.asarray(x, dtype=float)))
    return np.asarray(values).real * math.exp(math.pi * R / 2)


def _trig(parity: int):
    return np.sin if parity else np.cos


def expansion_length(R: float) -> int:
    """M: при y >= √3/2 слагаемые с n > M меньше e^{-TRUNCATION_LOG}."""
    return int(math.ceil((R + TRUNCATION_LOG) / (2 * math.pi * MIN_HEIGHT))) + 2


def _collocation_matrix(R: float, parity: int, M: int, Y: float, Q: int) -> np.ndarray:
    """
    V[n-1, l-1] = (2/Q)Σ_m √y*_m K̃(2πl y*_m) cs(2πl x*_m) cs(2πn x_m) - δ_{nl}√Y K̃(2πnY),
    где z*_m = x*_m + iy*_m есть образ x_m + iY в фундаментальной области.
    """
    cs = _trig(parity)
    x = (2 * np.arange(1, Q + 1) - 1) / (4 * Q)
    w = reduce_to_fundamental_domain(x + 1j * Y)
    l = np.arange(1, M + 1)
    kv = np.stack([_k_scaled(R, 2 * math.pi * n * w.imag) for n in l], axis=1)
    pulled = np.sqrt(w.imag)[:, None] * kv * cs(2 * math.pi * np.outer(w.real, l))
    V = (2.0 / Q) * cs(2 * math.pi * np.outer(l, x)) @ pulled
    V -= np.diag(math.sqrt(Y) * _k_scaled(R, 2 * math.pi * l * Y))
    return V


def _solve(R: float, parity: int, M: int, Y: float, Q: int) -> np.ndarray:
    """c(0..M) при нормировке c(1) = 1."""
    V = _collocation_matrix(R, parity, M, Y, Q)
    try:
        rest = np.linalg.solve(V[1:, 1:], -V[1:, 0])
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"Collocation system at R={R} is singular: {exc}")
    return np.concatenate([[0.0, 1.0], rest])


def _heights(R: float) -> Tuple[float, float]:
    """Две высоты Y < √3/2, на которых K̃(2πY) и K̃(4πY) далеки от нуля."""
    score = np.array([np.min(np.abs(_k_scaled(R, 2 * math.pi * np.array([1.0, 2.0]) * Y)))
                      for Y in HEIGHT_GRID])
    first = int(np.argmax(score))
    far = np.abs(HEIGHT_GRID - HEIGHT_GRID[first]) >= HEIGHT_GAP
    second = int(np.argmax(np.where(far, score, -1.0)))
    return float(HEIGHT_GRID[first]), float(HEIGHT_GRID[second])


def refine_eigenvalue(seed: float, parity: int) -> Tuple[float, np.ndarray]:
    """
    Уточняет спектральный параметр около seed.

    Собственное значение есть корень H(R) = c_{Y1}(2) - c_{Y2}(2); скобка
    seed ± δ расширяется от BRACKET_START до BRACKET_MAX.

    Returns:
        Пара (R, c(0..M)) с c(1) = 1.

    Raises:
        ConvergenceError: корня в скобке нет или коэффициенты на двух высотах
            расходятся либо нарушают соотношения Гекке.
    """
    if not seed > 0:
        raise DomainError(f"Seed must be positive, got {seed}.")
    M = expansion_length(seed + 1)
    Q = M + EXTRA_POINTS
    Y1, Y2 = _heights(seed)

    def mismatch(R):
        return _solve(R, parity, M, Y1, Q)[2] - _solve(R, parity, M, Y2, Q)[2]

    delta = BRACKET_START * max(1.0, seed)
    while delta <= BRACKET_MAX:
        lo, hi = seed - delta, seed + delta
        if mismatch(lo) * mismatch(hi) < 0:
            R = optimize.brentq(mismatch, lo, hi, xtol=1e-14, maxiter=200)
            break
        delta *= 10
    else:
        raise ConvergenceError(f"No eigenvalue of parity {parity} within {BRACKET_MAX} of {seed}.")

    head = _solve(R, parity, M, Y1, Q)
    other = _solve(R, parity, M, Y2, Q)
    spread = float(np.max(np.abs(head[2:7] - other[2:7])))
    hecke = max(abs(head[2] * head[3] - head[6]), abs(head[2] ** 2 - 1 - head[4]))
    if max(spread, hecke) > CONSISTENCY_TOL:
        raise ConvergenceError(
            f"R={R} is not an eigenvalue: height spread {spread:.2e}, Hecke defect {hecke:.2e}.")
    logger.info("Refined t=%.15f (parity %s) from seed %s; spread %.1e", R, parity, seed, spread)
    return R, head


def _block_coefficients(R: float, parity: int, head: np.ndarray, n_lo: int, n_hi: int,
                        wanted: Sequence[int]) -> Dict[int, float]:
    """
    c(n) для n из wanted ⊂ [n_lo, n_hi] по горизонтали Y = R/(2π n_lo):
    u(z) вычисляется в образах точек в фундаментальной области, а ДПФ дает
    c(n)√Y K̃(2πnY). На этой высоте K̃ без нулей на всем блоке.
    """
    cs = _trig(parity)
    Y = R / (2 * math.pi * n_lo)
    l_max = int(math.ceil((R + TRUNCATION_LOG) / (2 * math.pi * Y)))
    Q = (l_max + n_hi) // 2 + EXTRA_POINTS
    x = (2 * np.arange(1, Q + 1) - 1) / (4 * Q)
    w = reduce_to_fundamental_domain(x + 1j * Y)
    # 2ρ(1)K = K̃ при ρ(1) = e^{πR/2}/2
    scaled = MaassForm(t=R, parity=parity, lam=tuple(head), rho1=0.5 * math.exp(math.pi * R / 2))
    u = np.asarray(eval_maass(scaled, w)).real
    n = np.asarray(wanted, dtype=float)
    a = (2.0 / Q) * cs(2 * math.pi * np.outer(n, x)) @ u
    values = a / (math.sqrt(Y) * _k_scaled(R, 2 * math.pi * n * Y))
    return {int(p): float(v) for p, v in zip(wanted, values)}


def prime_coefficients(R: float, parity: int, head: np.ndarray, n_max: int) -> Dict[int, float]:
    """λ(p) для простых p <= n_max: малые из коллокации, остальные блоками с n_hi <= 1.25·n_lo."""
    M = len(head) - 1
    small = M // 2
    out = {int(p): float(head[p]) for p in primerange(2, min(small, n_max) + 1)}
    n_lo = small + 1
    while n_lo <= n_max:
        n_hi = min(n_max, max(n_lo, int(BLOCK_RATIO * n_lo)))
        primes = [int(p) for p in primerange(n_lo, n_hi + 1)]
        if primes:
            out.update(_block_coefficients(R, parity, head, n_lo, n_hi, primes))
        n_lo = n_hi + 1
    return out


def hecke_extend(primes: Dict[int, float], n_max: int) -> Tuple[float, ...]:
    """λ(0..n_max) по λ(p): λ(p^{e+1}) = λ(p)λ(p^e) - λ(p^{e-1}), λ(mn) = λ(m)λ(n) при (m,n) = 1."""
    powers: Dict[Tuple[int, int], float] = {}

    def prime_power(p: int, e: int) -> float:
        if e == 0:
            return 1.0
        if e == 1:
            return primes[p]
        if (p, e) not in powers:
            powers[(p, e)] = primes[p] * prime_power(p, e - 1) - prime_power(p, e - 2)
        return powers[(p, e)]

    lam = [0.0, 1.0]
    for n in range(2, n_max + 1):
        value = 1.0
        for p, e in factorint(n).items():
            value *= prime_power(int(p), int(e))
        lam.append(value)
    return tuple(lam)


def normalize(R: float, parity: int, lam: Sequence[float],
              quadrature: Optional[QuadratureSpec] = None) -> float:
    """ρ(1) с ⟨u, u⟩ = 1 по мере dx dy/y² на SL₂(ℤ)\\ℍ."""
    quadrature = quadrature or QuadratureSpec(height=active_config().PETERSSON_Y).refined()
    unit = MaassForm(t=R, parity=parity, lam=tuple(lam), rho1=1.0)
    evaluate = lambda z: eval_maass(unit, z)
    norm = petersson_inner_numeric(evaluate, evaluate, quadrature=quadrature).real
    if not norm > 0:
        raise ConvergenceError(f"Non-positive norm {norm} for t={R}.")
    return 1.0 / math.sqrt(norm)


def compute_maass_form(seed: float, parity: int, n_max: Optional[int] = None) -> MaassForm:
    """
    Форма Мааса уровня 1 около затравки: t, λ(1..n_max) и ρ(1).

    Raises:
        ConvergenceError: уточнение не сошлось или итоговая форма не автоморфна.
    """
    n_max = n_max or active_config().MAASS_N_MAX
    R, head = refine_eigenvalue(seed, parity)
    lam = hecke_extend(prime_coefficients(R, parity, head, n_max), n_max)
    form = MaassForm(t=R, parity=parity, lam=lam, rho1=normalize(R, parity, lam))
    residual = check_automorphy(form)
    if residual > 1e-6:
        raise ConvergenceError(f"Computed form t={R} fails automorphy (residual {residual:.2e}).")
    logger.info("Computed Maass form t=%.12f parity=%s rho1=%.6e n_max=%s", R, parity, form.rho1, n_max)
    return form


def read_seeds(path: str) -> Tuple[Dict[str, str], List[Tuple[float, int]]]:
    """Файл затравок: комментарии `# key=value` и таблица `t,parity`."""
    meta, rows = {}, []
    with open(path, encoding='utf-8') as fh:
        lines = fh.read().splitlines()
    for line in lines:
        if line.startswith('#'):
            key, _, value = line[1:].strip().partition('=')
            meta[key.strip()] = value.strip()
        elif line.strip():
            rows.append(line)
    reader = csv.DictReader(rows)
    if (reader.fieldnames or [])[:2] != ['t', 'parity']:
        raise SchemaError(f"{path}: expected header t,parity, got {reader.fieldnames}.")
    seeds = []
    for lineno, row in enumerate(reader, start=2):
        try:
            seeds.append((float(row['t']), int(row['parity'])))
        except (TypeError, ValueError):
            raise SchemaError(f"{path}: malformed seed row {lineno}.")
    if 'provenance' not in meta or 't_max' not in meta:
        raise SchemaError(f"{path}: '# provenance=' and '# t_max=' lines are mandatory.")
    return meta, seeds


def build_catalog(seeds_path: Optional[str] = None, n_max: Optional[int] = None) -> SpectralCatalog:
    """Каталог уровня 1 по файлу затравок; t_max берется из файла."""
    seeds_path = seeds_path or active_config().MAASS_SEEDS
    meta, seeds = read_seeds(seeds_path)
    if int(meta.get('level', 1)) != 1:
        raise DomainError("Collocation is implemented for level 1 only.")
    forms = sorted((compute_maass_form(t, parity, n_max) for t, parity in seeds), key=lambda f: f.t)
    return SpectralCatalog(level=1, forms=tuple(forms), t_max=float(meta['t_max']),
                           provenance=meta['provenance'])


def level_one_catalog(n_max: Optional[int] = None, cache_dir: Optional[str] = None) -> SpectralCatalog:
    """Каталог по затравкам из MAASS_SEEDS; результат кэшируется в MOMENTLAB_CACHE_DIR."""
    n_max = n_max or active_config().MAASS_N_MAX
    if cache_dir is None:
        cache_dir = active_config().MOMENTLAB_CACHE_DIR
    path = os.path.join(cache_dir, CATALOG_FILE)
    if os.path.exists(path):
        try:
            cached = load_catalog(path)
            if cached.forms and min(f.n_max for f in cached.forms) >= n_max:
                return cached
        except (SchemaError, DomainError, HeckeViolationError) as exc:
            logger.warning("Ignoring corrupt catalog cache %s: %s", path, exc)
    catalog = build_catalog(n_max=n_max)
    for form in catalog.forms:
        bad = check_hecke(form.lam)
        if bad:
            raise ConvergenceError(f"Computed form t={form.t} violates Hecke relations at {bad[:10]}.")
    try:
        save_catalog(catalog, path)
    except OSError as exc:
        logger.warning("Could not write catalog cache %s: %s", path, exc)
    return catalog


def shipped_catalog(level: int = 1, t_required: Optional[float] = None) -> Optional[SpectralCatalog]:
    """Каталог по поставляемым затравкам, если он годится для уровня и покрытия; иначе None."""
    if level != 1:
        return None
    meta, _ = read_seeds(active_config().MAASS_SEEDS)
    if t_required is not None and float(meta['t_max']) < t_required:
        return None
    return level_one_catalog()


def catalog_from_config(t_required: Optional[float] = None) -> Optional[SpectralCatalog]:
    """Каталог по пути MOMENTLAB_CATALOG, а без него поставляемый каталог уровня 1."""
    path = active_config().MOMENTLAB_CATALOG
    if path:
        return load_catalog(path, t_required=t_required)
    return shipped_catalog(1, t_required)
