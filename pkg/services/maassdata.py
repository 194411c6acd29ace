"""Данные дискретного спектра: загрузка и проверка каталога форм Мааса,
вычисление форм в точке и численные скалярные произведения Петерссона."""
import csv
import json
import logging
import math
import os
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from marshmallow import ValidationError
from numpy.polynomial.legendre import leggauss

from config import active_config
from models import HoloForm, MaassForm, PhiSpec, QuadratureSpec, SpectralCatalog, UpperHalfPoint
from schemas import CatalogSchema, MaassRecordSchema
from services.arithmetic import divisors
from services.eisenstein import gamma0_coset_reps, raised_eisenstein_values
from services.specfun import EPS, bessel_k
from utils.error_handlers import (
    ConvergenceError, CoverageError, DomainError, HeckeViolationError, SchemaError)

logger = logging.getLogger(__name__)

HECKE_TOL = 1e-9
AUTOMORPHY_TOL = 1e-4

Integrand = Callable[[np.ndarray], np.ndarray]


# ---- Проверки таблиц ----

def check_hecke(lam: Sequence[float], level: int = 1, tol: float = HECKE_TOL) -> List[Tuple[int, int]]:
    """
    Пары (m, n), m <= n, mn <= n_max, на которых нарушено
    λ(m)λ(n) = Σ_{d | (m,n), (d,N)=1} λ(mn/d²).
    """
    n_max = len(lam) - 1
    bad = []
    for m in range(2, int(math.isqrt(n_max)) + 1):
        for n in range(m, n_max // m + 1):
            g = math.gcd(m, n)
            rhs = sum(lam[m * n // (d * d)] for d in divisors(g) if math.gcd(d, level) == 1)
            if abs(lam[m] * lam[n] - rhs) > tol:
                bad.append((m, n))
    return bad


def maass_coefficient(form: MaassForm, n: int) -> float:
    """ρ_j(n) = ρ_j(1)λ_j(|n|), со знаком (-1)^α при n < 0; ρ_j(0) = 0."""
    if n == 0:
        return 0.0
    if abs(n) > form.n_max:
        raise CoverageError(f"Coefficient n={n} beyond table length {form.n_max}.",
                            required=abs(n), available=form.n_max)
    value = form.rho1 * form.lam[abs(n)]
    return -value if (n < 0 and form.parity) else value


# ---- Вычисление форм ----

def _as_points(z) -> Tuple[np.ndarray, bool]:
    if isinstance(z, UpperHalfPoint):
        return np.array([z.z]), True
    arr = np.asarray(z, dtype=complex)
    return np.atleast_1d(arr), arr.ndim == 0


def reduce_to_fundamental_domain(z) -> np.ndarray:
    """Сдвигами и инверсией z -> -1/z переводит точки в |x| <= 1/2, |z| >= 1."""
    w = np.atleast_1d(np.asarray(z, dtype=complex)).copy()
    if np.any(w.imag <= 0):
        raise DomainError("Points must lie in the upper half-plane.")
    for _ in range(200):
        w = w - np.round(w.real)
        inside = np.abs(w) < 1 - 1e-14
        if not np.any(inside):
            return w
        w[inside] = -1 / w[inside]
    raise ConvergenceError("Reduction to the fundamental domain did not terminate.")


def eval_maass(form: MaassForm, z, n_max: Optional[int] = None, complex_phase: bool = False,
               full_output: bool = False):
    """
    u_j(z) = 2ρ_j(1)Σ_{n>=1} λ(n)√y K_{it}(2πny)·cos(2πnx) для четной формы
    и с sin(2πnx) для нечетной.

    При complex_phase=True нечетная форма умножается на i, что дает
    Σ_{n≠0} ρ_j(n)√y K_{it}(2π|n|y)e(nx) с ρ_j(-n) = -ρ_j(n).

    Raises:
        DomainError: если min y < FOURIER_MIN_Y.
    """
    pts, scalar = _as_points(z)
    x, y = pts.real, pts.imag
    min_y = active_config().FOURIER_MIN_Y
    if np.min(y) < min_y:
        raise DomainError(f"eval_maass needs y >= {min_y}; reduce z first.")
    needed = int(math.ceil((form.t + 40.0) / (2 * math.pi * float(np.min(y)))))
    n_use = min(form.n_max, needed if n_max is None else n_max)
    total = np.zeros(pts.shape)
    err = np.zeros(pts.shape)
    trig = np.sin if form.parity else np.cos
    for n in range(1, n_use + 1):
        kv, kv_err = bessel_k(1j * form.t, 2 * math.pi * n * y, full_output=True)
        weight = form.lam[n] * np.sqrt(y)
        total += weight * kv.real * trig(2 * math.pi * n * x)
        err += np.abs(weight) * kv_err
    total *= 2 * form.rho1
    err = 2 * abs(form.rho1) * err + 16 * EPS * np.abs(total)
    if n_use < needed:
        # оценка хвоста по последнему слагаемому
        kv_last = np.abs(bessel_k(1j * form.t, 2 * math.pi * n_use * y).real)
        err += 2 * abs(form.rho1) * np.sqrt(n_use * y) * kv_last * (needed - n_use)
        logger.debug("eval_maass: table ends at n=%s, wanted %s", n_use, needed)
    value = total.astype(complex) * 1j if (complex_phase and form.parity) else total
    if scalar:
        value, err = value[0], float(err[0])
    return (value, err) if full_output else value


def eval_holoform(f: HoloForm, z, full_output: bool = False):
    """
    f(z) = Σ a(n)e(nz), обрезка по убыванию |q|^n с оценкой |a(n)| <= d(n)n^{(k-1)/2}.

    Raises:
        CoverageError: если таблицы коэффициентов не хватает для min y.
    """
    pts, scalar = _as_points(z)
    y_min = float(np.min(pts.imag))
    if y_min <= 0:
        raise DomainError("eval_holoform needs points in the upper half-plane.")
    k = f.weight
    n = np.arange(1, f.n_max + 1, dtype=float)
    envelope = 2 * n ** (k / 2 + 1) * np.exp(-2 * math.pi * n * y_min)
    small = np.nonzero(envelope < 1e-17 * max(1.0, float(envelope.max())))[0]
    small = small[small > np.argmax(envelope)]
    if small.size == 0:
        required = int(math.ceil((k / 2 + 1) * 8 / (2 * math.pi * y_min))) + f.n_max
        raise CoverageError(f"Coefficient table of length {f.n_max} is too short for y={y_min:.3g}.",
                            required=required, available=f.n_max)
    n_use = int(small[0]) + 1
    q = np.exp(2j * math.pi * pts)
    coeffs = f.a[1:n_use + 1]
    # схема Горнера по q
    value = np.zeros(pts.shape, dtype=complex)
    for c in coeffs[::-1]:
        value = (value + c) * q
    err = np.full(pts.shape, float(envelope[n_use - 1:].sum())) + 16 * EPS * np.abs(value)
    if scalar:
        value, err = complex(value[0]), float(err[0])
    return (value, err) if full_output else value


def u_product(f: HoloForm, phi: PhiSpec, z):
    """
    U_{f,φ}(z) = y^{k/2}·conj(f(z))·φ(z), где φ = g·y^{k/2} либо φ = E_N^{(k)}(z, 1/2+ir).
    """
    pts, scalar = _as_points(z)
    k = f.weight
    y_half = pts.imag ** (k / 2)
    fz = eval_holoform(f, pts)
    if phi.kind == 'holomorphic':
        if phi.form.weight != k:
            raise DomainError("f and g must have the same weight.")
        phi_z = eval_holoform(phi.form, pts) * y_half
    else:
        phi_z = raised_eisenstein_values(phi.r, k, phi.level, pts)
    value = y_half * np.conj(fz) * phi_z
    return complex(value[0]) if scalar else value


# ---- Квадратура Петерссона ----

def _domain_nodes(spec: QuadratureSpec, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Узлы и веса (с мерой dx dy/y²) для {|x| <= 1/2, |z| >= 1, y <= Y}."""
    g, w = leggauss(order)
    edges = np.linspace(-0.5, 0.5, spec.panels_x + 1)
    half = np.diff(edges) / 2
    xs = ((edges[:-1] + edges[1:]) / 2)[:, None] + half[:, None] * g[None, :]
    wx = (half[:, None] * w[None, :]).ravel()
    xs = xs.ravel()
    tau_edges = np.linspace(0.0, 1.0, spec.panels_y + 1)
    tau_half = np.diff(tau_edges) / 2
    tau = (((tau_edges[:-1] + tau_edges[1:]) / 2)[:, None] + tau_half[:, None] * g[None, :]).ravel()
    wtau = (tau_half[:, None] * w[None, :]).ravel()
    y0 = np.sqrt(1 - xs ** 2)
    span = spec.height - y0
    ys = y0[:, None] + span[:, None] * tau[None, :]
    weights = wx[:, None] * span[:, None] * wtau[None, :] / ys ** 2
    z = xs[:, None] + 1j * ys
    return z.ravel(), weights.ravel()


def _moebius(g: np.ndarray, z: np.ndarray) -> np.ndarray:
    (a, b), (c, d) = g
    return (a * z + b) / (c * z + d)


def _tiled_integrand(F: Integrand, G: Integrand, reps: List[np.ndarray], z: np.ndarray) -> np.ndarray:
    total = np.zeros(z.shape, dtype=complex)
    for g in reps:
        w = _moebius(g, z)
        total += np.asarray(F(w)) * np.conj(np.asarray(G(w)))
    return total


def _cusp_tail(F: Integrand, G: Integrand, reps: List[np.ndarray], height: float) -> float:
    """Хвост над y = Y по экспоненциальному убыванию средних |F·conj G|/y²."""
    x = np.linspace(-0.5, 0.5, 33)
    step = 0.5
    m0 = float(np.mean(np.abs(_tiled_integrand(F, G, reps, x + 1j * height)))) / height ** 2
    m1 = float(np.mean(np.abs(_tiled_integrand(F, G, reps, x + 1j * (height + step))))) / (height + step) ** 2
    if m0 == 0.0:
        return 0.0
    if m1 >= m0:
        raise ConvergenceError(
            f"Integrand does not decay in the cusp (|f| {m0:.3e} -> {m1:.3e}); "
            "a cuspidal factor is required.")
    rate = math.log(m0 / max(m1, 1e-300)) / step
    return m0 / rate


def petersson_inner_numeric(F: Integrand, G: Integrand, N: int = 1,
                            quadrature: Optional[QuadratureSpec] = None, full_output: bool = False):
    """
    ⟨F, G⟩ = ∬_{Γ₀(N)\\ℍ} F(z)·conj(G(z)) dx dy/y².

    Область Γ₀(N)\\ℍ составлена из сдвигов стандартной области SL₂(ℤ)
    представителями Γ₀(N)\\SL₂(ℤ); F и G вызываются на массивах точек
    и должны быть определены на всей верхней полуплоскости.

    Returns:
        Значение (и оценку ошибки: разность порядков квадратуры плюс хвост над Y).

    Raises:
        ConvergenceError: если убывание в каспе не обнаружено.
    """
    if quadrature is None:
        quadrature = QuadratureSpec(height=active_config().PETERSSON_Y)
    reps = gamma0_coset_reps(N)
    z, w = _domain_nodes(quadrature, quadrature.order)
    value = complex(np.dot(w, _tiled_integrand(F, G, reps, z)))
    z_c, w_c = _domain_nodes(quadrature, quadrature.order - 2)
    coarse = complex(np.dot(w_c, _tiled_integrand(F, G, reps, z_c)))
    tail = _cusp_tail(F, G, reps, quadrature.height)
    err = abs(value - coarse) + tail
    logger.debug("petersson_inner_numeric N=%s nodes=%s value=%s err=%.3e",
                 N, z.size * len(reps), value, err)
    return (value, err) if full_output else value


# ---- Каталог ----

def _form_from_record(record: Dict, level: int) -> MaassForm:
    lam = (0.0,) + tuple(float(v) for v in record['lam'])
    return MaassForm(t=float(record['t']), parity=int(record['parity']), lam=lam,
                     rho1=float(record['rho1']), level=level)


def _read_csv_catalog(path: str, text: str) -> Tuple[Dict[str, str], List[Dict]]:
    meta, rows = {}, []
    for line in text.splitlines():
        if line.startswith('#'):
            key, _, value = line[1:].strip().partition('=')
            meta[key.strip()] = value.strip()
        elif line.strip():
            rows.append(line)
    if not rows:
        return meta, []
    reader = csv.DictReader(rows)
    header = reader.fieldnames or []
    if header[:3] != ['t', 'parity', 'rho1'] or any(
            h != f"lam{i}" for i, h in enumerate(header[3:], start=2)):
        raise SchemaError(f"{path}: expected header t,parity,rho1,lam2,lam3,..., got {header}.")
    records = []
    for lineno, row in enumerate(reader, start=2):
        try:
            records.append({'t': row['t'], 'parity': row['parity'], 'rho1': row['rho1'],
                            'lam': [1.0] + [float(row[h]) for h in header[3:]]})
        except (TypeError, ValueError):
            raise SchemaError(f"{path}: malformed row {lineno}.")
    return meta, records


def load_catalog(path: str, t_required: Optional[float] = None, check_automorphy_residual: bool = True,
                 seed: int = 0) -> SpectralCatalog:
    """
    Загружает каталог форм Мааса из CSV (`t,parity,rho1,lam2,...` с комментариями
    `# provenance=`, `# level=`, `# t_max=`) или из JSON (CatalogSchema).

    Каждая форма проходит проверку соотношений Гекке, а на уровне 1 еще и
    проверку автоморфности |u(-1/z) - u(z)| <= 1e-4.

    Raises:
        SchemaError: формат файла, пустой provenance, исключительные собственные значения.
        HeckeViolationError: со списком нарушающих пар (m, n).
        CoverageError: если t_max < t_required.
    """
    with open(path, encoding='utf-8') as fh:
        text = fh.read()
    if not text.strip():
        catalog = SpectralCatalog(level=1, forms=(), t_max=0.0, provenance='')
        _check_coverage(catalog, t_required)
        return catalog

    try:
        if path.endswith('.json'):
            raw = json.loads(text)
            if isinstance(raw, list):
                provenances = sorted({r.get('provenance') or '' for r in raw} - {''})
                raw = {'provenance': '; '.join(provenances), 'forms': raw}
            data = CatalogSchema().load(raw)
            level, t_max, provenance = data['level'], data['t_max'], data['provenance']
            records = data['forms']
        else:
            meta, rows = _read_csv_catalog(path, text)
            provenance = meta.get('provenance', '')
            if not provenance:
                raise SchemaError(f"{path}: a '# provenance=' line is mandatory.")
            level = int(meta.get('level', 1))
            t_max = float(meta['t_max']) if 't_max' in meta else None
            records = [MaassRecordSchema().load(r) for r in rows]
    except ValidationError as exc:
        raise SchemaError(f"{path}: {exc.messages}")
    except (json.JSONDecodeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"{path}: {exc}")

    try:
        forms = sorted((_form_from_record(r, level) for r in records), key=lambda f: f.t)
    except DomainError as exc:
        raise SchemaError(f"{path}: {exc}")
    for form in forms:
        bad = check_hecke(form.lam, level)
        if bad:
            raise HeckeViolationError(
                f"{path}: form t={form.t} violates Hecke relations at {bad[:10]}.", bad)
        if check_automorphy_residual and level == 1:
            residual = check_automorphy(form, seed=seed)
            if residual > AUTOMORPHY_TOL:
                raise SchemaError(
                    f"{path}: form t={form.t} fails the automorphy check (residual {residual:.2e}).")
    if t_max is None:
        t_max = forms[-1].t if forms else 0.0
    try:
        catalog = SpectralCatalog(level=level, forms=tuple(forms), t_max=float(t_max),
                                  provenance=provenance)
    except DomainError as exc:
        raise SchemaError(f"{path}: {exc}")
    _check_coverage(catalog, t_required)
    logger.info("Loaded %s Maass forms (level %s, t_max=%s) from %s", len(catalog), level, t_max, path)
    return catalog


def _check_coverage(catalog: SpectralCatalog, t_required: Optional[float]) -> None:
    if t_required is not None and catalog.t_max < t_required:
        raise CoverageError(
            f"Catalog covers t <= {catalog.t_max}, but t <= {t_required:.4g} is required.",
            required=t_required, available=catalog.t_max)


def save_catalog(catalog: SpectralCatalog, path: str) -> None:
    """Пишет каталог в CSV-формат, читаемый load_catalog."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    n_max = min((f.n_max for f in catalog.forms), default=1)
    with open(path, 'w', newline='', encoding='utf-8') as fh:
        fh.write(f"# provenance={catalog.provenance}\n# level={catalog.level}\n# t_max={catalog.t_max!r}\n")
        if not catalog.forms:
            return
        writer = csv.writer(fh)
        writer.writerow(['t', 'parity', 'rho1'] + [f"lam{n}" for n in range(2, n_max + 1)])
        for form in catalog.forms:
            writer.writerow([repr(form.t), form.parity, repr(form.rho1)]
                            + [repr(v) for v in form.lam[2:n_max + 1]])


def check_automorphy(form: MaassForm, points: int = 10, seed: int = 0) -> float:
    """
    max |u(-1/z) - u(z)| по случайным точкам вблизи единичной окружности.

    Raises:
        DomainError: для уровня N > 1.
    """
    if form.level != 1:
        raise DomainError("Automorphy residual check is implemented for level 1 only.")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(math.pi / 3 + 0.05, 2 * math.pi / 3 - 0.05, points)
    radius = rng.uniform(0.95, 1.05, points)
    z = radius * np.exp(1j * theta)
    residual = np.abs(eval_maass(form, -1 / z) - eval_maass(form, z))
    return float(np.max(residual))
