"""Доменные типы momentlab.

Неизменяемые dataclass-объекты; инварианты проверяются в __post_init__.
"""
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from utils.error_handlers import DomainError, PoleError


def is_squarefree(n: int) -> bool:
    """Проверка бесквадратности целого n >= 1."""
    if n < 1:
        return False
    d = 2
    while d * d <= n:
        if n % (d * d) == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class PrecisionBudget:
    """Допуски и предельное число слагаемых для одной операции."""
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_terms: int = 200000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("Tolerances must be positive.")
        if self.max_terms < 1:
            raise DomainError("max_terms must be at least 1.")

    def allows(self, error: float, value: complex) -> bool:
        return error <= max(self.abs_tol, self.rel_tol * abs(value))


def budget_from_config(cfg=None) -> PrecisionBudget:
    """Строит PrecisionBudget из активной конфигурации."""
    if cfg is None:
        from config import active_config
        cfg = active_config()
    return PrecisionBudget(abs_tol=cfg.ABS_TOL, rel_tol=cfg.REL_TOL,
                           max_terms=cfg.MAX_TERMS)


@dataclass(frozen=True)
class CuspContext:
    """Касп 1/a группы Γ₀(N), a | N, N бесквадратно."""
    a: int
    N: int

    def __post_init__(self):
        if self.N < 1 or not is_squarefree(self.N):
            raise DomainError(f"Level N={self.N} must be squarefree.")
        if self.a < 1 or self.N % self.a:
            raise DomainError(f"a={self.a} must be a positive divisor of N={self.N}.")

    @property
    def width(self) -> int:
        """Ширина каспа m_a = N/a."""
        return self.N // self.a

    @property
    def is_infinity(self) -> bool:
        # 1/N эквивалентен бесконечности
        return self.a == self.N

    def scaling_matrix(self) -> np.ndarray:
        """σ_{1/a} = [[1,0],[a,1]]·diag(√m, 1/√m)."""
        m = self.width
        r = np.sqrt(m)
        return np.array([[r, 0.0], [self.a * r, 1.0 / r]])


@dataclass(frozen=True)
class UpperHalfPoint:
    x: float
    y: float

    def __post_init__(self):
        if not self.y > 0:
            raise DomainError(f"Point must lie in the upper half-plane, got y={self.y}.")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    @classmethod
    def from_complex(cls, z: complex) -> 'UpperHalfPoint':
        return cls(float(z.real), float(z.imag))

    def act(self, g) -> 'UpperHalfPoint':
        """Дробно-линейное действие целочисленной матрицы g."""
        (a, b), (c, d) = np.asarray(g)
        z = self.z
        return UpperHalfPoint.from_complex((a * z + b) / (c * z + d))


@dataclass(frozen=True)
class CosetList:
    """Представители Γ_{1/a}\\Γ₀(N) с высотой терма не ниже height_bound."""
    cusp: CuspContext
    matrices: np.ndarray
    height_bound: float

    def __len__(self):
        return len(self.matrices)

    @property
    def bottom_rows(self) -> np.ndarray:
        """Нижние строки (c, d) матриц σ^{-1}γ после снятия масштаба."""
        a = self.cusp.a
        g = self.matrices
        return np.stack([g[:, 1, 0] - a * g[:, 0, 0],
                         g[:, 1, 1] - a * g[:, 0, 1]], axis=1)


@dataclass(frozen=True)
class HoloForm:
    """Голоморфная новая форма веса k и бесквадратного уровня N.

    coeffs[n] = a(n) для 0 <= n <= n_max, coeffs[0] = 0.
    """
    weight: int
    level: int
    coeffs: Tuple[int, ...]
    label: str = ''

    def __post_init__(self):
        if self.weight < 2 or self.weight % 2:
            raise DomainError(f"Weight must be an even integer, got {self.weight}.")
        if not is_squarefree(self.level):
            raise DomainError(f"Level N={self.level} must be squarefree.")
        if len(self.coeffs) < 2 or self.coeffs[1] != 1:
            raise DomainError("Newform must satisfy a(1) = 1.")

    @property
    def n_max(self) -> int:
        return len(self.coeffs) - 1

    @property
    def a(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs])

    @property
    def A(self) -> np.ndarray:
        """Нормированные коэффициенты A(n) = a(n)/n^{(k-1)/2}."""
        n = np.arange(len(self.coeffs), dtype=float)
        n[0] = 1.0
        out = self.a / n ** ((self.weight - 1) / 2)
        out[0] = 0.0
        return out


@dataclass(frozen=True)
class MaassForm:
    """Одна точка дискретного спектра: t_j, четность, λ_j(n), ρ_j(1)."""
    t: float
    parity: int
    lam: Tuple[float, ...]
    rho1: float
    level: int = 1

    def __post_init__(self):
        if self.parity not in (0, 1):
            raise DomainError(f"Parity must be 0 or 1, got {self.parity}.")
        if not self.t > 0:
            raise DomainError(
                f"Spectral parameter t={self.t} is not a positive real; "
                "exceptional eigenvalues are not supported.")
        if len(self.lam) < 2 or abs(self.lam[1] - 1.0) > 1e-12:
            raise DomainError("Hecke eigenvalue table must start with lambda(1) = 1.")

    @property
    def n_max(self) -> int:
        return len(self.lam) - 1

    @property
    def eigenvalue(self) -> float:
        return 0.25 + self.t ** 2


@dataclass(frozen=True)
class SpectralCatalog:
    level: int
    forms: Tuple[MaassForm, ...]
    t_max: float
    provenance: str

    def __post_init__(self):
        ts = [f.t for f in self.forms]
        if ts != sorted(ts):
            raise DomainError("Catalog forms must be sorted by t.")
        if ts and ts[-1] > self.t_max:
            raise DomainError("Catalog contains forms beyond its t_max.")

    def __len__(self):
        return len(self.forms)

    def window(self, lo: float, hi: float) -> Tuple[MaassForm, ...]:
        return tuple(f for f in self.forms if lo <= f.t <= hi)


@dataclass(frozen=True)
class SmoothingSpec:
    """Параметры сглаженного вычисления L-функции.

    X: масштаб отсечения первой суммы; None означает сбалансированный выбор.
    """
    X: Optional[float] = None
    taper: str = 'gaussian'
    reflection: bool = True

    def __post_init__(self):
        if self.X is not None and not self.X > 0:
            raise DomainError("Cut X must be positive.")
        if self.taper != 'gaussian':
            raise DomainError(f"Unsupported taper {self.taper!r}.")

    def scaled(self, factor: float) -> 'SmoothingSpec':
        if self.X is None:
            raise DomainError("Cannot scale an unset cut.")
        return SmoothingSpec(X=self.X * factor, taper=self.taper, reflection=self.reflection)


@dataclass(frozen=True)
class ShiftPair:
    s: complex
    w: complex
    s_prime: complex

    @classmethod
    def of(cls, s: complex, w: complex, k: int) -> 'ShiftPair':
        return cls(s=s, w=w, s_prime=s + w + k / 2 - 1)

    def check(self, k: int) -> None:
        if abs(self.s_prime - (self.s + self.w + k / 2 - 1)) > 1e-14:
            raise DomainError("ShiftPair violates s' = s + w + k/2 - 1.")


@dataclass(frozen=True)
class VerticalPath:
    sigma: float
    t_cut: float
    n_points: int

    def __post_init__(self):
        if not self.t_cut > 0:
            raise DomainError("t_cut must be positive.")
        if self.n_points < 8:
            raise DomainError("A vertical path needs at least 8 points.")

    def refined(self) -> 'VerticalPath':
        return VerticalPath(self.sigma, self.t_cut, 2 * self.n_points)

    def extended(self) -> 'VerticalPath':
        return VerticalPath(self.sigma, 2 * self.t_cut, 2 * self.n_points)


@dataclass(frozen=True)
class DecayProfile:
    """|f(σ+it)| <= C·(1+|t|)^order·exp(-rate·|t|)."""
    rate: float
    order: float = 0.0

    def __post_init__(self):
        if self.rate < 0:
            raise DomainError("Decay rate must be non-negative.")


@dataclass(frozen=True)
class TestFunctionH:
    """Вес h_{T,α,R}(t)."""
    __test__ = False

    T: float
    alpha: float
    R: float

    def __post_init__(self):
        if not self.T > 1:
            raise DomainError("T must exceed 1.")
        if not (1 / 3 - 1e-12 <= self.alpha <= 1 + 1e-12):
            raise DomainError("alpha must lie in [1/3, 1].")
        if not (1 <= self.R < self.T ** 2):
            raise DomainError("R must satisfy 1 <= R < T^2.")

    @property
    def width(self) -> float:
        return self.T ** self.alpha

    def envelope(self, t):
        """Пара гауссовых пиков e^{-((t-T)/W)^2} + e^{-((t+T)/W)^2}."""
        t = np.asarray(t, dtype=complex)
        W = self.width
        return np.exp(-((t - self.T) / W) ** 2) + np.exp(-((t + self.T) / W) ** 2)

    def __call__(self, t):
        """h(t) для комплексного числа или массива."""
        t = np.asarray(t, dtype=complex)
        denom = t ** 2 + self.R
        if np.any(denom == 0):
            raise PoleError(f"h has poles at t = +-i*sqrt(R), R={self.R}.")
        value = self.envelope(t) * (t ** 2 + 0.25) / denom
        return complex(value) if value.ndim == 0 else value


@dataclass(frozen=True)
class HFamily:
    H1: float
    H2: float
    H3: float
    H4: float
    H10: float
    H0: float
    H01: float
    H1plus: Callable[[complex], complex] = field(repr=False, compare=False)
    H1minus: Callable[[complex], complex] = field(repr=False, compare=False)

    def as_dict(self) -> Dict[str, float]:
        return {'H1': self.H1, 'H2': self.H2, 'H3': self.H3, 'H4': self.H4,
                'H10': self.H10, 'H0': self.H0, 'H01': self.H01}


@dataclass(frozen=True)
class MainTermPiece:
    """
    Слагаемое главного члена второго момента: coefficient · (1/π²)∫ h(t)·t·tanh(πt)
    · Γ(k/2+numer_shift±it)/Γ(k/2+denom_shift±it) dt.
    """
    coefficient: complex
    numer_shift: complex
    denom_shift: complex
    label: str = ''


@dataclass
class MomentReport:
    spectral_discrete: complex
    spectral_continuous: complex
    main: complex
    e1: complex
    e2: complex
    truncation_budget: float
    discrepancy: float = 0.0
    budgets: Dict[str, float] = field(default_factory=dict)
    params: Dict[str, Any] = field(default_factory=dict)
    catalog_provenance: str = ''
    notes: Tuple[str, ...] = ()

    def __post_init__(self):
        self.discrepancy = abs(self.lhs - self.rhs)

    @property
    def lhs(self) -> complex:
        return self.spectral_discrete + self.spectral_continuous

    @property
    def rhs(self) -> complex:
        return self.main + self.e1 + self.e2

    @property
    def relative_discrepancy(self) -> float:
        scale = max(abs(self.lhs), abs(self.rhs))
        return self.discrepancy / scale if scale else self.discrepancy


@dataclass(frozen=True)
class RunConfig:
    command: str
    N: int = 1
    m: int = 1
    r: float = 0.0
    T: float = 12.0
    alpha: float = 1.0
    R: float = 100.0
    tol: float = 1e-8
    catalog: Optional[str] = None
    out: Optional[str] = None
    seed: int = 0
    points: int = 20

    def h_params(self) -> TestFunctionH:
        return TestFunctionH(T=self.T, alpha=self.alpha, R=self.R)


@dataclass(frozen=True)
class QuadratureSpec:
    """Панельная квадратура Гаусса-Лежандра по фундаментальной области."""
    panels_x: int = 6
    panels_y: int = 10
    order: int = 10
    height: float = 8.0

    def __post_init__(self):
        if min(self.panels_x, self.panels_y) < 1 or self.order < 4:
            raise DomainError("Quadrature needs at least one panel and order >= 4.")
        if not self.height > 1:
            raise DomainError("Truncation height must exceed 1.")

    def refined(self, factor: int = 2) -> 'QuadratureSpec':
        return QuadratureSpec(self.panels_x * factor, self.panels_y * factor,
                              self.order, self.height)


@dataclass(frozen=True)
class PhiSpec:
    """Второй сомножитель U_{f,φ}: g·y^{k/2} для голоморфной g либо E_N^{(k)}(·, 1/2+ir)."""
    kind: str
    form: Optional[HoloForm] = None
    r: float = 0.0
    level: int = 1

    def __post_init__(self):
        if self.kind not in ('holomorphic', 'eisenstein'):
            raise DomainError(f"Unknown phi kind {self.kind!r}.")
        if self.kind == 'holomorphic' and self.form is None:
            raise DomainError("Holomorphic phi needs a form.")
        if not is_squarefree(self.level):
            raise DomainError(f"Level N={self.level} must be squarefree.")

    @property
    def nu(self) -> complex:
        """Спектральный параметр ν: (k-1)/2 для голоморфной g, ir для ряда Эйзенштейна."""
        if self.kind == 'holomorphic':
            return complex((self.form.weight - 1) / 2)
        return complex(0, self.r)
