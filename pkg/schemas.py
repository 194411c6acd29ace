from marshmallow import (
    Schema, ValidationError, fields, post_load, validate, validates, validates_schema)

from models import RunConfig, is_squarefree

COMMANDS = ('verify-eisenstein', 'verify-transforms', 'verify-divisors', 'verify-symmetry',
            'first-moment', 'h-integrals', 'second-moment-main')
REPORT_SCHEMA_VERSION = 1

# ---- Пользовательские поля ----


class ComplexField(fields.Field):
    """Комплексное число как {"re": .., "im": ..}; при загрузке допускается и вещественное."""

    def _serialize(self, value, attr, obj, **kwargs):
        if value is None:
            return None
        z = complex(value)
        return {'re': z.real, 'im': z.imag}

    def _deserialize(self, value, attr, data, **kwargs):
        if isinstance(value, dict):
            try:
                return complex(float(value['re']), float(value.get('im', 0.0)))
            except (KeyError, TypeError, ValueError):
                raise ValidationError("Complex value needs numeric 're' and 'im'.")
        try:
            return complex(float(value))
        except (TypeError, ValueError):
            raise ValidationError("Not a valid number.")

# ---- Каталог форм Мааса ----


class MaassRecordSchema(Schema):
    """Одна форма каталога: t, четность, ρ(1) и λ(1), ..., λ(n_max)."""
    t = fields.Float(required=True)
    parity = fields.Integer(required=True, validate=validate.OneOf(
        [0, 1], error="Parity must be 0 or 1."))
    rho1 = fields.Float(required=True)
    lam = fields.List(fields.Float(), required=True, validate=validate.Length(min=1))
    provenance = fields.String(load_default=None)

    @validates('t')
    def validate_t(self, value):
        if not value > 0:
            raise ValidationError(
                "Exceptional eigenvalues (t not a positive real) are not supported.")

    @validates('lam')
    def validate_lam(self, value):
        if abs(value[0] - 1.0) > 1e-12:
            raise ValidationError("Hecke eigenvalue list must start with lambda(1) = 1.")


class CatalogSchema(Schema):
    """Каталог в JSON: уровень, покрытие по t, источник и формы."""
    level = fields.Integer(load_default=1, validate=validate.Range(min=1))
    t_max = fields.Float(load_default=None, allow_none=True)
    provenance = fields.String(required=True, validate=validate.Length(min=1))
    forms = fields.List(fields.Nested(MaassRecordSchema), required=True)

    @validates('level')
    def validate_level(self, value):
        if not is_squarefree(value):
            raise ValidationError("Level must be squarefree.")

# ---- Параметры запуска ----


class RunConfigSchema(Schema):
    """Параметры команды CLI или HTTP-запроса."""
    command = fields.String(required=True, validate=validate.OneOf(COMMANDS))
    N = fields.Integer(load_default=1, validate=validate.Range(min=1, max=30))
    m = fields.Integer(load_default=1, validate=validate.Range(min=1))
    r = fields.Float(load_default=0.0)
    T = fields.Float(load_default=12.0, validate=validate.Range(min=1, min_inclusive=False))
    alpha = fields.Float(load_default=1.0)
    R = fields.Float(load_default=100.0)
    tol = fields.Float(load_default=1e-8, validate=validate.Range(min=0, min_inclusive=False))
    catalog = fields.String(load_default=None, allow_none=True)
    out = fields.String(load_default=None, allow_none=True)
    seed = fields.Integer(load_default=0)
    points = fields.Integer(load_default=20, validate=validate.Range(min=1, max=1000))

    @validates('N')
    def validate_level(self, value):
        if not is_squarefree(value):
            raise ValidationError("Level N must be squarefree.")

    @validates('alpha')
    def validate_alpha(self, value):
        if not (1 / 3 - 1e-12 <= value <= 1 + 1e-12):
            raise ValidationError("alpha must lie in [1/3, 1].")

    @validates_schema
    def validate_window(self, data, **kwargs):
        T, R = data.get('T', 12.0), data.get('R', 100.0)
        if not (1 <= R < T ** 2):
            raise ValidationError("R must satisfy 1 <= R < T^2.", field_name='R')

    @post_load
    def make_run_config(self, data, **kwargs):
        return RunConfig(**data)

# ---- Отчеты ----


class MomentReportSchema(Schema):
    """Обе стороны тождества первого момента и их расхождение."""
    spectral_discrete = ComplexField()
    spectral_continuous = ComplexField()
    main = ComplexField()
    e1 = ComplexField()
    e2 = ComplexField()
    lhs = ComplexField()
    rhs = ComplexField()
    discrepancy = fields.Float()
    relative_discrepancy = fields.Float()
    truncation_budget = fields.Float()
    budgets = fields.Dict(keys=fields.String(), values=fields.Float())
    params = fields.Dict()
    catalog_provenance = fields.String()
    notes = fields.List(fields.String())


class CheckResultSchema(Schema):
    """Одна проверка внутри отчета."""
    name = fields.String(required=True)
    value = ComplexField(allow_none=True)
    expected = ComplexField(allow_none=True)
    error = fields.Float(allow_none=True)
    tolerance = fields.Float(allow_none=True)
    passed = fields.Boolean(required=True)
    details = fields.Dict(load_default=dict)


class VerificationReportSchema(Schema):
    """JSON-отчет команды проверки."""
    schema_version = fields.Integer(dump_default=REPORT_SCHEMA_VERSION)
    command = fields.String(required=True)
    config = fields.Dict(required=True)
    results = fields.List(fields.Nested(CheckResultSchema), required=True)
    budgets = fields.Dict(keys=fields.String(), values=fields.Float())
    passed = fields.Boolean(required=True, data_key='pass')
    seed = fields.Integer()
    moment = fields.Nested(MomentReportSchema, allow_none=True)
