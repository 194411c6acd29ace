import os
from dotenv import load_dotenv

# Загрузка переменных окружения из .env файла
load_dotenv()


def _env_float(name, default):
    return float(os.environ.get(name, default))


class Config:
    """Базовый класс конфигурации."""
    SECRET_KEY = os.environ.get('SECRET_KEY', 'dev-secret-key')
    DEBUG = False
    TESTING = False
    LOG_LEVEL = 'INFO'

    # Кэш таблиц коэффициентов
    MOMENTLAB_CACHE_DIR = os.environ.get(
        'MOMENTLAB_CACHE_DIR', os.path.join(os.path.expanduser('~'), '.cache', 'momentlab'))

    # Бюджет точности по умолчанию
    ABS_TOL = _env_float('MOMENTLAB_ABS_TOL', 1e-12)
    REL_TOL = _env_float('MOMENTLAB_REL_TOL', 1e-10)
    MAX_TERMS = int(os.environ.get('MOMENTLAB_MAX_TERMS', 200000))

    # Каталог форм Мааса (CSV или JSON); без него проверки спектра пропускаются
    MOMENTLAB_CATALOG = os.environ.get('MOMENTLAB_CATALOG')

    # Затравки t_j для каталога уровня 1, вычисляемого коллокацией
    MAASS_SEEDS = os.environ.get('MOMENTLAB_MAASS_SEEDS', os.path.join(
        os.path.dirname(os.path.abspath(__file__)), 'data', 'maass_level1_seeds.csv'))
    MAASS_N_MAX = int(os.environ.get('MOMENTLAB_MAASS_N_MAX', 1000))

    # Пределы объема вычислений
    GAMMA_MAX = 4000
    DELTA_TABLE_LIMIT = 200000
    COSET_LIMIT = 2000000
    EISENSTEIN_C_MAX = 600
    FOURIER_MIN_Y = 0.3
    PETERSSON_Y = 8.0

    # Шаги предельного перехода (Ричардсон)
    LIMIT_STEPS = (0.02, 0.01, 0.005)

    # CORS настройки
    CORS_ORIGINS = [
        "http://localhost:5173",
        "http://127.0.0.1:5173"
    ]


class DevelopmentConfig(Config):
    """Конфигурация для разработки."""
    DEBUG = True
    LOG_LEVEL = 'DEBUG'
    CORS_ORIGINS = "*"


class TestingConfig(Config):
    """Конфигурация для тестирования."""
    TESTING = True
    DEBUG = True
    MOMENTLAB_CACHE_DIR = os.environ.get('MOMENTLAB_TEST_CACHE_DIR', os.path.join(
        os.path.dirname(os.path.abspath(__file__)), '.pytest_cache', 'momentlab'))


class ProductionConfig(Config):
    """Конфигурация для продакшена."""
    @classmethod
    def init_app(cls, app):
        assert os.environ.get('SECRET_KEY'), "SECRET_KEY must be set"
        assert os.environ.get(
            'MOMENTLAB_CACHE_DIR'), "MOMENTLAB_CACHE_DIR must be set"


# Словарь доступных конфигураций
config = {
    'development': DevelopmentConfig,
    'testing': TestingConfig,
    'production': ProductionConfig,
    'default': DevelopmentConfig
}


def active_config():
    """Возвращает класс конфигурации, выбранный через FLASK_CONFIG."""
    return config[os.environ.get('FLASK_CONFIG', 'default')]


def load_key_value_file(path):
    """
    Читает файл конфигурации запуска в формате key = value.

    Пустые строки и строки, начинающиеся с '#', пропускаются.
    Значения возвращаются строками; типы приводит RunConfigSchema.
    """
    values = {}
    with open(path, encoding='utf-8') as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith('#'):
                continue
            if '=' not in line:
                raise ValueError(
                    f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, value = line.split('=', 1)
            key = key.strip().lstrip('-').replace('-', '_')
            if not key:
                raise ValueError(f"{path}:{lineno}: empty key")
            values[key] = value.strip()
    return values
