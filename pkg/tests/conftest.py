import pytest
from click.testing import CliRunner

from app import create_app
from config import active_config


@pytest.fixture
def app():
    """Создает и настраивает тестовое приложение Flask."""
    app = create_app('testing')
    app.config.update({
        'TESTING': True,
    })

    with app.app_context():
        yield app


@pytest.fixture
def client(app):
    """Создает тестовый клиент для приложения."""
    return app.test_client()


@pytest.fixture
def runner():
    """Запускает команды click без отдельного процесса."""
    return CliRunner(mix_stderr=False)


@pytest.fixture
def no_catalog(monkeypatch):
    """Скрывает каталог форм Мааса, заданный через окружение."""
    monkeypatch.setattr(active_config(), 'MOMENTLAB_CATALOG', None)
