import json


def test_health(client):
    response = client.get('/health')
    assert response.status_code == 200
    assert response.json == {'status': 'ok'}


def test_list_commands(client):
    response = client.get('/api/v1/verify/commands')
    assert response.status_code == 200
    assert 'first-moment' in response.json['commands']
    assert len(response.json['commands']) == 7


def test_symmetry_api_success(client):
    """Проверка симметрии двойного ряда через API."""
    response = client.post('/api/v1/verify/verify-symmetry', json={'N': 1, 'seed': 2})

    assert response.status_code == 200
    data = json.loads(response.data)
    assert data['command'] == 'verify-symmetry'
    assert data['pass'] is True
    assert data['seed'] == 2
    assert data['config']['N'] == 1
    assert len(data['results']) == 5


def test_validation_error(client):
    """Не бесквадратный уровень отклоняется с кодом 400."""
    response = client.post('/api/v1/verify/verify-eisenstein', json={'N': 4})
    assert response.status_code == 400
    assert 'N' in response.json['message']


def test_window_validation(client):
    response = client.post('/api/v1/verify/h-integrals', json={'T': 5.0, 'R': 30.0})
    assert response.status_code == 400
    assert 'R' in response.json['message']


def test_unknown_command(client):
    response = client.post('/api/v1/verify/no-such-check', json={})
    assert response.status_code == 400
    assert 'command' in response.json['message']


def test_missing_catalog(client, no_catalog):
    """Без каталога first-moment возвращает 422 с требуемым покрытием."""
    response = client.post('/api/v1/verify/first-moment', json={'m': 1, 'r': 0.0})
    assert response.status_code == 422
    assert response.json['error'] == 'CoverageError'
    assert response.json['required'] > 12.0
    assert response.json['available'] == 0.0


def test_unknown_level_for_reference_form(client):
    response = client.post('/api/v1/verify/verify-symmetry', json={'N': 7})
    assert response.status_code == 400
    assert response.json['error'] == 'DomainError'
