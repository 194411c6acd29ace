import json

from cli import cli


def test_help_lists_commands(runner):
    """Группа показывает все команды."""
    result = runner.invoke(cli, ['--help'])
    assert result.exit_code == 0
    for name in ('verify', 'first-moment', 'h-integrals', 'second-moment-main', 'build-catalog'):
        assert name in result.output


def test_non_squarefree_level_rejected(runner):
    """--N 4 отклоняется с кодом 2 и текстом использования."""
    result = runner.invoke(cli, ['verify', 'eisenstein', '--N', '4'])
    assert result.exit_code == 2
    assert 'squarefree' in result.stderr
    assert 'Usage' in result.stderr


def test_bad_alpha_rejected(runner):
    result = runner.invoke(cli, ['h-integrals', '--alpha', '0.2'])
    assert result.exit_code == 2
    assert 'alpha' in result.stderr


def test_first_moment_without_catalog(runner, no_catalog):
    """Без каталога команда сообщает нужное покрытие по t."""
    result = runner.invoke(cli, ['first-moment', '--m', '1', '--r', '0'])
    assert result.exit_code == 2
    assert 'catalog' in result.stderr
    assert 'required' in result.stderr


def test_config_file_and_flag_override(runner, tmp_path):
    """Значения файла перекрываются флагами."""
    config_file = tmp_path / 'run.cfg'
    config_file.write_text('# symmetry run\nN = 4\nseed = 7\n', encoding='utf-8')

    rejected = runner.invoke(cli, ['verify', 'symmetry', '--config', str(config_file)])
    assert rejected.exit_code == 2

    result = runner.invoke(cli, ['verify', 'symmetry', '--config', str(config_file), '--N', '1'])
    assert result.exit_code == 0, result.stderr
    report = json.loads(result.stdout)
    assert report['config']['N'] == 1
    assert report['config']['seed'] == 7
    assert report['seed'] == 7


def test_malformed_config_file(runner, tmp_path):
    config_file = tmp_path / 'run.cfg'
    config_file.write_text('N 1\n', encoding='utf-8')
    result = runner.invoke(cli, ['verify', 'symmetry', '--config', str(config_file)])
    assert result.exit_code == 2
    assert "key = value" in result.stderr


def test_report_written_to_file(runner, tmp_path):
    """С --out отчет пишется в файл и читается как JSON."""
    out = tmp_path / 'report.json'
    result = runner.invoke(cli, ['verify', 'symmetry', '--seed', '3', '--out', str(out)])
    assert result.exit_code == 0, result.stderr
    assert 'pass' in result.stdout
    report = json.loads(out.read_text(encoding='utf-8'))
    assert report['schema_version'] == 1
    assert report['command'] == 'verify-symmetry'
    assert report['pass'] is True
    assert len(report['results']) == 5
    assert all(r['passed'] for r in report['results'])
    assert set(report['results'][0]['value']) == {'re', 'im'}


def test_symmetry_is_deterministic(runner):
    first = runner.invoke(cli, ['verify', 'symmetry', '--seed', '11'])
    second = runner.invoke(cli, ['verify', 'symmetry', '--seed', '11'])
    assert first.exit_code == 0
    assert json.loads(first.stdout) == json.loads(second.stdout)


def test_h_integrals_suite(runner):
    """Тождества для производных H₁^- и H₁^+ проходят на трех наборах параметров."""
    result = runner.invoke(cli, ['h-integrals'])
    assert result.exit_code == 0, result.stdout
    report = json.loads(result.stdout)
    assert report['pass'] is True
    assert len(report['results']) == 12
    settings = {tuple(r['details'][key] for key in ('T', 'alpha', 'R')) for r in report['results']}
    assert len(settings) == 3


def test_build_catalog_rejects_bad_seeds(runner, tmp_path):
    """Файл затравок без provenance дает код 2 и не создает каталог."""
    seeds = tmp_path / 'seeds.csv'
    seeds.write_text('# t_max=10\nt,parity\n9.5,1\n', encoding='utf-8')
    out = tmp_path / 'catalog.csv'
    result = runner.invoke(cli, ['build-catalog', '--seeds', str(seeds), '--out', str(out)])
    assert result.exit_code == 2
    assert 'SchemaError' in result.stderr
    assert not out.exists()
