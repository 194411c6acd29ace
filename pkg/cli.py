"""
Командная строка momentlab: проверки формул и отчеты в JSON.

Код возврата 0, если все проверки прошли, 1 при провале хотя бы одной,
2 при ошибке конфигурации или нехватке данных.
"""
import functools
import json
import logging

import click
from marshmallow import ValidationError

from config import load_key_value_file
from schemas import RunConfigSchema
from services.maass_solver import build_catalog
from services.maassdata import save_catalog
from services.verification_service import run_command
from utils.error_handlers import CoverageError, MomentlabError, log_operation

logger = logging.getLogger(__name__)

EXIT_FAILED = 1
EXIT_CONFIG = 2


def run_options(fn):
    """Общие флаги всех команд; None означает «взять из файла или по умолчанию»."""
    options = [
        click.option('--N', 'N', type=int, help='Squarefree level N <= 30.'),
        click.option('--m', 'm', type=int, help='Shift m >= 1.'),
        click.option('--r', 'r', type=float, help='Spectral parameter r.'),
        click.option('--T', 'T', type=float, help='Centre T of the weight h.'),
        click.option('--alpha', 'alpha', type=float, help='Width exponent, 1/3 <= alpha <= 1.'),
        click.option('--R', 'R', type=float, help='Weight parameter, 1 <= R < T^2.'),
        click.option('--catalog', 'catalog', type=click.Path(dir_okay=False),
                     help='Maass form catalog (CSV or JSON).'),
        click.option('--out', 'out', type=click.Path(dir_okay=False), help='Write the JSON report here.'),
        click.option('--tol', 'tol', type=float, help='Tolerance.'),
        click.option('--seed', 'seed', type=int, help='Seed for random test points.'),
        click.option('--points', 'points', type=int, help='Random points per cusp.'),
        click.option('--config', 'config_file', type=click.Path(exists=True, dir_okay=False),
                     help='key = value file with defaults for the flags above.'),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def load_run_config(command, config_file=None, **flags):
    """Файл key = value поверх значений по умолчанию, флаги поверх файла."""
    values = {}
    if config_file:
        try:
            values.update(load_key_value_file(config_file))
        except ValueError as e:
            raise click.UsageError(str(e))
    values.update({key: value for key, value in flags.items() if value is not None})
    values['command'] = command
    try:
        return RunConfigSchema().load(values)
    except ValidationError as e:
        problems = '; '.join(f"{field}: {' '.join(map(str, msgs))}"
                             for field, msgs in e.messages.items())
        raise click.UsageError(f"Invalid configuration: {problems}")


def _execute(command, config_file, flags):
    config = load_run_config(command, config_file, **flags)
    try:
        report = run_command(config)
    except CoverageError as e:
        click.echo(f"Error: {e} (required: {e.required}, available: {e.available})", err=True)
        raise SystemExit(EXIT_CONFIG)
    except MomentlabError as e:
        click.echo(f"Error: {type(e).__name__}: {e}", err=True)
        raise SystemExit(EXIT_CONFIG)

    text = json.dumps(report, indent=2, ensure_ascii=False)
    if config.out:
        with open(config.out, 'w', encoding='utf-8') as fh:
            fh.write(text + '\n')
        log_operation('write', 'report', resource_id=config.out)
        failed = sum(1 for r in report['results'] if not r['passed'])
        click.echo(f"{command}: {'pass' if report['pass'] else 'FAIL'} "
                   f"({len(report['results'])} checks, {failed} failed) -> {config.out}")
    else:
        click.echo(text)
    if not report['pass']:
        raise SystemExit(EXIT_FAILED)


def command_body(command):
    def decorator(fn):
        @run_options
        @functools.wraps(fn)
        def wrapper(config_file=None, **flags):
            _execute(command, config_file, flags)
        return wrapper
    return decorator


@click.group()
@click.option('--log-level', default='WARNING', show_default=True,
              type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR']), help='Logging level.')
def cli(log_level):
    """Momentlab: numerical checks for Rankin-Selberg moment formulas."""
    logging.basicConfig(format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    logging.getLogger().setLevel(log_level)


@cli.group()
def verify():
    """Oracle checks: Eisenstein series, transforms, divisor sums, double series."""


@verify.command('eisenstein')
@command_body('verify-eisenstein')
def verify_eisenstein():
    """Coset sum against Fourier expansion at every cusp of level N."""


@verify.command('transforms')
@command_body('verify-transforms')
def verify_transforms():
    """Barnes lemma, the h** closed form and the vanishing integrals."""


@verify.command('divisors')
@command_body('verify-divisors')
def verify_divisors():
    """Closed forms of rho against the Ramanujan double sum; multiplicativity."""


@verify.command('symmetry')
@command_body('verify-symmetry')
def verify_symmetry():
    """Swap symmetry of the double Dirichlet series."""


@cli.command('first-moment')
@command_body('first-moment')
def first_moment():
    """Both sides of the first-moment identity with an itemized error budget."""


@cli.command('h-integrals')
@command_body('h-integrals')
def h_integrals():
    """Finite-difference identities for the shifted H-integrals."""


@cli.command('second-moment-main')
@command_body('second-moment-main')
def second_moment_main():
    """Main term of the second moment and its leading coefficient."""


@cli.command('build-catalog')
@click.option('--seeds', type=click.Path(exists=True, dir_okay=False),
              help='Seed file with t,parity rows; defaults to the shipped level-1 seeds.')
@click.option('--n-max', 'n_max', type=click.IntRange(min=50), help='Length of the Hecke eigenvalue table.')
@click.option('--out', 'out', required=True, type=click.Path(dir_okay=False), help='Catalog CSV to write.')
def build_catalog_command(seeds, n_max, out):
    """Level-1 Maass forms from spectral seeds by collocation, written as a catalog CSV."""
    try:
        catalog = build_catalog(seeds, n_max)
    except MomentlabError as e:
        click.echo(f"Error: {type(e).__name__}: {e}", err=True)
        raise SystemExit(EXIT_CONFIG)
    save_catalog(catalog, out)
    log_operation('write', 'catalog', resource_id=out)
    click.echo(f"build-catalog: {len(catalog)} forms, t_max={catalog.t_max} -> {out}")


if __name__ == '__main__':
    cli()
