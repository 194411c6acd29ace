import logging

from flask_restx import Namespace, Resource, fields
from marshmallow import ValidationError

from schemas import COMMANDS, RunConfigSchema
from services import verification_service
from utils.error_handlers import handle_validation_error, handle_value_error, handle_exception, log_operation

logger = logging.getLogger(__name__)

# Создаем Namespace
ns = Namespace('verify', description='Численные проверки формул и тождеств')

# --- Модели данных для Swagger ---
run_config_model = ns.model('RunConfigInput', {
    'N': fields.Integer(description='Бесквадратный уровень N <= 30', default=1, example=6),
    'm': fields.Integer(description='Сдвиг m >= 1', default=1),
    'r': fields.Float(description='Спектральный параметр r', default=0.0),
    'T': fields.Float(description='Центр окна h', default=12.0),
    'alpha': fields.Float(description='Показатель ширины T^alpha, 1/3 <= alpha <= 1', default=1.0),
    'R': fields.Float(description='Параметр R, 1 <= R < T^2', default=100.0),
    'tol': fields.Float(description='Допуск', default=1e-8),
    'catalog': fields.String(description='Путь к каталогу форм Мааса на сервере'),
    'seed': fields.Integer(description='Зерно генератора тестовых точек', default=0),
    'points': fields.Integer(description='Число точек на касп', default=20),
})

check_model = ns.model('CheckResult', {
    'name': fields.String(),
    'value': fields.Raw(),
    'expected': fields.Raw(),
    'error': fields.Float(),
    'tolerance': fields.Float(),
    'passed': fields.Boolean(),
    'details': fields.Raw(),
})

report_model = ns.model('VerificationReport', {
    'schema_version': fields.Integer(),
    'command': fields.String(),
    'config': fields.Raw(),
    'results': fields.List(fields.Nested(check_model)),
    'budgets': fields.Raw(),
    'pass': fields.Boolean(),
    'seed': fields.Integer(),
    'moment': fields.Raw(description='Отчет первого момента (только first-moment)'),
})

# --- Ресурсы ---


@ns.route('/commands')
class CommandList(Resource):
    """Список доступных команд."""

    @ns.doc('list_commands')
    def get(self):
        """Получить список команд проверки"""
        return {'commands': list(COMMANDS)}, 200


@ns.route('/<string:command>')
@ns.param('command', 'Имя команды: ' + ', '.join(COMMANDS))
class RunCommand(Resource):
    """Запуск одной команды проверки."""

    @ns.doc('run_command')
    @ns.expect(run_config_model)
    @ns.response(200, 'Проверка выполнена (поле pass показывает итог)', model=report_model)
    @ns.response(400, 'Ошибка валидации параметров')
    @ns.response(422, 'Недостаточно данных (каталог или таблица коэффициентов)')
    def post(self, command):
        """Выполнить проверку и вернуть JSON-отчет"""
        try:
            payload = dict(ns.payload or {})
            payload['command'] = command
            config = RunConfigSchema().load(payload)

            log_operation(
                operation_type="verify",
                resource_type=command,
                details={"N": config.N, "seed": config.seed}
            )

            report = verification_service.run_command(config)
            return report, 200
        except ValidationError as e:
            return handle_validation_error(e)
        except ValueError as e:
            return handle_value_error(e, log_error=True, command=command)
        except Exception as e:
            handle_exception(e, f"verify {command}")
            return None
