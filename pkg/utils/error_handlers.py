from typing import Dict, Any, Iterable, Union, Tuple, Optional
from flask import current_app
from flask_restx import abort
import logging
from marshmallow import ValidationError as MarshmallowValidationError

# Настройка логгера
logger = logging.getLogger(__name__)


# ---- Иерархия исключений предметной области ----

class MomentlabError(ValueError):
    """Базовое исключение для всех численных ошибок библиотеки."""


class PoleError(MomentlabError):
    """Аргумент попал в полюс гамма-функции, дзета-функции или знаменателя."""


class DomainError(MomentlabError):
    """Аргументы вне поддерживаемой области."""


class ConvergenceError(MomentlabError):
    """Ряд или интеграл не сходится в запрошенной точке."""


class CapacityError(MomentlabError):
    """Запрошенный объем вычислений превышает настроенный предел."""


class SingularFactorError(MomentlabError):
    """Знаменатель 1 - p^x обращается в ноль; нужен предельный вариант."""


class SchemaError(MomentlabError):
    """Файл данных не соответствует ожидаемой схеме."""


class HeckeViolationError(MomentlabError):
    """Соотношения Гекке нарушены на таблице собственных значений."""

    def __init__(self, message: str, pairs: Iterable[Tuple[int, int]] = ()):
        super().__init__(message)
        self.pairs = list(pairs)


class CoverageError(MomentlabError):
    """Данных (таблицы коэффициентов или каталога) недостаточно."""

    def __init__(self, message: str, required: Optional[float] = None,
                 available: Optional[float] = None):
        super().__init__(message)
        self.required = required
        self.available = available


class TailBoundError(MomentlabError):
    """Наблюдаемое убывание подынтегральной функции противоречит профилю."""


class PathCollisionError(MomentlabError):
    """Полюс лежит на контуре интегрирования."""


class LimitInstabilityError(MomentlabError):
    """Экстраполяция Ричардсона не прошла проверку согласованности."""


# ---- Обработчики для REST API ----

def handle_validation_error(error: MarshmallowValidationError,
                            status_code: int = 400) -> Tuple[Dict[str, Any], int]:
    """
    Обработчик ошибок валидации Marshmallow.

    Args:
        error: Объект ошибки валидации.
        status_code: HTTP код состояния (по умолчанию 400).

    Returns:
        Tuple с сообщением об ошибке и статус-кодом.
    """
    return {'message': error.messages}, status_code


def handle_value_error(error: ValueError,
                       status_code: int = 400,
                       log_error: bool = False,
                       command: Optional[str] = None) -> Tuple[Dict[str, Any], int]:
    """
    Обработчик ошибок типа ValueError, включая ошибки предметной области.

    Ошибки покрытия получают код 422 и поля required/available.
    """
    if log_error:
        if command:
            logger.warning(f"{type(error).__name__} in {command}: {str(error)}")
        else:
            logger.warning(f"{type(error).__name__}: {str(error)}")

    body: Dict[str, Any] = {'message': str(error),
                            'error': type(error).__name__}
    if isinstance(error, CoverageError):
        body['required'] = error.required
        body['available'] = error.available
        status_code = 422
    elif isinstance(error, HeckeViolationError):
        body['pairs'] = [list(p) for p in error.pairs]
    return body, status_code


def handle_exception(error: Exception,
                     endpoint_name: str,
                     status_code: int = 500) -> None:
    """
    Обработчик непредвиденных исключений с логированием и abort.

    Args:
        error: Объект исключения.
        endpoint_name: Имя эндпоинта, где произошла ошибка.
        status_code: HTTP код состояния (по умолчанию 500).
    """
    current_app.logger.error(
        f"Error in {endpoint_name}: {str(error)}",
        exc_info=True
    )

    abort(status_code, message="An internal server error occurred.")


def log_operation(operation_type: str,
                  resource_type: str,
                  resource_id: Optional[Union[int, str]] = None,
                  details: Optional[Dict[str, Any]] = None) -> None:
    """
    Логирует операцию (запуск проверки, запись отчета).

    Args:
        operation_type: Тип операции (verify, compute, write).
        resource_type: Тип ресурса (eisenstein, first_moment, report).
        resource_id: Идентификатор ресурса, например путь к отчету (опционально).
        details: Дополнительная информация (опционально).
    """
    log_message = f"{operation_type.upper()} {resource_type}"

    if resource_id:
        log_message += f" #{resource_id}"

    if details:
        log_message += f" - {details}"

    logger.info(log_message)
