from flask import Flask, jsonify, request
from flask_cors import CORS
from flask_restx import Api
import os
import logging
from logging.handlers import RotatingFileHandler
from dotenv import load_dotenv

# Загрузка переменных окружения
load_dotenv()

# Настройка логирования
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger('momentlab')


def _configure_file_logging(app):
    """Ротируемый лог-файл logs/momentlab.log вне режимов отладки и тестирования."""
    if app.debug or app.testing:
        return
    os.makedirs('logs', exist_ok=True)
    file_handler = RotatingFileHandler('logs/momentlab.log', maxBytes=10240, backupCount=10)
    file_handler.setFormatter(logging.Formatter(
        '%(asctime)s %(levelname)s: %(message)s [in %(pathname)s:%(lineno)d]'))
    file_handler.setLevel(logging.INFO)
    app.logger.addHandler(file_handler)
    logging.getLogger().addHandler(file_handler)


def create_app(config_name='default'):
    # Создание экземпляра приложения
    app = Flask(__name__)

    # Конфигурация из объекта config
    from config import config as app_config
    config_class = app_config[config_name]
    app.config.from_object(config_class)
    if hasattr(config_class, 'init_app'):
        config_class.init_app(app)

    CORS(app,
         resources={r"/api/*": {"origins": app.config['CORS_ORIGINS']}},
         methods=["GET", "POST", "OPTIONS"],
         allow_headers=["Content-Type"])

    app.config['PROPAGATE_EXCEPTIONS'] = True
    app.config['JSON_AS_ASCII'] = False
    logging.getLogger().setLevel(app.config['LOG_LEVEL'])
    _configure_file_logging(app)

    # API с документацией Swagger; по экземпляру на приложение
    api = Api(
        app,
        version='1.0',
        title='Momentlab API',
        description='Численные проверки формул для моментов L-функций Ранкина-Сельберга',
        doc='/api/docs'
    )

    from views.verify_restx import ns as verify_ns
    api.add_namespace(verify_ns, path='/api/v1/verify')

    from cli import cli
    app.cli.add_command(cli, name='momentlab')

    # API статус
    @app.route('/api/status')
    def api_status():
        return jsonify({
            'status': 'online',
            'message': 'Momentlab API работает',
            'version': '1.0.0'
        })

    # Маршрут для проверки здоровья системы
    @app.route('/health')
    def health_check():
        return {"status": "ok"}

    # Обработчик ошибки 404
    @app.errorhandler(404)
    def not_found(e):
        return jsonify({"error": "Resource not found", "path": request.path}), 404

    # Обработчик ошибки 500
    @app.errorhandler(500)
    def server_error(e):
        logger.error(f"Internal server error: {str(e)}")
        return jsonify({"error": "Internal server error", "message": str(e)}), 500

    logger.info("Momentlab application created (%s)", config_name)
    return app


# Запуск приложения
if __name__ == '__main__':
    app = create_app()
    port = int(os.environ.get('PORT', 8000))
    logger.info(f"Запуск приложения на порту {port}")
    app.run(host='0.0.0.0', port=port,
            debug=app.config['DEBUG'], threaded=True)
