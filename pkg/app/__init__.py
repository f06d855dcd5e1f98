import logging

from flask import Flask

from app.flask_config import Config
from app.utils.responses import AppError

logger = logging.getLogger(__name__)


def create_app() -> Flask:
    app = Flask(__name__)
    app.config.from_object(Config)

    from app.api.v1.blueprints import blueprint_v1 as api_v1_bp

    app.register_blueprint(api_v1_bp, url_prefix="/v1")

    @app.errorhandler(AppError)
    def handle_app_error(error: AppError):
        logger.warning(f"{error.__class__.__name__}: {error.message}")
        return error.to_json_response()

    from app.cli import evrec

    app.cli.add_command(evrec)

    return app
