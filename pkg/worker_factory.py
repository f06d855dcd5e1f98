from flask import Flask

from app.utils.logging_setup import configure_logging


def create_worker_app():
    app = Flask(__name__)
    app.config.from_object("app.flask_config.Config")
    configure_logging(app.config.get("LOG_LEVEL"))
    # NÃO registre blueprints: o worker só executa tasks de treino
    return app
