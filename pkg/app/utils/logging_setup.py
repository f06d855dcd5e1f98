"""Configuração única do logging para CLI, worker e servidor."""

import logging
from typing import Optional

from app.flask_config import Config

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"

_configured = False


def configure_logging(level: Optional[str] = None) -> None:
    global _configured
    resolved = (level or Config.LOG_LEVEL or "INFO").upper()
    if _configured:
        logging.getLogger().setLevel(resolved)
        return
    logging.basicConfig(level=resolved, format=LOG_FORMAT)
    # bibliotecas ruidosas
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("PIL").setLevel(logging.WARNING)
    _configured = True
