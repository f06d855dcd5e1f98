import os

from dotenv import load_dotenv

# Carregando dotenv para variáveis de ambiente
load_dotenv(override=True)


def _env_flag(name: str, default: str) -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes")


class Config:
    PRODUCTION = os.getenv("PRODUCTION", "false")

    DEBUG_MODE = True if PRODUCTION == "false" else False

    # Execução dos modelos
    DEVICE = os.getenv("EVREC_DEVICE", "cpu")
    RUNS_DIR = os.getenv("EVREC_RUNS_DIR", "runs")
    LOG_LEVEL = os.getenv("EVREC_LOG_LEVEL", "INFO")

    # Backend de codificação imagem-texto usado pela API e pelo CLI quando não informado
    BACKEND = os.getenv("EVREC_BACKEND", "stub:seed=7")

    # Checkpoint servido pela API de reconhecimento
    CHECKPOINT = os.getenv("EVREC_CHECKPOINT")
    CATEGORIES_FILE = os.getenv("EVREC_CATEGORIES_FILE")

    # Limite de upload de arquivos de eventos (bytes)
    MAX_CONTENT_LENGTH = int(os.getenv("EVREC_MAX_UPLOAD", str(64 * 1024 * 1024)))

    # Celery: fora de produção as tasks rodam de forma síncrona
    CELERY_BROKER_URL = os.getenv("CELERY_BROKER_URL", "memory://")
    CELERY_RESULT_BACKEND = os.getenv("CELERY_RESULT_BACKEND", "cache+memory://")
    CELERY_ALWAYS_EAGER = _env_flag("CELERY_ALWAYS_EAGER", "false" if PRODUCTION == "true" else "true")
