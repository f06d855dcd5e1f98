"""Exceções do serviço de treinamento."""

from app.utils.artifacts import ArtifactError
from app.utils.responses import AppError, ConfigurationError, ErrorCode, NumericError


class TrainingError(AppError):
    """Exceção base para erros de treinamento."""


class TrainingConfigError(ConfigurationError):
    """Configuração de treino inválida."""


class DatasetError(TrainingError):
    """Dataset vazio ou arquivo de eventos ilegível."""

    error_code = ErrorCode.IO_ERROR


class IncompatibleCheckpointError(ArtifactError):
    """Checkpoint incompatível com a configuração pedida."""

    error_code = ErrorCode.INCOMPATIBLE_CHECKPOINT
    http_status = 409


class TrainingDivergedError(NumericError):
    """Perda não finita; o diagnóstico do lote fica em dump_path."""

    def __init__(self, message: str, term: str, dump_path: str = ""):
        super().__init__(message)
        self.term = term
        self.dump_path = dump_path
