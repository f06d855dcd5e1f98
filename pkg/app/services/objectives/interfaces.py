"""Exceções do serviço de funções de perda."""

from app.utils.responses import AppError, ErrorCode, NumericError


class ObjectiveError(AppError):
    """Exceção base para erros nas perdas."""

    error_code = ErrorCode.INVALID_INPUT
    http_status = 400


class PseudoLabelRangeError(ObjectiveError):
    """Pseudo-rótulo fora do intervalo de categorias."""


class ShapeMismatchError(ObjectiveError):
    """Tamanhos incompatíveis entre recortes ou features."""


class MissingPrototypeError(ObjectiveError):
    """Categoria sem protótipos no banco."""


class NonFiniteLossError(NumericError):
    """Termo de perda não finito."""

    def __init__(self, message: str, term: str):
        super().__init__(message)
        self.term = term
