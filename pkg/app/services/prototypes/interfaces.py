"""Exceções do serviço de protótipos visuais."""

from app.utils.responses import AppError, ErrorCode


class PrototypeError(AppError):
    """Exceção base para erros de protótipos."""

    error_code = ErrorCode.INVALID_INPUT
    http_status = 400


class InsufficientImagesError(PrototypeError):
    """Categoria com menos imagens que clusters."""

    def __init__(self, message: str, category: str):
        super().__init__(message)
        self.category = category


class UnknownCategoryError(PrototypeError):
    """Categoria ausente do banco."""

    error_code = ErrorCode.RESOURCE_NOT_FOUND
    http_status = 404
