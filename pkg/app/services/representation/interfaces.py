"""Exceções do serviço de representação de eventos."""

from app.utils.responses import AppError, ConfigurationError, ErrorCode


class RepresentationError(AppError):
    """Exceção base para erros de construção de tensores de eventos."""

    error_code = ErrorCode.INVALID_INPUT
    http_status = 400


class DegenerateInputError(RepresentationError):
    """Entrada sem eventos ou com geometria incompatível."""


class InvalidRectError(RepresentationError):
    """Retângulo de recorte fora da grade."""


class InvalidCropConfigError(ConfigurationError):
    """Tamanho de recorte maior que o quadro."""
