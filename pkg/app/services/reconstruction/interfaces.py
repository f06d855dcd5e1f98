"""Exceções do serviço de reconstrução."""

from app.utils.responses import AppError, ConfigurationError, ErrorCode


class ReconstructionError(AppError):
    """Exceção base para erros da rede de reconstrução."""

    error_code = ErrorCode.INVALID_INPUT
    http_status = 400


class ReconstructionConfigError(ConfigurationError):
    """Configuração da rede inválida ou incompatível com a entrada."""
