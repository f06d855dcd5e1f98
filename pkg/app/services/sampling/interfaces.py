"""Exceções do serviço de amostragem confiável (RDS)."""

from app.utils.responses import AppError, ConfigurationError, ErrorCode


class SamplingError(AppError):
    """Exceção base para erros de amostragem."""

    error_code = ErrorCode.INVALID_INPUT
    http_status = 400


class SamplingConfigError(ConfigurationError):
    """K inválido."""


class LengthMismatchError(SamplingError):
    """Vetores de predição com tamanhos diferentes."""


class ProbabilityRangeError(SamplingError):
    """Probabilidade fora de [0, 1], não finita ou linha que não soma 1."""
