"""
Interfaces para o serviço de avaliação.

MetricPlugin é o gancho para métricas extras de qualidade de imagem (FID, IS);
os valores ficam em EvalReport.extra_metrics.
"""

from abc import ABC, abstractmethod

import torch

from app.utils.responses import AppError, ErrorCode


class MetricPlugin(ABC):
    """Métrica calculada sobre as reconstruções do conjunto avaliado."""

    name: str = ""

    @abstractmethod
    def compute(self, images: torch.Tensor, report) -> float:
        """
        Calcula a métrica.

        Args:
            images: Reconstruções (N, 1, H, W) em [0, 1], na ordem do conjunto de teste
            report: EvalReport já preenchido com a acurácia

        Returns:
            Valor escalar da métrica
        """
        pass


class EvaluationError(AppError):
    """Exceção base para erros de avaliação."""

    error_code = ErrorCode.INVALID_INPUT
    http_status = 400


class UnknownCategoriesError(EvaluationError):
    """Categorias de teste ausentes da lista de categorias."""

    def __init__(self, message: str, unknown):
        super().__init__(message)
        self.unknown = list(unknown)


class ProtocolError(EvaluationError):
    """Violação de protocolo (sobreposição de categorias, extras duplicadas)."""

    error_code = ErrorCode.PROTOCOL_VIOLATION
    http_status = 422


class StateMutationError(EvaluationError):
    """A avaliação alterou parâmetros da rede ou do backend."""

    error_code = ErrorCode.INTERNAL_ERROR
    http_status = 500
