"""
Interfaces para o serviço de codificação imagem-texto.

Define o contrato dos backends congelados (stub determinístico ou CLIP
pré-treinado) e a hierarquia de exceções do serviço.
"""

import hashlib
import threading
from abc import ABC, abstractmethod
from contextlib import contextmanager
from typing import Iterable, List, Sequence

import torch

from app.services.encoders.config import PreprocessSpec
from app.utils.responses import AppError, ConfigurationError, ErrorCode


class EncoderBackend(ABC):
    """Interface para backends de codificação imagem-texto congelados."""

    identifier: str = ""
    embed_dim: int = 0
    preprocess: PreprocessSpec = PreprocessSpec()
    thread_safe: bool = False

    def __init__(self):
        self.text_call_log: List[List[str]] = []
        self._lock = threading.Lock()

    @abstractmethod
    def encode_text_raw(self, prompts: Sequence[str]) -> torch.Tensor:
        """
        Codifica prompts em features textuais (sem normalização).

        Args:
            prompts: Lista de prompts

        Returns:
            Tensor (C, D)

        Raises:
            BackendError: Em caso de erro no backend
        """
        pass

    @abstractmethod
    def encode_pixels(self, pixels: torch.Tensor) -> torch.Tensor:
        """
        Codifica imagens já pré-processadas (B, 3, S, S) em features (B, D), sem normalização.

        O cálculo precisa ser diferenciável em relação aos pixels.
        """
        pass

    @abstractmethod
    def frozen_tensors(self) -> Iterable[torch.Tensor]:
        """Tensores que definem o backend (usados na auditoria de congelamento)."""
        pass

    def record_text_call(self, prompts: Sequence[str]) -> None:
        self.text_call_log.append(list(prompts))

    def checksum(self) -> str:
        """SHA-256 de todos os tensores congelados."""
        digest = hashlib.sha256()
        for tensor in self.frozen_tensors():
            digest.update(tensor.detach().cpu().contiguous().numpy().tobytes())
        return digest.hexdigest()

    @contextmanager
    def guard(self):
        """Serializa chamadas concorrentes quando o backend não declara segurança de threads."""
        if self.thread_safe:
            yield
            return
        with self._lock:
            yield


class EncoderError(AppError):
    """Exceção base para erros do serviço de codificação."""

    error_code = ErrorCode.BACKEND_ERROR


class BackendLoadError(EncoderError):
    """Backend indisponível ou identificador inválido."""


class PromptTemplateError(EncoderError):
    """Template de prompt sem o marcador [CLASS] ou lista de categorias vazia."""

    error_code = ErrorCode.INVALID_INPUT
    http_status = 400


class ImageValidationError(EncoderError):
    """Imagem com pixels não finitos."""

    error_code = ErrorCode.INVALID_INPUT
    http_status = 400


class TemperatureError(ConfigurationError):
    """Temperatura não positiva."""
