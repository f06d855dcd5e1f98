"""
Backend stub determinístico.

O ramo de imagem é um mapa linear fixo sobre os pixels pré-processados. O
ramo de texto extrai o nome da categoria do prompt e codifica a imagem
conceito dessa categoria pelo mesmo ramo de imagem, somando uma pequena
perturbação derivada do prefixo do prompt. Assim o espaço conjunto tem
alinhamento imagem-texto sem pesos pré-treinados.

Pesos e perturbações saem de SHA-256 em modo contador, então os features
são os mesmos em qualquer versão de numpy ou torch.
"""

import hashlib
import logging
from typing import Iterable, Sequence, Tuple

import numpy as np
import torch
import torch.nn.functional as F

from app.services.encoders.config import PreprocessSpec, StubBackendConfig
from app.services.encoders.interfaces import EncoderBackend
from app.services.encoders.preprocessing import preprocess_images
from app.services.events.synthetic import concept_image

logger = logging.getLogger(__name__)

_ARTICLE_MARKERS = (" of an ", " of a ")


def split_prompt(prompt: str) -> Tuple[str, str]:
    """Separa o prompt em (prefixo, nome da categoria)."""
    text = prompt.strip().rstrip(".").strip()
    for marker in _ARTICLE_MARKERS:
        if marker in text:
            prefix, name = text.rsplit(marker, 1)
            return prefix.strip(), name.strip()
    return "", text


def hash_uniform(label: str, count: int) -> np.ndarray:
    """
    count valores em [-1, 1) tirados de SHA-256 em modo contador.

    O bloco b é sha256("label|b"); cada bloco rende 8 palavras uint32 little-endian.
    """
    blocks = (count + 7) // 8
    raw = b"".join(hashlib.sha256(f"{label}|{block}".encode("utf-8")).digest() for block in range(blocks))
    words = np.frombuffer(raw, dtype="<u4")[:count].astype(np.float64)
    return words / 2.0**31 - 1.0


class StubBackend(EncoderBackend):
    """Backend sem dependências externas, idêntico entre execuções para a mesma configuração."""

    thread_safe = True

    def __init__(self, config: StubBackendConfig = None):
        super().__init__()
        self.config = config or StubBackendConfig()
        self.identifier = f"stub:seed={self.config.seed},dim={self.config.dim},size={self.config.size}"
        self.embed_dim = self.config.dim
        self.preprocess = PreprocessSpec(image_size=self.config.size)

        in_features = self.preprocess.channels * self.config.size * self.config.size
        # variância 1/in_features por entrada
        weights = hash_uniform(f"{self.config.seed}|projection", in_features * self.config.dim) * (3.0 / in_features) ** 0.5
        self._projection = torch.from_numpy(weights.reshape(in_features, self.config.dim))
        logger.debug(f"StubBackend criado: {self.identifier}")

    def frozen_tensors(self) -> Iterable[torch.Tensor]:
        return [self._projection]

    def encode_pixels(self, pixels: torch.Tensor) -> torch.Tensor:
        projection = self._projection.to(device=pixels.device, dtype=pixels.dtype)
        return pixels.reshape(pixels.shape[0], -1) @ projection

    def _prefix_noise(self, prefix: str) -> torch.Tensor:
        if not prefix or self.config.prompt_noise == 0:
            return torch.zeros(self.config.dim, dtype=torch.float64)
        noise = torch.from_numpy(hash_uniform(f"{self.config.seed}|prefix|{prefix}", self.config.dim))
        return self.config.prompt_noise * F.normalize(noise, dim=0)

    def encode_text_raw(self, prompts: Sequence[str]) -> torch.Tensor:
        features = []
        for prompt in prompts:
            prefix, name = split_prompt(prompt)
            image = torch.from_numpy(concept_image(name, self.config.size, self.config.concept_seed))
            pixels = preprocess_images(image.view(1, 1, self.config.size, self.config.size), self.preprocess)
            feature = F.normalize(self.encode_pixels(pixels)[0], dim=0)
            features.append(feature + self._prefix_noise(prefix))
        return torch.stack(features).to(torch.float32)
