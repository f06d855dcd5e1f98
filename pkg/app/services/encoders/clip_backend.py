"""
Backend CLIP via open_clip.

O pacote open_clip só é importado quando este backend é carregado; o
restante do projeto funciona apenas com o backend stub.
"""

import logging
from typing import Iterable, Sequence

import torch

from app.services.encoders.config import CLIP_MEAN, CLIP_STD, OpenClipBackendConfig, PreprocessSpec
from app.services.encoders.interfaces import BackendLoadError, EncoderBackend, EncoderError

logger = logging.getLogger(__name__)


class OpenClipBackend(EncoderBackend):
    """Encoders de imagem e texto CLIP congelados."""

    thread_safe = False

    def __init__(self, config: OpenClipBackendConfig):
        super().__init__()
        self.config = config
        self.identifier = f"openclip:{config.model_name}@{config.pretrained}"
        self._model, self._tokenizer = self._create_model()

        for parameter in self._model.parameters():
            parameter.requires_grad_(False)
        self._model.eval()

        visual = self._model.visual
        image_size = visual.image_size if isinstance(visual.image_size, int) else visual.image_size[0]
        self.preprocess = PreprocessSpec(image_size=int(image_size), mean=CLIP_MEAN, std=CLIP_STD)
        self.embed_dim = int(self._model.text_projection.shape[-1])
        logger.info(f"Backend CLIP carregado: {self.identifier} (dim={self.embed_dim}, entrada={image_size})")

    def _create_model(self):
        """Cria o modelo open_clip e o tokenizer."""
        try:
            import open_clip
        except ImportError as e:
            raise BackendLoadError(f"open_clip não está instalado: {str(e)}")

        try:
            model, _, _ = open_clip.create_model_and_transforms(self.config.model_name, pretrained=self.config.pretrained, device=self.config.device)
            tokenizer = open_clip.get_tokenizer(self.config.model_name)
            return model, tokenizer
        except Exception as e:
            raise BackendLoadError(f"Erro ao carregar {self.config.model_name} ({self.config.pretrained}): {str(e)}")

    def frozen_tensors(self) -> Iterable[torch.Tensor]:
        return [tensor for _, tensor in sorted(self._model.state_dict().items())]

    def encode_text_raw(self, prompts: Sequence[str]) -> torch.Tensor:
        try:
            tokens = self._tokenizer(list(prompts)).to(self.config.device)
            with torch.no_grad():
                return self._model.encode_text(tokens).float()
        except Exception as e:
            raise EncoderError(f"Erro ao codificar texto: {str(e)}")

    def encode_pixels(self, pixels: torch.Tensor) -> torch.Tensor:
        return self._model.encode_image(pixels.to(self.config.device))
