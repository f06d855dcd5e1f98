"""
Operações de reconhecimento no espaço conjunto imagem-texto.

Todos os vetores devolvidos têm norma L2 unitária. A temperatura padrão de
predição é 0.01 (escala de logit 100, convenção dos encoders pré-treinados);
a de treino é configurada separadamente.
"""

from typing import List, Sequence, Union

import numpy as np
import torch
import torch.nn.functional as F

from app.services.encoders.interfaces import EncoderBackend, TemperatureError
from app.services.encoders.preprocessing import preprocess_images
from app.services.encoders.prompts import DEFAULT_TEMPLATE, build_prompts

PREDICTION_TEMPERATURE = 0.01


def encode_text(backend: EncoderBackend, prompts: Sequence[str]) -> torch.Tensor:
    """Features textuais normalizadas (C, D), sem gradiente."""
    backend.record_text_call(prompts)
    with backend.guard(), torch.no_grad():
        features = backend.encode_text_raw(prompts)
    return F.normalize(features.float(), dim=-1)


def encode_categories(backend: EncoderBackend, categories: Sequence[str], template: str = DEFAULT_TEMPLATE) -> torch.Tensor:
    return encode_text(backend, build_prompts(categories, template))


def encode_image(backend: EncoderBackend, images: torch.Tensor) -> torch.Tensor:
    """
    Features visuais normalizadas (B, D).

    Diferenciável em relação aos pixels; os parâmetros do backend permanecem congelados.

    Raises:
        ImageValidationError: Pixels não finitos
    """
    pixels = preprocess_images(images, backend.preprocess)
    with backend.guard():
        features = backend.encode_pixels(pixels)
    return F.normalize(features, dim=-1)


def class_probabilities(features: torch.Tensor, text_features: torch.Tensor, temperature: float = PREDICTION_TEMPERATURE) -> torch.Tensor:
    """
    softmax(v . F^T / tau) sobre as categorias.

    Args:
        features: (D,) ou (B, D)
        text_features: (C, D)
        temperature: tau > 0

    Raises:
        TemperatureError: tau <= 0
    """
    if temperature <= 0:
        raise TemperatureError(f"Temperatura deve ser positiva, recebido {temperature}")
    logits = features @ text_features.to(features.dtype).T / temperature
    return torch.softmax(logits, dim=-1)


def predict(probabilities: torch.Tensor) -> Union[int, List[int]]:
    """Índice de maior probabilidade; empates ficam com o menor índice."""
    values = probabilities.detach().cpu().numpy()
    if values.size == 0:
        raise ValueError("Vetor de probabilidades vazio")
    if values.ndim == 1:
        return int(np.argmax(values))
    return [int(index) for index in np.argmax(values, axis=-1)]
