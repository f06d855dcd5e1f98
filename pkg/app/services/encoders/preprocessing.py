"""Pré-processamento diferenciável de imagens para os backends."""

import torch
import torch.nn.functional as F

from app.services.encoders.config import PreprocessSpec
from app.services.encoders.interfaces import ImageValidationError


def preprocess_images(images: torch.Tensor, spec: PreprocessSpec) -> torch.Tensor:
    """
    Prepara imagens de intensidade para o backend.

    Args:
        images: (B, 1, H, W) ou (B, H, W) em [0, 1]
        spec: Especificação de pré-processamento do backend

    Returns:
        Tensor (B, 3, S, S) normalizado por canal

    Raises:
        ImageValidationError: Pixels não finitos ou forma inválida
    """
    if images.dim() == 3:
        images = images.unsqueeze(1)
    if images.dim() != 4 or images.shape[1] != 1:
        raise ImageValidationError(f"Imagens devem ter forma (B, 1, H, W), recebido {tuple(images.shape)}")
    if not torch.isfinite(images).all():
        raise ImageValidationError("Imagem contém valores não finitos")

    x = images.expand(-1, spec.channels, -1, -1)
    if tuple(x.shape[-2:]) != (spec.image_size, spec.image_size):
        x = F.interpolate(x, size=(spec.image_size, spec.image_size), mode="bilinear", align_corners=False, antialias=False)

    mean = torch.tensor(spec.mean, dtype=x.dtype, device=x.device).view(1, -1, 1, 1)
    std = torch.tensor(spec.std, dtype=x.dtype, device=x.device).view(1, -1, 1, 1)
    return (x - mean) / std
