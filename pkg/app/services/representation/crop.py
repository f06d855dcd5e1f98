"""
Função de recorte H usada pela consistência local-global.

O mesmo CropRect é aplicado ao EST redimensionado e à reconstrução global.
"""

import dataclasses
from typing import Sequence, TypeVar, Union

import numpy as np
import torch

from app.services.representation.interfaces import InvalidCropConfigError
from app.services.representation.models import CropRect

Grid = TypeVar("Grid")


def sample_crop_rect(rng: np.random.Generator, frame_size: int, crop_size: int) -> CropRect:
    """
    Sorteia top e left uniformemente em [0, frame_size - crop_size].

    Raises:
        InvalidCropConfigError: crop_size > frame_size ou crop_size < 1
    """
    if crop_size < 1 or crop_size > frame_size:
        raise InvalidCropConfigError(f"crop_size={crop_size} incompatível com frame_size={frame_size}")
    top, left = rng.integers(0, frame_size - crop_size + 1, size=2)
    return CropRect(top=int(top), left=int(left), size=int(crop_size))


def crop_array(data: torch.Tensor, rect: CropRect) -> torch.Tensor:
    """Extrai a sub-grade nos dois últimos eixos, sem reamostragem."""
    rect.validate_against(int(data.shape[-2]), int(data.shape[-1]))
    return data[..., rect.top : rect.top + rect.size, rect.left : rect.left + rect.size]


def crop(grid: Union[Grid, torch.Tensor], rect: CropRect) -> Union[Grid, torch.Tensor]:
    """
    Recorta um EventTensor, IntensityImage ou tensor cru, devolvendo o mesmo tipo.

    Raises:
        InvalidRectError: Retângulo fora da grade
    """
    if isinstance(grid, torch.Tensor):
        return crop_array(grid, rect)
    return dataclasses.replace(grid, data=crop_array(grid.data, rect))


def crop_batch(batch: torch.Tensor, rects: Sequence[CropRect]) -> torch.Tensor:
    """Recorta cada amostra de um lote (B, C, H, W) com o seu retângulo; todos do mesmo tamanho."""
    if len(rects) != batch.shape[0]:
        raise InvalidCropConfigError(f"{len(rects)} retângulos para lote de {batch.shape[0]} amostras")
    return torch.stack([crop_array(sample, rect) for sample, rect in zip(batch, rects)])
