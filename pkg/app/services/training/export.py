"""Exportação de reconstruções como PNG 8 bits em escala de cinza."""

from pathlib import Path
from typing import Union

from PIL import Image

from app.services.reconstruction.models import IntensityImage


def save_png(image: IntensityImage, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(image.to_uint8()).save(path)
    return path
