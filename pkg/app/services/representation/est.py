"""
Construção do event spike tensor (EST).

Cada evento deposita massa unitária no canal da sua polaridade, dividida entre
os dois bins temporais vizinhos por um kernel triangular. O tensor é montado
com numpy (np.bincount em float64) e devolvido como torch.Tensor float32.
"""

import logging
import struct
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import torch
import torch.nn.functional as F

from app.services.events.models import EventStream
from app.services.representation.interfaces import DegenerateInputError, RepresentationError
from app.services.representation.models import POLARITIES, EventTensor

logger = logging.getLogger(__name__)

DUMP_HEADER = struct.Struct("<5i")


def build_est(stream: EventStream, t_bins: int, height: Optional[int] = None, width: Optional[int] = None) -> EventTensor:
    """
    Constrói o EST de um fluxo.

    Args:
        stream: Fluxo de eventos (N >= 1)
        t_bins: Número de bins temporais
        height: Altura da grade (padrão: altura do sensor)
        width: Largura da grade (padrão: largura do sensor)

    Returns:
        EventTensor com soma igual a N

    Raises:
        DegenerateInputError: Fluxo vazio ou t_bins < 1
        RepresentationError: Evento fora da grade informada
    """
    if stream is None or stream.count == 0:
        raise DegenerateInputError("EST de fluxo vazio")
    if t_bins < 1:
        raise DegenerateInputError(f"t_bins deve ser >= 1, recebido {t_bins}")

    height = stream.sensor_height if height is None else int(height)
    width = stream.sensor_width if width is None else int(width)
    if int(stream.x.max()) >= width or int(stream.y.max()) >= height:
        raise RepresentationError(f"Eventos fora da grade {height}x{width} (sensor {stream.sensor_height}x{stream.sensor_width})")

    t = stream.t.astype(np.float64)
    span = float(stream.t_max - stream.t_min)
    if span > 0:
        t_star = (t_bins - 1) * (t - stream.t_min) / span
    else:
        t_star = np.zeros_like(t)

    left = np.floor(t_star).astype(np.int64)
    right_weight = t_star - left
    left_weight = 1.0 - right_weight
    right = np.minimum(left + 1, t_bins - 1)

    base = stream.p.astype(np.int64) * t_bins
    pixel = stream.y * width + stream.x
    plane = height * width

    index = np.concatenate([(base + left) * plane + pixel, (base + right) * plane + pixel])
    weight = np.concatenate([left_weight, right_weight])
    flat = np.bincount(index, weights=weight, minlength=POLARITIES * t_bins * plane)

    data = torch.from_numpy(flat.reshape(POLARITIES, t_bins, height, width).astype(np.float32))
    return EventTensor(data=data, n_events=stream.count)


def resize_tensor(tensor: EventTensor, out_height: int, out_width: int) -> EventTensor:
    """
    Reamostra cada plano (polaridade, bin) por interpolação bilinear com
    centros de meio pixel (align_corners=False).
    """
    if out_height < 1 or out_width < 1:
        raise RepresentationError(f"Tamanho de saída inválido: {out_height}x{out_width}")
    if (out_height, out_width) == (tensor.height, tensor.width):
        return EventTensor(data=tensor.data.clone(), n_events=tensor.n_events)

    planes = tensor.data.reshape(1, tensor.channels, tensor.height, tensor.width)
    resized = F.interpolate(planes, size=(out_height, out_width), mode="bilinear", align_corners=False, antialias=False)
    data = resized.clamp_min(0.0).reshape(POLARITIES, tensor.t_bins, out_height, out_width)
    return EventTensor(data=data, n_events=tensor.n_events)


def stream_to_input(stream: EventStream, t_bins: int, size: int) -> EventTensor:
    """EST na geometria do sensor seguido de redimensionamento para size x size."""
    return resize_tensor(build_est(stream, t_bins), size, size)


def dump_tensor(tensor: EventTensor, path: Union[str, Path]) -> Path:
    """Grava o tensor em float32 little-endian precedido do cabeçalho (2, T, H, W, N)."""
    path = Path(path)
    header = DUMP_HEADER.pack(POLARITIES, tensor.t_bins, tensor.height, tensor.width, tensor.n_events)
    payload = tensor.data.detach().cpu().numpy().astype("<f4").tobytes()
    path.write_bytes(header + payload)
    return path


def load_tensor(path: Union[str, Path]) -> EventTensor:
    """Lê um tensor gravado por dump_tensor."""
    raw = Path(path).read_bytes()
    if len(raw) < DUMP_HEADER.size:
        raise RepresentationError(f"Arquivo de tensor truncado: {path}")
    shape: Tuple[int, ...] = DUMP_HEADER.unpack_from(raw)
    polarities, t_bins, height, width, n_events = shape
    expected = polarities * t_bins * height * width * 4
    if len(raw) - DUMP_HEADER.size != expected:
        raise RepresentationError(f"Tamanho do tensor em {path} não confere com o cabeçalho {shape}")
    data = np.frombuffer(raw, dtype="<f4", offset=DUMP_HEADER.size).reshape(polarities, t_bins, height, width)
    return EventTensor(data=torch.from_numpy(data.astype(np.float32)), n_events=n_events)
