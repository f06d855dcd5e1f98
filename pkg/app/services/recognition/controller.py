"""
Controller para reconhecimento de fluxos enviados pela API.

Carrega o backend e o checkpoint configurados na primeira requisição e os
reutiliza nas seguintes.
"""

import io
import logging
import threading
from typing import Any, Dict, List, Optional

import torch
from PIL import Image

from app.flask_config import Config
from app.services.encoders.factories import load_backend
from app.services.encoders.interfaces import EncoderBackend
from app.services.encoders.recognition import class_probabilities, encode_categories, encode_image, predict
from app.services.events.manifest import read_category_list
from app.services.events.models import EventStream
from app.services.events.parsers import parse_dataset_binary, parse_text_events
from app.services.reconstruction.models import IntensityImage
from app.services.reconstruction.network import reconstruct
from app.services.representation.est import stream_to_input
from app.services.training.checkpoint import Checkpoint, load_checkpoint
from app.utils.responses import AppError, ErrorCode


class RecognitionUnavailableError(AppError):
    """Nenhum checkpoint configurado para a API."""

    error_code = ErrorCode.RESOURCE_NOT_FOUND
    http_status = 503


class RecognitionController:
    """Controller para reconstrução e reconhecimento de um fluxo de eventos."""

    def __init__(self, backend: Optional[EncoderBackend] = None, checkpoint: Optional[Checkpoint] = None):
        self._backend = backend
        self._checkpoint = checkpoint
        self._net = None
        self._lock = threading.Lock()
        self.logger = logging.getLogger(self.__class__.__name__)

    def _ensure_loaded(self) -> None:
        with self._lock:
            if self._backend is None:
                self._backend = load_backend(Config.BACKEND, Config.DEVICE)
            if self._checkpoint is None:
                if not Config.CHECKPOINT:
                    raise RecognitionUnavailableError("EVREC_CHECKPOINT não configurado")
                self._checkpoint = load_checkpoint(Config.CHECKPOINT)
                self.logger.info(f"Checkpoint carregado para a API: {Config.CHECKPOINT}")
            if self._net is None:
                self._net = self._checkpoint.build_network()

    def _categories(self, requested: Optional[List[str]]) -> List[str]:
        if requested:
            return list(requested)
        if Config.CATEGORIES_FILE:
            return read_category_list(Config.CATEGORIES_FILE)
        return list(self._checkpoint.categories)

    def parse(self, raw: bytes, event_format: str, sensor_width: Optional[int], sensor_height: Optional[int]) -> EventStream:
        config = self._checkpoint.train_config
        width = sensor_width or config.sensor_width
        height = sensor_height or config.sensor_height
        if event_format == "text":
            return parse_text_events(raw.decode("utf-8"), width, height)
        return parse_dataset_binary(raw, width, height)

    def reconstruct_stream(self, raw: bytes, event_format: str = "binary", sensor_width: Optional[int] = None, sensor_height: Optional[int] = None) -> IntensityImage:
        self._ensure_loaded()
        config = self._checkpoint.train_config
        stream = self.parse(raw, event_format, sensor_width, sensor_height)
        return reconstruct(self._net, stream_to_input(stream, config.t_bins, config.resize))

    def reconstruct_png(self, raw: bytes, **options) -> bytes:
        image = self.reconstruct_stream(raw, **options)
        buffer = io.BytesIO()
        Image.fromarray(image.to_uint8()).save(buffer, format="PNG")
        return buffer.getvalue()

    def predict(self, raw: bytes, categories: Optional[List[str]] = None, event_format: str = "binary", sensor_width: Optional[int] = None, sensor_height: Optional[int] = None) -> Dict[str, Any]:
        """
        Reconstrói, codifica e classifica um fluxo.

        Returns:
            Categoria prevista, índice, probabilidades por categoria e número de eventos

        Raises:
            EventsError: Arquivo inválido
            RecognitionUnavailableError: Sem checkpoint configurado
        """
        self._ensure_loaded()
        config = self._checkpoint.train_config
        names = self._categories(categories)
        stream = self.parse(raw, event_format, sensor_width, sensor_height)
        image = reconstruct(self._net, stream_to_input(stream, config.t_bins, config.resize))

        with torch.no_grad():
            text_features = encode_categories(self._backend, names, config.template)
            feature = encode_image(self._backend, image.data.view(1, 1, image.height, image.width))[0]
            probabilities = class_probabilities(feature, text_features, config.prediction_temperature)
        index = predict(probabilities)
        return {
            "category": names[index],
            "index": index,
            "probabilities": {name: float(value) for name, value in zip(names, probabilities.tolist())},
            "n_events": stream.count,
        }
