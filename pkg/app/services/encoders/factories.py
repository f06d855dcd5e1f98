"""Factory de backends a partir de identificadores textuais."""

import logging
from pathlib import Path
from typing import Dict

from app.services.encoders.config import OpenClipBackendConfig, StubBackendConfig
from app.services.encoders.interfaces import BackendLoadError, EncoderBackend

logger = logging.getLogger(__name__)

_INT_FIELDS = {"seed", "dim", "size", "concept_seed"}


def _parse_options(text: str) -> Dict[str, str]:
    options = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        if "=" not in item:
            raise BackendLoadError(f"Opção de backend inválida: '{item}' (esperado chave=valor)")
        key, value = item.split("=", 1)
        options[key.strip()] = value.strip()
    return options


class EncoderBackendFactory:
    """Factory para criar backends de codificação."""

    @staticmethod
    def create_stub(options: str = "") -> EncoderBackend:
        from app.services.encoders.stub_backend import StubBackend

        kwargs = {}
        for key, value in _parse_options(options).items():
            try:
                kwargs[key] = int(value) if key in _INT_FIELDS else float(value)
            except ValueError:
                raise BackendLoadError(f"Valor inválido para {key}: '{value}'")
        try:
            return StubBackend(StubBackendConfig(**kwargs))
        except (TypeError, ValueError) as e:
            raise BackendLoadError(f"Configuração de stub inválida: {str(e)}")

    @staticmethod
    def create_open_clip(spec: str, device: str = "cpu") -> EncoderBackend:
        from app.services.encoders.clip_backend import OpenClipBackend

        model_name, _, pretrained = spec.partition("@")
        return OpenClipBackend(OpenClipBackendConfig(model_name=model_name or "ViT-B-32", pretrained=pretrained or "openai", device=device))

    @classmethod
    def create(cls, identifier: str, device: str = "cpu") -> EncoderBackend:
        """
        Cria o backend descrito pelo identificador.

        Args:
            identifier: "stub[:opções]", "openclip:modelo@pesos" ou caminho de pesos locais
            device: Dispositivo do backend CLIP

        Raises:
            BackendLoadError: Identificador inválido ou backend indisponível
        """
        if not identifier:
            raise BackendLoadError("Identificador de backend é obrigatório")

        scheme, _, rest = identifier.partition(":")
        if scheme == "stub":
            backend = cls.create_stub(rest)
        elif scheme == "openclip":
            backend = cls.create_open_clip(rest, device)
        elif Path(identifier).exists():
            backend = cls.create_open_clip(f"ViT-B-32@{identifier}", device)
        else:
            raise BackendLoadError(f"Backend desconhecido ou pesos inexistentes: {identifier}")

        logger.info(f"Backend de codificação pronto: {backend.identifier}")
        return backend


def load_backend(identifier: str, device: str = "cpu") -> EncoderBackend:
    return EncoderBackendFactory.create(identifier, device)
