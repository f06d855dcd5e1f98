"""
Contêiner versionado para artefatos binários (checkpoints e bancos de protótipos).

Layout: magic (8 bytes) | versão (uint32 LE) | sha256 do payload (32 bytes) | payload torch.save.
O digest é conferido antes de desserializar, então um arquivo corrompido não
produz estado parcial.
"""

import hashlib
import io
import logging
import struct
from pathlib import Path
from typing import Any, Dict, Union

import torch

from app.utils.responses import AppError, ErrorCode

logger = logging.getLogger(__name__)

_VERSION = struct.Struct("<I")
_DIGEST_SIZE = 32


class ArtifactError(AppError):
    """Erro de leitura ou escrita de artefato."""

    error_code = ErrorCode.IO_ERROR


class ArtifactIntegrityError(ArtifactError):
    """Arquivo truncado, corrompido ou de outro tipo."""

    error_code = ErrorCode.INTEGRITY_ERROR


class ArtifactVersionError(ArtifactError):
    """Versão do contêiner incompatível."""

    error_code = ErrorCode.INCOMPATIBLE_CHECKPOINT
    http_status = 409


def write_artifact(path: Union[str, Path], magic: bytes, version: int, payload: Dict[str, Any]) -> Path:
    """
    Grava o payload no contêiner.

    Raises:
        ArtifactError: Caminho não gravável
    """
    buffer = io.BytesIO()
    torch.save(payload, buffer)
    body = buffer.getvalue()
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        # escrita atômica: .tmp seguido de rename
        temporary = path.with_name(path.name + ".tmp")
        temporary.write_bytes(magic + _VERSION.pack(version) + hashlib.sha256(body).digest() + body)
        temporary.replace(path)
    except OSError as e:
        raise ArtifactError(f"Erro ao gravar {path}: {str(e)}")
    logger.debug(f"Artefato gravado em {path} ({len(body)} bytes)")
    return path


def read_artifact(path: Union[str, Path], magic: bytes, version: int) -> Dict[str, Any]:
    """
    Lê e valida o contêiner.

    Raises:
        ArtifactError: Arquivo ilegível
        ArtifactIntegrityError: Magic ou digest não conferem
        ArtifactVersionError: Versão diferente da esperada
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise ArtifactError(f"Erro ao ler {path}: {str(e)}")

    header_size = len(magic) + _VERSION.size + _DIGEST_SIZE
    if len(raw) < header_size or raw[: len(magic)] != magic:
        raise ArtifactIntegrityError(f"{path} não é um artefato do tipo esperado")

    (found_version,) = _VERSION.unpack_from(raw, len(magic))
    if found_version != version:
        raise ArtifactVersionError(f"{path}: versão {found_version} incompatível (esperada {version})")

    digest = raw[len(magic) + _VERSION.size : header_size]
    body = raw[header_size:]
    if hashlib.sha256(body).digest() != digest:
        raise ArtifactIntegrityError(f"{path}: digest não confere, arquivo corrompido")

    return torch.load(io.BytesIO(body), map_location="cpu", weights_only=False)
