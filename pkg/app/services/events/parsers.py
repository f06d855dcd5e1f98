"""
Leitores de arquivos de eventos.

Formato binário de 5 bytes por registro (distribuição N-Caltech101 / N-MNIST):
    byte0 = x, byte1 = y, bit 7 do byte2 = polaridade,
    timestamp (µs) = ((byte2 & 0x7F) << 16) | (byte3 << 8) | byte4

Formato texto para fixtures: uma linha "t x y p" por evento, linhas em branco
e iniciadas por '#' são ignoradas.
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np

from app.services.events.interfaces import EmptyStreamError, EventParseError, EventReader, EventValidationError, MalformedFileError
from app.services.events.models import EventStream

logger = logging.getLogger(__name__)

RECORD_SIZE = 5
MAX_COORDINATE = 0xFF
MAX_TIMESTAMP = 0x7FFFFF


def _check_record_bounds(values: np.ndarray, limit: int, axis: str) -> None:
    outside = np.flatnonzero(values >= limit)
    if outside.size:
        index = int(outside[0])
        raise EventValidationError(f"Registro {index}: {axis}={int(values[index])} fora do sensor (limite {limit})", record_index=index)


def parse_dataset_binary(raw_bytes: bytes, sensor_width: int, sensor_height: int) -> EventStream:
    """
    Decodifica o formato binário de 5 bytes por evento.

    Args:
        raw_bytes: Conteúdo do arquivo
        sensor_width: Largura do sensor em pixels
        sensor_height: Altura do sensor em pixels

    Returns:
        EventStream em ordem de arquivo, depois ordenado de forma estável por timestamp

    Raises:
        MalformedFileError: Se o tamanho não for múltiplo de 5
        EventValidationError: Se algum registro cair fora do sensor
    """
    if len(raw_bytes) % RECORD_SIZE != 0:
        raise MalformedFileError(f"Arquivo com {len(raw_bytes)} bytes não é múltiplo de {RECORD_SIZE}")
    if len(raw_bytes) == 0:
        raise EmptyStreamError("Arquivo binário sem eventos")

    records = np.frombuffer(raw_bytes, dtype=np.uint8).reshape(-1, RECORD_SIZE).astype(np.int64)

    x = records[:, 0]
    y = records[:, 1]
    p = records[:, 2] >> 7
    t = ((records[:, 2] & 0x7F) << 16) | (records[:, 3] << 8) | records[:, 4]

    _check_record_bounds(x, sensor_width, "x")
    _check_record_bounds(y, sensor_height, "y")

    return EventStream.from_arrays(x, y, t, p, sensor_width, sensor_height)


def serialize_dataset_binary(stream: EventStream) -> bytes:
    """Codifica um fluxo no formato binário de 5 bytes (inverso de parse_dataset_binary)."""
    if stream.x.max() > MAX_COORDINATE or stream.y.max() > MAX_COORDINATE:
        raise EventValidationError("Coordenadas acima de 255 não cabem no formato binário")
    if stream.t_max > MAX_TIMESTAMP:
        raise EventValidationError(f"Timestamp {stream.t_max} excede 23 bits")

    records = np.empty((stream.count, RECORD_SIZE), dtype=np.uint8)
    records[:, 0] = stream.x
    records[:, 1] = stream.y
    records[:, 2] = (stream.p.astype(np.int64) << 7) | ((stream.t >> 16) & 0x7F)
    records[:, 3] = (stream.t >> 8) & 0xFF
    records[:, 4] = stream.t & 0xFF
    return records.tobytes()


def parse_text_events(text: str, sensor_width: int, sensor_height: int) -> EventStream:
    """
    Lê o formato texto "t x y p" usado em fixtures.

    Raises:
        EventParseError: Campo não numérico, número de campos errado ou polaridade fora de {0, 1}
        EmptyStreamError: Nenhum evento no texto
    """
    columns = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue

        fields = stripped.split()
        if len(fields) != 4:
            raise EventParseError(f"Linha {line_number}: esperado 't x y p', recebido {len(fields)} campos", line_number=line_number)
        try:
            t, x, y, p = (int(value) for value in fields)
        except ValueError:
            raise EventParseError(f"Linha {line_number}: campo não numérico em '{stripped}'", line_number=line_number)

        if p not in (0, 1):
            raise EventParseError(f"Linha {line_number}: polaridade {p} fora de {{0, 1}}", line_number=line_number)

        columns.append((x, y, t, p))

    if not columns:
        raise EmptyStreamError("Texto sem eventos (N >= 1 é obrigatório)")

    data = np.asarray(columns, dtype=np.int64)
    return EventStream.from_arrays(data[:, 0], data[:, 1], data[:, 2], data[:, 3], sensor_width, sensor_height)


def serialize_text_events(stream: EventStream) -> str:
    """Escreve o fluxo no formato texto "t x y p"."""
    return "".join(f"{e.t} {e.x} {e.y} {e.p}\n" for e in stream.events)


class BinaryEventReader(EventReader):
    """Leitor do formato binário de 5 bytes."""

    def read(self, raw: bytes, sensor_width: int, sensor_height: int) -> EventStream:
        return parse_dataset_binary(raw, sensor_width, sensor_height)


class TextEventReader(EventReader):
    """Leitor do formato texto de fixtures (UTF-8)."""

    def read(self, raw: bytes, sensor_width: int, sensor_height: int) -> EventStream:
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            line_number = raw[: e.start].count(b"\n") + 1
            raise EventParseError(f"Linha {line_number}: texto não é UTF-8 válido (byte {e.start})", line_number=line_number)
        return parse_text_events(text, sensor_width, sensor_height)


_READERS = {".bin": BinaryEventReader(), ".txt": TextEventReader()}


def read_event_file(path: Union[str, Path], sensor_width: int, sensor_height: int) -> EventStream:
    """
    Lê um arquivo de eventos escolhendo o leitor pela extensão (.txt = texto, demais = binário).

    Raises:
        OSError: Arquivo ilegível (a mensagem inclui o caminho)
    """
    path = Path(path)
    reader = _READERS.get(path.suffix.lower(), _READERS[".bin"])
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise OSError(f"Não foi possível ler o arquivo de eventos {path}: {e}") from e

    logger.debug(f"Lendo {path} ({len(raw)} bytes) com {reader.__class__.__name__}")
    return reader.read(raw, sensor_width, sensor_height)
