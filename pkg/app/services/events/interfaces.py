"""
Interfaces e exceções do serviço de eventos.

Define o contrato de leitura de arquivos de eventos e a hierarquia de erros
de parsing e validação.
"""

from abc import ABC, abstractmethod

from app.utils.responses import AppError, ErrorCode


class EventsError(AppError):
    """Exceção base para erros de leitura e validação de eventos."""

    error_code = ErrorCode.INVALID_INPUT
    http_status = 400


class MalformedFileError(EventsError):
    """Arquivo binário com tamanho ou estrutura inválida."""

    error_code = ErrorCode.INVALID_FORMAT


class EventValidationError(EventsError):
    """Evento fora da geometria do sensor ou com campos inválidos."""

    def __init__(self, message: str, record_index: int = -1):
        super().__init__(message)
        self.record_index = record_index


class EventParseError(EventsError):
    """Linha de texto que não segue o formato "t x y p"."""

    def __init__(self, message: str, line_number: int = -1):
        super().__init__(message)
        self.line_number = line_number


class EmptyStreamError(EventsError):
    """Fluxo sem eventos onde pelo menos um é obrigatório."""


class ManifestError(EventsError):
    """Manifesto de dataset ilegível ou com colunas inválidas."""


class EventReader(ABC):
    """Interface para leitores de arquivos de eventos."""

    @abstractmethod
    def read(self, raw: bytes, sensor_width: int, sensor_height: int):
        """
        Converte o conteúdo bruto de um arquivo em um EventStream.

        Args:
            raw: Conteúdo do arquivo
            sensor_width: Largura do sensor em pixels
            sensor_height: Altura do sensor em pixels

        Returns:
            EventStream validado e ordenado por timestamp

        Raises:
            EventsError: Em caso de conteúdo inválido
        """
        pass
