"""
Modelos de dados para fluxos de eventos.

Um EventStream guarda os eventos em colunas numpy (x, y, t, p) já ordenadas
por timestamp, junto com a geometria do sensor.
"""

from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np

from app.services.events.interfaces import EmptyStreamError, EventValidationError


class Event(NamedTuple):
    """Evento individual: pixel (x, y), timestamp em microssegundos e polaridade {0, 1}."""

    x: int
    y: int
    t: int
    p: int


def canonical_polarity(polarity: np.ndarray) -> np.ndarray:
    """Converte polaridades {-1, +1} ou {0, 1} para a convenção canônica {0, 1}."""
    polarity = np.asarray(polarity)
    if polarity.size and polarity.min() < 0:
        return (polarity > 0).astype(np.int8)
    return polarity.astype(np.int8)


@dataclass(frozen=True, eq=False)
class EventStream:
    """Fluxo de eventos ordenado no tempo, com geometria do sensor."""

    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    p: np.ndarray
    sensor_width: int
    sensor_height: int

    def __post_init__(self):
        """Valida invariantes após inicialização."""
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.p) == n):
            raise EventValidationError("Colunas x, y, t, p com tamanhos diferentes")
        if n == 0:
            raise EmptyStreamError("Fluxo de eventos vazio (N >= 1 é obrigatório)")
        if self.sensor_width <= 0 or self.sensor_height <= 0:
            raise EventValidationError(f"Geometria de sensor inválida: {self.sensor_width}x{self.sensor_height}")

        self._check_bounds(self.x, self.sensor_width, "x")
        self._check_bounds(self.y, self.sensor_height, "y")

        bad_polarity = np.flatnonzero((self.p != 0) & (self.p != 1))
        if bad_polarity.size:
            index = int(bad_polarity[0])
            raise EventValidationError(f"Polaridade inválida no registro {index}: {int(self.p[index])}", record_index=index)

        if np.any(self.t < 0):
            index = int(np.flatnonzero(self.t < 0)[0])
            raise EventValidationError(f"Timestamp negativo no registro {index}", record_index=index)

        if n > 1 and np.any(np.diff(self.t) < 0):
            raise EventValidationError("Timestamps precisam ser não decrescentes")

    @staticmethod
    def _check_bounds(values: np.ndarray, limit: int, axis: str) -> None:
        outside = np.flatnonzero((values < 0) | (values >= limit))
        if outside.size:
            index = int(outside[0])
            raise EventValidationError(f"Registro {index}: {axis}={int(values[index])} fora do sensor (limite {limit})", record_index=index)

    @classmethod
    def from_arrays(
        cls,
        x: Sequence[int],
        y: Sequence[int],
        t: Sequence[int],
        p: Sequence[int],
        sensor_width: int,
        sensor_height: int,
        order: Optional[np.ndarray] = None,
    ) -> "EventStream":
        """
        Cria um fluxo a partir de colunas arbitrárias, ordenando de forma estável por timestamp.

        Polaridades {-1, +1} são remapeadas para {0, 1}.
        """
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        t = np.asarray(t, dtype=np.int64)
        p = canonical_polarity(p)

        if order is None:
            order = np.argsort(t, kind="stable")

        return cls(x=x[order], y=y[order], t=t[order], p=p[order], sensor_width=int(sensor_width), sensor_height=int(sensor_height))

    @property
    def count(self) -> int:
        """Número de eventos N."""
        return int(len(self.t))

    def __len__(self) -> int:
        return self.count

    @property
    def events(self) -> Iterator[Event]:
        for x, y, t, p in zip(self.x.tolist(), self.y.tolist(), self.t.tolist(), self.p.tolist()):
            yield Event(x=x, y=y, t=t, p=p)

    @property
    def t_min(self) -> int:
        return int(self.t[0])

    @property
    def t_max(self) -> int:
        return int(self.t[-1])

    @property
    def duration(self) -> int:
        return self.t_max - self.t_min

    def to_events(self) -> list:
        return list(self.events)
