"""
Dataset de treino sem rótulos.

O treino só recebe caminhos de arquivos de eventos; a categoria de cada
amostra fica no manifesto e é lida apenas pela avaliação.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterator, List, Optional, Sequence

import numpy as np

from app.services.events.interfaces import EventsError
from app.services.events.manifest import DatasetManifest, read_category_list
from app.services.events.models import EventStream
from app.services.events.parsers import read_event_file
from app.services.training.config import TrainConfig
from app.services.training.interfaces import DatasetError

logger = logging.getLogger(__name__)


class UnlabeledEventDataset:
    """Fluxos de eventos de um split, indexados por posição."""

    def __init__(self, paths: Sequence[Path], sensor_width: int, sensor_height: int, workers: int = 0):
        if not paths:
            raise DatasetError("Dataset de treino vazio")
        self.paths = list(paths)
        self.sensor_width = sensor_width
        self.sensor_height = sensor_height
        self.workers = workers
        self.logger = logging.getLogger(self.__class__.__name__)

    @classmethod
    def from_manifest(cls, manifest_path: str, config: TrainConfig, split: str = "train", categories: Optional[Sequence[str]] = None) -> "UnlabeledEventDataset":
        """Caminhos do split; com categories, apenas arquivos dessas categorias (protocolo zero-shot)."""
        manifest = DatasetManifest.load(manifest_path)
        return cls([entry.path for entry in manifest.split(split, categories)], config.sensor_width, config.sensor_height, config.workers)

    def __len__(self) -> int:
        return len(self.paths)

    def load(self, index: int) -> EventStream:
        """
        Raises:
            DatasetError: Arquivo ilegível ou inválido (mensagem com o caminho)
        """
        path = self.paths[index]
        try:
            return read_event_file(path, self.sensor_width, self.sensor_height)
        except (OSError, EventsError) as e:
            raise DatasetError(f"Falha ao ler {path}: {e}")

    def load_many(self, indices: Sequence[int]) -> List[EventStream]:
        """Carrega na ordem pedida; com workers > 0 a leitura é paralela mas a ordem se mantém."""
        if self.workers <= 0:
            return [self.load(index) for index in indices]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(self.load, indices))

    def batches_per_epoch(self, batch_size: int) -> int:
        return max(1, len(self) // batch_size)

    def epoch_order(self, seed: int, epoch: int) -> np.ndarray:
        """Permutação determinística para (seed, epoch), independente do histórico."""
        return np.random.default_rng([seed, epoch]).permutation(len(self))

    def batch_indices(self, seed: int, step: int, batch_size: int) -> List[int]:
        """
        Índices do lote do passo global step.

        Lotes incompletos no fim da época são descartados; se o dataset tem
        menos de batch_size amostras o lote é o dataset inteiro.
        """
        per_epoch = self.batches_per_epoch(batch_size)
        epoch, position = divmod(step, per_epoch)
        order = self.epoch_order(seed, epoch)
        size = min(batch_size, len(self))
        return [int(index) for index in order[position * size : (position + 1) * size]]

    def iter_batches(self, seed: int, batch_size: int, start_step: int, end_step: int) -> Iterator[List[EventStream]]:
        for step in range(start_step, end_step):
            yield self.load_many(self.batch_indices(seed, step, batch_size))


def resolve_categories(config: TrainConfig) -> List[str]:
    """Nomes de categoria das features textuais: arquivo de categorias ou categorias do manifesto."""
    if config.categories_file:
        categories = read_category_list(config.categories_file)
    else:
        categories = DatasetManifest.load(config.manifest).categories("train")
    if not categories:
        raise DatasetError("Nenhuma categoria para as features textuais")
    return categories
