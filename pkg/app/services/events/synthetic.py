"""
Dataset sintético de eventos.

Cada categoria tem uma "imagem conceito" determinística, derivada do hash do
nome. Os eventos de uma amostra são sorteados com densidade espacial
proporcional a essa imagem (com deslocamento aleatório e ruído), e o backend
stub usa a mesma imagem conceito para gerar o feature textual da categoria.
Assim o aprendizado conjunto tem algo a descobrir sem nenhum rótulo.
"""

import hashlib
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from app.services.events.manifest import write_manifest
from app.services.events.models import EventStream
from app.services.events.parsers import serialize_dataset_binary

logger = logging.getLogger(__name__)

CONCEPT_GRID = 4
DEFAULT_DURATION_US = 50_000


def _name_digest(name: str, seed: int) -> bytes:
    return hashlib.sha256(f"{seed}:{name}".encode("utf-8")).digest()


def concept_image(category_name: str, size: int, seed: int = 0) -> np.ndarray:
    """
    Padrão em blocos (CONCEPT_GRID x CONCEPT_GRID) em [0, 1], ampliado para size x size.

    Determinístico em (category_name, size, seed): o bloco i é claro quando o
    byte i do SHA-256 de "seed:nome" é >= 128.
    """
    digest = _name_digest(category_name, seed)
    cells = CONCEPT_GRID * CONCEPT_GRID
    blocks = np.where(np.frombuffer(digest[:cells], dtype=np.uint8) >= 128, 0.9, 0.1)
    # garante pelo menos um bloco claro e um escuro
    blocks[digest[cells] % cells] = 0.9
    blocks[digest[cells + 1] % cells] = 0.1
    blocks = blocks.reshape(CONCEPT_GRID, CONCEPT_GRID)
    index = np.arange(size) * CONCEPT_GRID // size
    return blocks[np.ix_(index, index)].astype(np.float64)


def synthesize_stream(
    category_name: str,
    sensor_size: int,
    n_events: int,
    rng: np.random.Generator,
    concept_seed: int = 0,
    noise_fraction: float = 0.1,
    max_shift: int = 2,
    duration_us: int = DEFAULT_DURATION_US,
) -> EventStream:
    """
    Sorteia um fluxo de eventos para uma categoria.

    Os pixels claros da imagem conceito disparam mais eventos; a primeira
    metade do intervalo tem maioria de eventos ON e a segunda maioria OFF,
    simulando uma borda que entra e sai do campo de visão.
    """
    concept = concept_image(category_name, sensor_size, concept_seed)
    dx, dy = rng.integers(-max_shift, max_shift + 1, size=2)
    density = np.roll(concept, shift=(int(dy), int(dx)), axis=(0, 1)) ** 2
    density = density.ravel() / density.sum()

    n_noise = int(round(n_events * noise_fraction))
    n_signal = n_events - n_noise
    pixels = np.concatenate([rng.choice(sensor_size * sensor_size, size=n_signal, p=density), rng.integers(0, sensor_size * sensor_size, size=n_noise)])

    t = np.sort(rng.integers(0, duration_us, size=n_events))
    on_probability = np.where(t < duration_us // 2, 0.7, 0.3)
    p = (rng.random(n_events) < on_probability).astype(np.int64)

    # t já está ordenado; os pixels são permutados para não correlacionar sinal e tempo
    pixels = rng.permutation(pixels)
    return EventStream.from_arrays(pixels % sensor_size, pixels // sensor_size, t, p, sensor_size, sensor_size)


def write_synthetic_dataset(
    root: Union[str, Path],
    categories: Sequence[str],
    per_category: int = 40,
    test_fraction: float = 0.25,
    sensor_size: int = 32,
    events_per_sample: Sequence[int] = (800, 1600),
    seed: int = 0,
    concept_seed: int = 0,
) -> Path:
    """
    Escreve arquivos binários de eventos e o manifesto CSV.

    Returns:
        Caminho do manifesto (root/manifest.csv)
    """
    root = Path(root)
    rng = np.random.default_rng(seed)
    rows = []
    n_test = int(round(per_category * test_fraction))

    for category in categories:
        category_dir = root / category
        category_dir.mkdir(parents=True, exist_ok=True)
        for i in range(per_category):
            n_events = int(rng.integers(events_per_sample[0], events_per_sample[1] + 1))
            stream = synthesize_stream(category, sensor_size, n_events, rng, concept_seed=concept_seed)
            relative = Path(category) / f"sample_{i:04d}.bin"
            (root / relative).write_bytes(serialize_dataset_binary(stream))
            rows.append((relative.as_posix(), category, "test" if i < n_test else "train"))

    manifest = write_manifest(root / "manifest.csv", rows)
    logger.info(f"Dataset sintético escrito em {root}: {len(categories)} categorias x {per_category} amostras")
    return manifest


def concept_images(categories: Sequence[str], size: int, seed: int = 0) -> Dict[str, np.ndarray]:
    return {name: concept_image(name, size, seed) for name in categories}


def synthetic_image_pool(categories: Sequence[str], per_category: int, size: int, seed: int = 0, concept_seed: int = 0, jitter: float = 0.05) -> Dict[str, List[np.ndarray]]:
    """
    Pool de imagens "não pareadas" por categoria: a imagem conceito com
    deslocamento e ruído, usada para construir bancos de protótipos.
    """
    rng = np.random.default_rng(seed)
    pool: Dict[str, List[np.ndarray]] = {}
    for name in categories:
        base = concept_image(name, size, concept_seed)
        images = []
        for _ in range(per_category):
            shift = rng.integers(-2, 3, size=2)
            image = np.roll(base, shift=(int(shift[0]), int(shift[1])), axis=(0, 1)) + rng.normal(0.0, jitter, size=base.shape)
            images.append(np.clip(image, 0.0, 1.0))
        pool[name] = images
    return pool


def default_synthetic_categories(count: int = 3, names: Optional[Sequence[str]] = None) -> List[str]:
    base = list(names) if names is not None else ["anchor", "butterfly", "camera", "dolphin", "elephant", "ferry", "guitar", "helicopter"]
    return base[:count]
