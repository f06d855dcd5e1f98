"""
Construção do banco de protótipos a partir de imagens não pareadas.

As imagens de cada categoria são codificadas pelo backend congelado e
agrupadas por clustering aglomerativo (ligação média, distância cosseno). Cada
protótipo é a média do cluster renormalizada.
"""

import logging
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Union

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image
from sklearn.cluster import AgglomerativeClustering

from app.services.encoders.interfaces import EncoderBackend
from app.services.encoders.recognition import encode_image
from app.services.prototypes.interfaces import InsufficientImagesError, PrototypeError
from app.services.prototypes.models import PrototypeBank
from app.utils.artifacts import read_artifact, write_artifact

logger = logging.getLogger(__name__)

BANK_MAGIC = b"EVRPROTO"
BANK_VERSION = 1
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".pgm"}
ENCODE_BATCH = 64


def _to_tensor(image) -> torch.Tensor:
    tensor = torch.as_tensor(np.asarray(image, dtype=np.float32))
    if tensor.dim() == 3:
        tensor = tensor.squeeze(0)
    return tensor


def encode_pool(backend: EncoderBackend, images: Sequence) -> torch.Tensor:
    """Features (N, D) de uma lista de imagens (H, W) em [0, 1]; todas do mesmo tamanho."""
    features = []
    with torch.no_grad():
        for start in range(0, len(images), ENCODE_BATCH):
            batch = torch.stack([_to_tensor(image) for image in images[start : start + ENCODE_BATCH]]).unsqueeze(1)
            features.append(encode_image(backend, batch))
    return torch.cat(features)


def cluster_labels(features: np.ndarray, clusters: int, linkage: str = "average", metric: str = "cosine") -> np.ndarray:
    """
    Rótulos de cluster renumerados pela ordem do primeiro membro.

    Com clusters == 1 ou clusters == N o resultado é direto, sem sklearn.
    """
    n_samples = features.shape[0]
    if clusters == 1:
        return np.zeros(n_samples, dtype=np.int64)
    if clusters == n_samples:
        return np.arange(n_samples, dtype=np.int64)

    raw = AgglomerativeClustering(n_clusters=clusters, metric=metric, linkage=linkage).fit_predict(features)
    _, first = np.unique(raw, return_index=True)
    remap = {int(raw[index]): rank for rank, index in enumerate(sorted(first))}
    return np.array([remap[int(label)] for label in raw], dtype=np.int64)


def build_prototypes(backend: EncoderBackend, images_by_category: Mapping[str, Sequence], clusters: int, linkage: str = "average", metric: str = "cosine") -> PrototypeBank:
    """
    Constrói o banco com L = clusters protótipos por categoria.

    Args:
        backend: Backend congelado
        images_by_category: Categoria -> lista de imagens (H, W) em [0, 1], na ordem dada
        clusters: L
        linkage: Ligação do clustering aglomerativo
        metric: Distância do clustering aglomerativo

    Raises:
        InsufficientImagesError: Categoria com menos de L imagens
    """
    if clusters < 1:
        raise PrototypeError(f"Número de clusters deve ser >= 1, recebido {clusters}")

    for name, images in images_by_category.items():
        if len(images) < clusters:
            raise InsufficientImagesError(f"Categoria {name} tem {len(images)} imagens, menos que L={clusters}", category=name)

    prototypes: Dict[str, torch.Tensor] = {}
    sizes: Dict[str, List[int]] = {}
    for name, images in images_by_category.items():
        features = encode_pool(backend, list(images))
        labels = cluster_labels(features.double().numpy(), clusters, linkage, metric)
        means = torch.stack([features[torch.from_numpy(labels == cluster)].mean(dim=0) for cluster in range(clusters)])
        prototypes[name] = F.normalize(means, dim=-1)
        sizes[name] = [int((labels == cluster).sum()) for cluster in range(clusters)]
        logger.info(f"Protótipos de {name}: {len(images)} imagens em {clusters} clusters {sizes[name]}")

    return PrototypeBank(categories=list(images_by_category), prototypes=prototypes, clusters=clusters, linkage=linkage, metric=metric, sizes=sizes)


def load_image_folder(root: Union[str, Path], size: int = None) -> Dict[str, List[np.ndarray]]:
    """
    Lê um diretório com uma subpasta por categoria, em escala de cinza [0, 1].

    As imagens são redimensionadas para size x size quando informado (necessário se os tamanhos variam).
    """
    root = Path(root)
    if not root.is_dir():
        raise PrototypeError(f"Diretório de imagens inexistente: {root}")

    pool: Dict[str, List[np.ndarray]] = {}
    for category_dir in sorted(path for path in root.iterdir() if path.is_dir()):
        images = []
        for file in sorted(category_dir.iterdir()):
            if file.suffix.lower() not in IMAGE_SUFFIXES:
                continue
            with Image.open(file) as image:
                gray = image.convert("L")
                if size:
                    gray = gray.resize((size, size), Image.BILINEAR)
                images.append(np.asarray(gray, dtype=np.float32) / 255.0)
        pool[category_dir.name] = images
    return pool


def save_bank(bank: PrototypeBank, path: Union[str, Path]) -> Path:
    payload = {
        "categories": list(bank.categories),
        "clusters": bank.clusters,
        "dim": bank.dim,
        "linkage": bank.linkage,
        "metric": bank.metric,
        "sizes": bank.sizes,
        "prototypes": {name: bank.matrix(name).clone() for name in bank.categories},
    }
    return write_artifact(path, BANK_MAGIC, BANK_VERSION, payload)


def load_bank(path: Union[str, Path]) -> PrototypeBank:
    """
    Raises:
        ArtifactIntegrityError: Arquivo corrompido
        ArtifactVersionError: Versão incompatível
    """
    payload = read_artifact(path, BANK_MAGIC, BANK_VERSION)
    return PrototypeBank(
        categories=payload["categories"],
        prototypes=payload["prototypes"],
        clusters=payload["clusters"],
        linkage=payload["linkage"],
        metric=payload["metric"],
        sizes=payload.get("sizes", {}),
    )
