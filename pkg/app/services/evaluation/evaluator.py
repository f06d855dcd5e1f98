"""
Avaliação de acurácia top-1 com rótulos verdadeiros.

Os rótulos só entram aqui: cada fluxo de teste passa por EST, reconstrução,
codificação e predição, e a predição é comparada com a categoria do manifesto.
"""

import hashlib
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import torch

from app.services.encoders.interfaces import EncoderBackend
from app.services.encoders.recognition import class_probabilities, encode_categories, encode_image, predict
from app.services.evaluation.interfaces import MetricPlugin, ProtocolError, StateMutationError, UnknownCategoriesError
from app.services.evaluation.models import EvalReport
from app.services.events.manifest import DatasetManifest
from app.services.events.parsers import read_event_file
from app.services.representation.est import stream_to_input
from app.services.training.checkpoint import Checkpoint, load_checkpoint
from app.services.training.config import TrainConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabeledSample:
    path: Path
    category_name: str


def load_labeled_split(manifest_path: Union[str, Path], split: str = "test", categories: Optional[Sequence[str]] = None) -> List[LabeledSample]:
    manifest = DatasetManifest.load(manifest_path)
    return [LabeledSample(entry.path, entry.category_name) for entry in manifest.split(split, categories)]


def _parameters_checksum(net: torch.nn.Module) -> str:
    digest = hashlib.sha256()
    for name, tensor in sorted(net.state_dict().items()):
        digest.update(name.encode("utf-8"))
        digest.update(tensor.detach().cpu().contiguous().numpy().tobytes())
    return digest.hexdigest()


class Evaluator:
    """Avalia um checkpoint sobre amostras rotuladas."""

    def __init__(self, backend: EncoderBackend, plugins: Sequence[MetricPlugin] = (), workers: int = 0):
        self.backend = backend
        self.plugins = list(plugins)
        self.workers = workers
        self.logger = logging.getLogger(self.__class__.__name__)

    @staticmethod
    def _checkpoint(checkpoint: Union[str, Path, Checkpoint]) -> Checkpoint:
        return checkpoint if isinstance(checkpoint, Checkpoint) else load_checkpoint(checkpoint)

    def _reconstruct_one(self, net, config: TrainConfig, sample: LabeledSample) -> torch.Tensor:
        stream = read_event_file(sample.path, config.sensor_width, config.sensor_height)
        x = stream_to_input(stream, config.t_bins, config.resize).as_network_input().unsqueeze(0)
        with torch.no_grad():
            return net(x)[0]

    def reconstruct_all(self, net, config: TrainConfig, samples: Sequence[LabeledSample]) -> torch.Tensor:
        """Reconstruções (N, 1, H, W) na ordem das amostras."""
        if self.workers > 0:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                images = list(pool.map(lambda sample: self._reconstruct_one(net, config, sample), samples))
        else:
            images = [self._reconstruct_one(net, config, sample) for sample in samples]
        return torch.stack(images)

    def run(
        self,
        checkpoint: Union[str, Path, Checkpoint],
        samples: Sequence[LabeledSample],
        true_categories: Sequence[str],
        prompt_categories: Sequence[str],
        protocol: str,
    ) -> EvalReport:
        """
        Prediz cada amostra sobre prompt_categories e compara com a categoria verdadeira.

        Raises:
            UnknownCategoriesError: Amostra com categoria fora de true_categories
            StateMutationError: Parâmetros alterados durante a avaliação
        """
        started = time.time()
        checkpoint = self._checkpoint(checkpoint)
        config = checkpoint.train_config
        true_categories = list(true_categories)
        prompt_categories = list(prompt_categories)

        unknown = sorted({sample.category_name for sample in samples} - set(true_categories))
        if unknown:
            raise UnknownCategoriesError(f"Categorias de teste fora da lista: {', '.join(unknown)}", unknown)

        net = checkpoint.build_network()
        before = (_parameters_checksum(net), self.backend.checksum())

        text_features = encode_categories(self.backend, prompt_categories, config.template)
        images = self.reconstruct_all(net, config, samples) if samples else torch.zeros((0, 1, config.resize, config.resize))
        predictions: List[int] = []
        if samples:
            with torch.no_grad():
                features = encode_image(self.backend, images)
                predictions = predict(class_probabilities(features, text_features, config.prediction_temperature))

        if (_parameters_checksum(net), self.backend.checksum()) != before:
            raise StateMutationError("Avaliação alterou parâmetros da rede ou do backend")

        report = self._report(protocol, samples, predictions, true_categories, prompt_categories, config, time.time() - started)
        for plugin in self.plugins:
            report.extra_metrics[plugin.name] = float(plugin.compute(images, report))

        self.logger.info(f"Avaliação {protocol}: acurácia {report.overall_accuracy:.4f} ({report.correct}/{report.total})")
        return report

    @staticmethod
    def _report(protocol, samples, predictions, true_categories, prompt_categories, config: TrainConfig, runtime: float) -> EvalReport:
        prompt_index = {name: index for index, name in enumerate(prompt_categories)}
        true_index = {name: index for index, name in enumerate(true_categories)}
        confusion = np.zeros((len(true_categories), len(prompt_categories)), dtype=np.int64)
        correct = 0
        for sample, predicted in zip(samples, predictions):
            confusion[true_index[sample.category_name], predicted] += 1
            # categoria verdadeira ausente dos prompts nunca é acerto
            if prompt_index.get(sample.category_name) == predicted:
                correct += 1

        totals = confusion.sum(axis=1)
        per_category = {}
        for name, row_total, row in zip(true_categories, totals, confusion):
            hits = int(row[prompt_index[name]]) if name in prompt_index else 0
            per_category[name] = hits / int(row_total) if row_total else 0.0

        total = len(samples)
        return EvalReport(
            protocol=protocol,
            categories=true_categories,
            prompt_categories=prompt_categories,
            per_category_accuracy=per_category,
            overall_accuracy=correct / total if total else 0.0,
            confusion=confusion.tolist(),
            correct=correct,
            total=total,
            config_fingerprint=config.fingerprint(),
            runtime_seconds=round(runtime, 3),
            predictions=list(predictions),
        )


def evaluate(
    checkpoint: Union[str, Path, Checkpoint],
    manifest: Union[str, Path],
    categories: Sequence[str],
    backend: EncoderBackend,
    plugins: Sequence[MetricPlugin] = (),
    workers: int = 0,
) -> EvalReport:
    """
    Avaliação padrão sobre o split de teste.

    Raises:
        UnknownCategoriesError: Categoria de teste ausente de categories
    """
    samples = load_labeled_split(manifest, "test")
    return Evaluator(backend, plugins, workers).run(checkpoint, samples, categories, categories, "standard")


def _check_disjoint(first: Sequence[str], second: Sequence[str], what: str) -> None:
    overlap = sorted(set(first) & set(second))
    if overlap:
        raise ProtocolError(f"{what}: categorias em comum {', '.join(overlap)}")


def zero_shot_eval(
    checkpoint: Union[str, Path, Checkpoint],
    manifest: Union[str, Path],
    train_categories: Sequence[str],
    test_categories: Sequence[str],
    backend: EncoderBackend,
    workers: int = 0,
) -> EvalReport:
    """
    Reconhecimento de categorias não vistas: features textuais apenas das categorias de teste.

    Raises:
        ProtocolError: Categorias de treino e teste não disjuntas
    """
    _check_disjoint(train_categories, test_categories, "Zero-shot")
    samples = load_labeled_split(manifest, "test", test_categories)
    return Evaluator(backend, workers=workers).run(checkpoint, samples, test_categories, test_categories, "zero_shot")


def superset_eval(
    checkpoint: Union[str, Path, Checkpoint],
    manifest: Union[str, Path],
    true_categories: Sequence[str],
    extra_categories: Sequence[str],
    backend: EncoderBackend,
    workers: int = 0,
) -> EvalReport:
    """
    Predição sobre categorias verdadeiras mais prompts extras; prever uma extra conta como erro.

    Raises:
        ProtocolError: Extras repetidas ou sobrepostas às verdadeiras
    """
    if len(set(extra_categories)) != len(extra_categories):
        raise ProtocolError("Categorias extras repetidas")
    _check_disjoint(true_categories, extra_categories, "Superset")
    samples = load_labeled_split(manifest, "test", true_categories)
    protocol = "superset" if extra_categories else "standard"
    return Evaluator(backend, workers=workers).run(checkpoint, samples, true_categories, list(true_categories) + list(extra_categories), protocol)


def categories_for(checkpoint: Union[str, Path, Checkpoint]) -> Tuple[List[str], TrainConfig]:
    checkpoint = Evaluator._checkpoint(checkpoint)
    return list(checkpoint.categories), checkpoint.train_config
