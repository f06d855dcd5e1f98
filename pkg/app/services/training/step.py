"""
Um passo do aprendizado conjunto.

Ordem: EST e resize; reconstrução global, codificação e pseudo-rótulos;
ramo invertido no tempo sem gradiente; PPI/TRCI/RDS; recorte compartilhado e
consistência local-global; atração sobre S_RDS, repulsão sobre o lote
inteiro e perda total; uma atualização do otimizador apenas em G.
"""

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import torch

from app.services.encoders.interfaces import EncoderBackend
from app.services.encoders.recognition import class_probabilities, encode_image, predict
from app.services.events.models import EventStream
from app.services.events.transforms import reverse_time
from app.services.objectives.interfaces import NonFiniteLossError
from app.services.objectives.losses import attraction_loss, batch_consistency_loss, prototype_attraction_loss, repulsion_loss, total_loss
from app.services.prototypes.models import PrototypeBank
from app.services.reconstruction.network import ReconstructionNet
from app.services.representation.crop import crop_batch, sample_crop_rect
from app.services.representation.est import stream_to_input
from app.services.representation.models import CropRect
from app.services.sampling.models import ReliabilitySets
from app.services.sampling.interfaces import ProbabilityRangeError
from app.services.sampling.selection import max_probabilities, reliable_sets
from app.services.training.config import TrainConfig
from app.services.training.interfaces import TrainingDivergedError

logger = logging.getLogger(__name__)


@dataclass
class TrainingState:
    """Estado mutável do treino: rede, otimizador e passo global."""

    net: ReconstructionNet
    optimizer: torch.optim.Optimizer
    step: int = 0


@dataclass
class StepResources:
    """Recursos congelados compartilhados por todos os passos."""

    backend: EncoderBackend
    text_features: torch.Tensor
    categories: List[str]
    bank: Optional[PrototypeBank] = None
    diagnostics_dir: Optional[Path] = None


@dataclass
class BatchState:
    """Fluxo de dados de um passo; quantidades do ramo invertido não carregam gradiente."""

    global_recon: torch.Tensor
    local_recon: torch.Tensor
    features: torch.Tensor
    reversed_features: torch.Tensor
    probabilities: torch.Tensor
    max_probs: List[float]
    pseudo: List[int]
    reversed_pseudo: List[int]
    sets: ReliabilitySets
    rects: List[CropRect]
    losses: Dict[str, float] = field(default_factory=dict)
    attraction_skipped: bool = False
    updated: bool = True

    @property
    def batch_size(self) -> int:
        return len(self.pseudo)

    def pseudo_histogram(self, num_categories: int) -> List[int]:
        counts = Counter(self.pseudo)
        return [counts.get(index, 0) for index in range(num_categories)]

    def pseudo_entropy(self) -> float:
        """Entropia (nats) do histograma de pseudo-rótulos do lote."""
        counts = np.array(list(Counter(self.pseudo).values()), dtype=np.float64)
        share = counts / counts.sum()
        return float(-(share * np.log(share)).sum())

    def max_category_fraction(self) -> float:
        return max(Counter(self.pseudo).values()) / self.batch_size

    def to_log(self, step: int, num_categories: int) -> Dict[str, Any]:
        record = {"step": step, **self.losses, "attraction_skipped": self.attraction_skipped, "updated": self.updated}
        record.update(self.sets.to_log())
        record.update(
            {
                "pseudo_entropy": self.pseudo_entropy(),
                "max_category_fraction": self.max_category_fraction(),
                "pseudo_histogram": self.pseudo_histogram(num_categories),
                "mean_max_prob": float(np.mean(self.max_probs)),
            }
        )
        return record

    def diagnostic(self) -> Dict[str, Any]:
        return {
            "pseudo": self.pseudo,
            "reversed_pseudo": self.reversed_pseudo,
            "max_probs": self.max_probs,
            "sets": self.sets.to_log(),
            "rects": [rect.to_dict() for rect in self.rects],
            "losses": self.losses,
            "recon_finite": bool(torch.isfinite(self.global_recon).all()),
            "features_finite": bool(torch.isfinite(self.features).all()),
        }


def _stack_inputs(streams: Sequence[EventStream], config: TrainConfig, device: torch.device) -> torch.Tensor:
    return torch.stack([stream_to_input(stream, config.t_bins, config.resize).as_network_input() for stream in streams]).to(device)


def _dump_diagnostic(state: BatchState, resources: StepResources, step: int, error: NonFiniteLossError) -> str:
    if resources.diagnostics_dir is None:
        return ""
    path = Path(resources.diagnostics_dir) / f"diverged_step_{step:06d}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"step": step, "term": error.term, **state.diagnostic()}, indent=2, default=str), encoding="utf-8")
    return str(path)


def train_step(state: TrainingState, batch: Sequence[EventStream], config: TrainConfig, rng: np.random.Generator, resources: StepResources) -> BatchState:
    """
    Executa um passo de treino e atualiza state in-place.

    Args:
        state: Rede, otimizador e passo
        batch: Fluxos do lote (sem rótulos)
        config: Configuração do treino
        rng: Gerador dos recortes
        resources: Backend, features textuais e banco de protótipos

    Returns:
        BatchState do passo

    Raises:
        TrainingDivergedError: Perda não finita (diagnóstico gravado em diagnostics_dir)
    """
    net = state.net
    device = next(net.parameters()).device
    net.train()

    inputs = _stack_inputs(batch, config, device)
    text_features = resources.text_features.to(device)

    global_recon = net(inputs)
    features = encode_image(resources.backend, global_recon)
    with torch.no_grad():
        probabilities = class_probabilities(features.detach(), text_features, config.prediction_temperature)
    pseudo = predict(probabilities)
    try:
        max_probs = max_probabilities(probabilities.cpu().numpy())
    except ProbabilityRangeError as e:
        logger.error(f"Probabilidades inválidas no passo {state.step}: {e.message}")
        raise TrainingDivergedError(e.message, term="probabilities")

    if config.use_trci:
        with torch.no_grad():
            reversed_inputs = _stack_inputs([reverse_time(stream) for stream in batch], config, device)
            reversed_features = encode_image(resources.backend, net(reversed_inputs))
            reversed_pseudo = predict(class_probabilities(reversed_features, text_features, config.prediction_temperature))
    else:
        reversed_features = features.detach()
        reversed_pseudo = list(pseudo)

    sets = reliable_sets(max_probs, pseudo, reversed_pseudo, config.k, config.use_ppi, config.use_trci)

    rects = [sample_crop_rect(rng, config.resize, config.crop) for _ in batch]
    if config.lambda_con > 0:
        local_recon = net(crop_batch(inputs, rects))
        con = batch_consistency_loss(local_recon, global_recon, rects)
    else:
        local_recon = global_recon.new_zeros((len(batch), 1, config.crop, config.crop))
        con = global_recon.sum() * 0

    if config.mode == "visual_prototype":
        att = prototype_attraction_loss(features, resources.bank, pseudo, sets.s_rds, config.loss_temperature)
    else:
        att = attraction_loss(features, text_features, pseudo, sets.s_rds, config.loss_temperature)
    rep = repulsion_loss(features, config.loss_temperature, pseudo if config.repulsion_mode == "aware" else None)

    batch_state = BatchState(
        global_recon=global_recon.detach(),
        local_recon=local_recon.detach(),
        features=features.detach(),
        reversed_features=reversed_features.detach(),
        probabilities=probabilities,
        max_probs=max_probs,
        pseudo=pseudo,
        reversed_pseudo=reversed_pseudo,
        sets=sets,
        rects=rects,
        losses={"attraction": float(att.value.detach()), "repulsion": float(rep.detach()), "consistency": float(con.detach())},
        attraction_skipped=att.skipped,
    )

    try:
        total = total_loss(att.value, rep, con, config.weights)
    except NonFiniteLossError as e:
        dump_path = _dump_diagnostic(batch_state, resources, state.step, e)
        logger.error(f"Perda não finita no passo {state.step} ({e.term}); diagnóstico em {dump_path or '-'}")
        raise TrainingDivergedError(e.message, term=e.term, dump_path=dump_path)
    batch_state.losses["total"] = float(total.detach())

    state.optimizer.zero_grad(set_to_none=True)
    total.backward()

    # sem sinal de gradiente o passo não altera G (nem pelo weight decay)
    grads = [parameter.grad for parameter in net.parameters() if parameter.grad is not None]
    if grads and any(bool(grad.abs().sum() > 0) for grad in grads):
        state.optimizer.step()
    else:
        batch_state.updated = False
        logger.debug(f"Passo {state.step} sem gradiente; otimizador não aplicado")

    state.step += 1
    return batch_state
