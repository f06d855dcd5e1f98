"""
Funções de perda do aprendizado conjunto.

Todas recebem features com norma unitária e devolvem escalares torch
diferenciáveis. A temperatura do lado da perda tem padrão 1.
"""

import logging
import math
from typing import Mapping, Sequence

import torch

from app.services.objectives.interfaces import MissingPrototypeError, NonFiniteLossError, PseudoLabelRangeError, ShapeMismatchError
from app.services.objectives.models import LossTerm, LossWeights
from app.services.reconstruction.models import IntensityImage
from app.services.representation.crop import crop_array
from app.services.representation.models import CropRect

logger = logging.getLogger(__name__)

LOSS_TEMPERATURE = 1.0


def _contrastive(v_selected: torch.Tensor, targets: torch.Tensor, temperature: float) -> torch.Tensor:
    # o denominador percorre os índices de S_RDS, repetindo categorias duplicadas
    logits = v_selected @ targets.T / temperature
    return -torch.diagonal(torch.log_softmax(logits, dim=1)).sum()


def _zero(v_batch: torch.Tensor) -> torch.Tensor:
    return (v_batch * 0).sum()


def attraction_loss(v_batch: torch.Tensor, text_features: torch.Tensor, pseudo: Sequence[int], s_rds: Sequence[int], temperature: float = LOSS_TEMPERATURE) -> LossTerm:
    """
    InfoNCE restrito a S_RDS entre features visuais e textuais das pseudo-categorias.

    Args:
        v_batch: Features visuais (B, D)
        text_features: Features textuais (C, D)
        pseudo: Pseudo-rótulos (B,)
        s_rds: Índices confiáveis
        temperature: Temperatura da perda

    Returns:
        LossTerm com skipped=True quando |S_RDS| <= 1

    Raises:
        PseudoLabelRangeError: Pseudo-rótulo >= C
    """
    indices = list(s_rds)
    labels = [int(pseudo[i]) for i in indices]
    if any(not 0 <= label < text_features.shape[0] for label in labels):
        raise PseudoLabelRangeError(f"Pseudo-rótulos {labels} fora de [0, {text_features.shape[0]})")
    if len(indices) <= 1:
        return LossTerm(_zero(v_batch), skipped=True)

    targets = text_features[labels].to(v_batch.dtype)
    return LossTerm(_contrastive(v_batch[indices], targets, temperature))


def repulsion_loss(v_batch: torch.Tensor, temperature: float = LOSS_TEMPERATURE, pseudo: Sequence[int] = None) -> torch.Tensor:
    """
    sum_i log(1 + sum_{j != i} exp(v_i . v_j / tau)) sobre o lote inteiro.

    Com pseudo informado, pares da mesma pseudo-categoria são excluídos da soma
    interna (variante ciente de categoria).
    """
    batch_size = v_batch.shape[0]
    logits = v_batch @ v_batch.T / temperature
    eye = torch.eye(batch_size, dtype=torch.bool, device=v_batch.device)
    # a diagonal vale exp(0) = 1, o termo constante dentro do log
    logits = logits.masked_fill(eye, 0.0)
    if pseudo is not None:
        labels = torch.as_tensor(list(pseudo), device=v_batch.device)
        same = (labels[:, None] == labels[None, :]) & ~eye
        logits = logits.masked_fill(same, float("-inf"))
    return torch.logsumexp(logits, dim=1).sum()


def consistency_loss(local_recon: torch.Tensor, global_recon: torch.Tensor, rect: CropRect) -> torch.Tensor:
    """
    Média de |G(H(EST)) - H(G(EST))| sobre o recorte.

    Aceita IntensityImage ou tensores (..., H, W); o mesmo rect recorta a reconstrução global.

    Raises:
        ShapeMismatchError: Reconstrução local com lado diferente de rect.size
    """
    local = local_recon.data if isinstance(local_recon, IntensityImage) else local_recon
    full = global_recon.data if isinstance(global_recon, IntensityImage) else global_recon
    if tuple(local.shape[-2:]) != (rect.size, rect.size):
        raise ShapeMismatchError(f"Reconstrução local {tuple(local.shape[-2:])} difere do recorte {rect.size}x{rect.size}")
    return (local - crop_array(full, rect)).abs().mean()


def batch_consistency_loss(local_batch: torch.Tensor, global_batch: torch.Tensor, rects: Sequence[CropRect]) -> torch.Tensor:
    """Média da consistência por amostra, cada uma com o seu recorte."""
    if len(rects) != local_batch.shape[0]:
        raise ShapeMismatchError(f"{len(rects)} recortes para {local_batch.shape[0]} reconstruções")
    terms = [consistency_loss(local, full, rect) for local, full, rect in zip(local_batch, global_batch, rects)]
    return torch.stack(terms).mean()


def prototype_attraction_loss(v_batch: torch.Tensor, bank, pseudo: Sequence[int], s_rds: Sequence[int], temperature: float = LOSS_TEMPERATURE) -> LossTerm:
    """
    Atração com o protótipo mais próximo da pseudo-categoria no lugar do feature textual.

    A escolha do protótipo (argmax do produto interno) é feita sem gradiente.

    Raises:
        MissingPrototypeError: Pseudo-categoria ausente do banco
    """
    indices = list(s_rds)
    labels = [int(pseudo[i]) for i in indices]
    missing = sorted({label for label in labels if not bank.has_index(label)})
    if missing:
        raise MissingPrototypeError(f"Categorias {missing} sem protótipos no banco")
    if len(indices) <= 1:
        return LossTerm(_zero(v_batch), skipped=True)

    v_selected = v_batch[indices]
    with torch.no_grad():
        clusters = [bank.assign_index(v, label) for v, label in zip(v_selected, labels)]
    targets = torch.stack([bank.prototype(label, cluster) for label, cluster in zip(labels, clusters)]).to(v_batch.dtype)
    return LossTerm(_contrastive(v_selected, targets, temperature))


def total_loss(att: torch.Tensor, rep: torch.Tensor, con: torch.Tensor, weights: LossWeights) -> torch.Tensor:
    """
    lambda_att * att + lambda_rep * rep + lambda_con * con.

    Raises:
        NonFiniteLossError: Algum termo não finito, com o nome do termo
    """
    terms: Mapping[str, torch.Tensor] = {"attraction": att, "repulsion": rep, "consistency": con}
    for name, value in terms.items():
        scalar = float(value.detach()) if isinstance(value, torch.Tensor) else float(value)
        if not math.isfinite(scalar):
            raise NonFiniteLossError(f"Termo de perda não finito: {name}={scalar}", term=name)
    return weights.lambda_att * att + weights.lambda_rep * rep + weights.lambda_con * con
