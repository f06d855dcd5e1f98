"""
Checkpoints de treino.

Guardam a configuração, os parâmetros de G, o estado do otimizador, o passo
global, os estados de RNG e a especificação de pré-processamento do backend.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import torch

from app.services.reconstruction.models import ReconNetConfig
from app.services.reconstruction.network import ReconstructionNet
from app.services.training.config import TrainConfig
from app.services.training.interfaces import IncompatibleCheckpointError
from app.utils.artifacts import read_artifact, write_artifact

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"EVRCKPT\x00"
CHECKPOINT_VERSION = 1


@dataclass
class Checkpoint:
    config: Dict[str, Any]
    net_config: ReconNetConfig
    state_dict: Dict[str, torch.Tensor]
    step: int
    optimizer_state: Optional[Dict[str, Any]] = None
    rng_state: Dict[str, Any] = field(default_factory=dict)
    backend: str = ""
    preprocess: Dict[str, Any] = field(default_factory=dict)
    categories: List[str] = field(default_factory=list)

    @property
    def train_config(self) -> TrainConfig:
        return TrainConfig.from_dict(self.config)

    def build_network(self) -> ReconstructionNet:
        net = ReconstructionNet(self.net_config)
        net.load_state_dict(self.state_dict)
        net.eval()
        return net


def save_checkpoint(
    path: Union[str, Path],
    net: ReconstructionNet,
    config: TrainConfig,
    step: int,
    optimizer: Optional[torch.optim.Optimizer] = None,
    rng: Optional[np.random.Generator] = None,
    backend=None,
    categories: Optional[List[str]] = None,
) -> Path:
    payload = {
        "config": config.to_dict(),
        "net_config": net.config.to_dict(),
        "state_dict": {name: tensor.detach().cpu().clone() for name, tensor in net.state_dict().items()},
        "optimizer": optimizer.state_dict() if optimizer is not None else None,
        "step": int(step),
        "rng": {
            "crop": rng.bit_generator.state if rng is not None else None,
            "torch": torch.get_rng_state(),
        },
        "backend": backend.identifier if backend is not None else config.backend,
        "preprocess": backend.preprocess.to_dict() if backend is not None else {},
        "categories": list(categories or []),
    }
    path = write_artifact(path, CHECKPOINT_MAGIC, CHECKPOINT_VERSION, payload)
    logger.info(f"Checkpoint salvo em {path} (passo {step})")
    return path


def load_checkpoint(path: Union[str, Path], expected: Optional[TrainConfig] = None) -> Checkpoint:
    """
    Lê um checkpoint, opcionalmente conferindo a compatibilidade com uma configuração.

    Raises:
        ArtifactIntegrityError: Arquivo corrompido
        ArtifactVersionError: Versão do contêiner incompatível
        IncompatibleCheckpointError: Canais (T_bins) ou arquitetura diferentes de expected
    """
    payload = read_artifact(path, CHECKPOINT_MAGIC, CHECKPOINT_VERSION)
    net_config = ReconNetConfig.from_dict(payload["net_config"])

    if expected is not None:
        wanted = expected.net_config()
        if wanted.input_channels != net_config.input_channels:
            raise IncompatibleCheckpointError(
                f"{path}: checkpoint com {net_config.input_channels} canais de entrada (T_bins={net_config.t_bins}), configuração pede {wanted.input_channels} (T_bins={wanted.t_bins})"
            )
        if (wanted.levels, wanted.base_channels, wanted.residual_blocks) != (net_config.levels, net_config.base_channels, net_config.residual_blocks):
            raise IncompatibleCheckpointError(f"{path}: arquitetura do checkpoint difere da configuração")

    return Checkpoint(
        config=payload["config"],
        net_config=net_config,
        state_dict=payload["state_dict"],
        step=payload["step"],
        optimizer_state=payload.get("optimizer"),
        rng_state=payload.get("rng", {}),
        backend=payload.get("backend", ""),
        preprocess=payload.get("preprocess", {}),
        categories=payload.get("categories", []),
    )


def restore_rng(checkpoint: Checkpoint, seed: int) -> np.random.Generator:
    rng = np.random.default_rng(seed)
    if checkpoint.rng_state.get("crop") is not None:
        rng.bit_generator.state = checkpoint.rng_state["crop"]
    if checkpoint.rng_state.get("torch") is not None:
        torch.set_rng_state(checkpoint.rng_state["torch"])
    return rng
