"""
Configuração do treinamento conjunto.

Os valores padrão seguem o protocolo de referência: B=32, K=6, T=9 bins,
resize 224, crop 128, pesos (1, 0.01, 1), LAMB com lr 6e-3 e wd 1e-4.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Optional

from app.services.encoders.prompts import CLASS_TOKEN, DEFAULT_TEMPLATE
from app.services.objectives.models import LossWeights
from app.services.reconstruction.interfaces import ReconstructionConfigError
from app.services.reconstruction.models import ReconNetConfig
from app.services.training.interfaces import TrainingConfigError

MODES = ("text_prompt", "visual_prototype")
OPTIMIZERS = ("lamb", "adam")
REPULSION_MODES = ("agnostic", "aware")


@dataclass
class TrainConfig:
    """Configuração completa de uma execução de treino."""

    manifest: str = ""
    backend: str = "stub:seed=7"
    mode: str = "text_prompt"
    prototype_bank: Optional[str] = None
    categories_file: Optional[str] = None
    template: str = DEFAULT_TEMPLATE
    sensor_width: int = 240
    sensor_height: int = 180

    batch_size: int = 32
    k: int = 6
    t_bins: int = 9
    resize: int = 224
    crop: int = 128

    lambda_att: float = 1.0
    lambda_rep: float = 0.01
    lambda_con: float = 1.0
    loss_temperature: float = 1.0
    prediction_temperature: float = 0.01
    repulsion_mode: str = "agnostic"
    use_ppi: bool = True
    use_trci: bool = True

    optimizer: str = "lamb"
    learning_rate: float = 6e-3
    weight_decay: float = 1e-4

    steps: int = 1000
    epochs: Optional[int] = None
    seed: int = 0
    checkpoint_every: int = 500
    workers: int = 0

    net_levels: int = 3
    net_base_channels: int = 32
    net_residual_blocks: int = 2

    run_dir: str = "runs/train"
    device: str = "cpu"

    def __post_init__(self):
        """Valida configurações após inicialização."""
        if self.mode not in MODES:
            raise TrainingConfigError(f"mode deve ser um de {MODES}")

        if self.mode == "visual_prototype" and not self.prototype_bank:
            raise TrainingConfigError("prototype_bank é obrigatório no modo visual_prototype")

        if self.optimizer not in OPTIMIZERS:
            raise TrainingConfigError(f"optimizer deve ser um de {OPTIMIZERS}")

        if self.repulsion_mode not in REPULSION_MODES:
            raise TrainingConfigError(f"repulsion_mode deve ser um de {REPULSION_MODES}")

        if self.template.count(CLASS_TOKEN) != 1:
            raise TrainingConfigError(f"template precisa conter exatamente um {CLASS_TOKEN}")

        if self.batch_size < 1:
            raise TrainingConfigError("batch_size deve ser maior que zero")

        if not 1 <= self.k <= self.batch_size:
            raise TrainingConfigError(f"k deve estar entre 1 e batch_size ({self.batch_size}), recebido {self.k}")

        if not 1 <= self.crop <= self.resize:
            raise TrainingConfigError(f"crop ({self.crop}) deve estar entre 1 e resize ({self.resize})")

        if self.loss_temperature <= 0 or self.prediction_temperature <= 0:
            raise TrainingConfigError("temperaturas devem ser positivas")

        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise TrainingConfigError("learning_rate deve ser positivo e weight_decay não negativo")

        if self.steps < 0 or (self.epochs is not None and self.epochs < 0):
            raise TrainingConfigError("steps e epochs não podem ser negativos")

        if self.checkpoint_every < 0 or self.workers < 0:
            raise TrainingConfigError("checkpoint_every e workers não podem ser negativos")

        if self.sensor_width < 1 or self.sensor_height < 1:
            raise TrainingConfigError("dimensões do sensor devem ser positivas")

        try:
            LossWeights(self.lambda_att, self.lambda_rep, self.lambda_con)
            net = self.net_config()
        except ValueError as e:
            raise TrainingConfigError(str(e))
        except ReconstructionConfigError as e:
            raise TrainingConfigError(f"Rede incompatível com crop={self.crop}: {e.message}")

        if self.resize % net.downsampling_factor != 0:
            raise TrainingConfigError(f"resize ({self.resize}) deve ser múltiplo de {net.downsampling_factor} com net_levels={self.net_levels}")

    @property
    def weights(self) -> LossWeights:
        return LossWeights(self.lambda_att, self.lambda_rep, self.lambda_con)

    def net_config(self) -> ReconNetConfig:
        """Configuração da rede; o menor tamanho de entrada é o crop."""
        return ReconNetConfig(
            t_bins=self.t_bins,
            levels=self.net_levels,
            base_channels=self.net_base_channels,
            residual_blocks=self.net_residual_blocks,
            min_input_size=self.crop,
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise TrainingConfigError(f"Chaves desconhecidas na configuração: {', '.join(unknown)}")
        return cls(**data)

    def replace(self, **changes) -> "TrainConfig":
        return TrainConfig.from_dict({**self.to_dict(), **changes})

    def fingerprint(self) -> str:
        """SHA-256 curto da configuração serializada de forma canônica."""
        encoded = json.dumps(self.to_dict(), sort_keys=True, default=str).encode("utf-8")
        return hashlib.sha256(encoded).hexdigest()[:16]
