import math
from dataclasses import asdict, dataclass
from typing import Dict, NamedTuple

import torch


@dataclass
class LossWeights:
    """Pesos da perda total: atração, repulsão e consistência."""

    lambda_att: float = 1.0
    lambda_rep: float = 0.01
    lambda_con: float = 1.0

    def __post_init__(self):
        """Valida configurações após inicialização."""
        for name, value in asdict(self).items():
            if not math.isfinite(value):
                raise ValueError(f"{name} deve ser finito")

            if value < 0:
                raise ValueError(f"{name} não pode ser negativo")

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


class LossTerm(NamedTuple):
    """Valor escalar de um termo e se ele foi pulado (S_RDS com no máximo um exemplo)."""

    value: torch.Tensor
    skipped: bool = False
