"""
Modelos do serviço de reconstrução.

Define a imagem de intensidade produzida pela rede G e a configuração da rede.
"""

from dataclasses import asdict, dataclass
from typing import Any, Dict

import torch

from app.services.reconstruction.interfaces import ReconstructionConfigError

NORMALIZATIONS = ("instance", "none")
ACTIVATIONS = ("silu", "elu", "relu")
PADDING_MODES = ("zeros", "reflect", "replicate")


@dataclass(frozen=True, eq=False)
class IntensityImage:
    """Imagem de um canal com valores em [0, 1]."""

    data: torch.Tensor

    def __post_init__(self):
        if self.data.dim() != 2:
            raise ValueError(f"IntensityImage espera forma (H, W), recebido {tuple(self.data.shape)}")

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    def to_uint8(self):
        """Converte para numpy uint8 (escala de cinza 8 bits)."""
        return (self.data.detach().clamp(0.0, 1.0) * 255.0).round().to(torch.uint8).cpu().numpy()


@dataclass
class ReconNetConfig:
    """Configuração da U-Net de reconstrução."""

    t_bins: int = 9
    levels: int = 3
    base_channels: int = 32
    residual_blocks: int = 2
    normalization: str = "instance"
    activation: str = "silu"
    padding_mode: str = "zeros"
    input_standardization: bool = False
    min_input_size: int = 16

    def __post_init__(self):
        """Valida configurações após inicialização."""
        if self.t_bins < 1:
            raise ReconstructionConfigError("t_bins deve ser >= 1")

        if self.levels < 1:
            raise ReconstructionConfigError("levels deve ser >= 1")

        if self.base_channels < 1:
            raise ReconstructionConfigError("base_channels deve ser >= 1")

        if self.residual_blocks < 0:
            raise ReconstructionConfigError("residual_blocks não pode ser negativo")

        if self.normalization not in NORMALIZATIONS:
            raise ReconstructionConfigError(f"normalization deve ser um de {NORMALIZATIONS}")

        if self.activation not in ACTIVATIONS:
            raise ReconstructionConfigError(f"activation deve ser um de {ACTIVATIONS}")

        if self.padding_mode not in PADDING_MODES:
            raise ReconstructionConfigError(f"padding_mode deve ser um de {PADDING_MODES}")

        factor = self.downsampling_factor
        if self.min_input_size % factor != 0 or self.min_input_size // factor < 2:
            raise ReconstructionConfigError(
                f"levels={self.levels} incompatível com min_input_size={self.min_input_size}: é preciso múltiplo de {factor} com pelo menos 2 pixels no gargalo"
            )

    @property
    def input_channels(self) -> int:
        return 2 * self.t_bins

    @property
    def downsampling_factor(self) -> int:
        return 2 ** (self.levels - 1)

    @property
    def widths(self):
        return [self.base_channels * 2**level for level in range(self.levels)]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ReconNetConfig":
        return cls(**data)
