"""
Modelos da representação de eventos.

EventTensor guarda o event spike tensor com eixos (polaridade, bin temporal,
linha, coluna). CropRect descreve o recorte quadrado compartilhado pela perda
de consistência local-global.
"""

from dataclasses import dataclass

import torch

from app.services.representation.interfaces import InvalidRectError

POLARITIES = 2


@dataclass(frozen=True, eq=False)
class EventTensor:
    """Event spike tensor (2 x T_bins x H x W), não negativo."""

    data: torch.Tensor
    n_events: int

    def __post_init__(self):
        if self.data.dim() != 4 or self.data.shape[0] != POLARITIES:
            raise ValueError(f"EventTensor espera forma (2, T, H, W), recebido {tuple(self.data.shape)}")

    @property
    def t_bins(self) -> int:
        return int(self.data.shape[1])

    @property
    def height(self) -> int:
        return int(self.data.shape[2])

    @property
    def width(self) -> int:
        return int(self.data.shape[3])

    @property
    def channels(self) -> int:
        """Número de canais de entrada da rede (2 x T_bins)."""
        return POLARITIES * self.t_bins

    def as_network_input(self) -> torch.Tensor:
        """Achata polaridade e tempo em canais: (2*T, H, W)."""
        return self.data.reshape(self.channels, self.height, self.width)


@dataclass(frozen=True)
class CropRect:
    """Recorte quadrado: deslocamentos top/left e lado em pixels."""

    top: int
    left: int
    size: int

    def validate_against(self, height: int, width: int) -> None:
        """Garante 0 <= top, top + size <= height e o mesmo para left/width."""
        if self.size < 1 or self.top < 0 or self.left < 0 or self.top + self.size > height or self.left + self.size > width:
            raise InvalidRectError(f"Recorte {self} inválido para grade {height}x{width}")

    def compose(self, inner: "CropRect") -> "CropRect":
        """Recorte equivalente a aplicar self e depois inner."""
        return CropRect(top=self.top + inner.top, left=self.left + inner.left, size=inner.size)

    def to_dict(self):
        return {"top": self.top, "left": self.left, "size": self.size}
