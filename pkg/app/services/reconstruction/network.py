"""
Rede de reconstrução G: U-Net totalmente convolucional com blocos residuais no gargalo.

Topologia (levels=3, largura base b):
    entrada(2T) -> ConvBlock(b) -> pool -> ConvBlock(2b) -> pool -> ConvBlock(4b)
    -> ResidualBlock(4b) x residual_blocks
    -> up + concat -> ConvBlock(2b) -> up + concat -> ConvBlock(b) -> conv1x1 -> sigmoid
"""

import logging
from typing import List

import torch
import torch.nn as nn
import torch.nn.functional as F

from app.services.reconstruction.interfaces import ReconstructionConfigError
from app.services.reconstruction.models import IntensityImage, ReconNetConfig
from app.services.representation.models import EventTensor

logger = logging.getLogger(__name__)


def _activation(name: str) -> nn.Module:
    if name == "silu":
        return nn.SiLU()
    if name == "elu":
        return nn.ELU()
    return nn.ReLU()


def _norm(name: str, channels: int) -> nn.Module:
    if name == "instance":
        return nn.InstanceNorm2d(channels, affine=True, track_running_stats=False)
    return nn.Identity()


class ConvLayer(nn.Sequential):
    """conv3x3 -> normalização -> ativação."""

    def __init__(self, in_channels: int, out_channels: int, config: ReconNetConfig):
        super().__init__(
            nn.Conv2d(in_channels, out_channels, kernel_size=3, padding=1, padding_mode=config.padding_mode),
            _norm(config.normalization, out_channels),
            _activation(config.activation),
        )


class ConvBlock(nn.Sequential):
    """Duas ConvLayer em sequência."""

    def __init__(self, in_channels: int, out_channels: int, config: ReconNetConfig):
        super().__init__(ConvLayer(in_channels, out_channels, config), ConvLayer(out_channels, out_channels, config))


class ResidualBlock(nn.Module):
    """conv-norm-act-conv-norm com atalho identidade e ativação final."""

    def __init__(self, channels: int, config: ReconNetConfig):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(channels, channels, kernel_size=3, padding=1, padding_mode=config.padding_mode),
            _norm(config.normalization, channels),
            _activation(config.activation),
            nn.Conv2d(channels, channels, kernel_size=3, padding=1, padding_mode=config.padding_mode),
            _norm(config.normalization, channels),
        )
        self.act = _activation(config.activation)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.act(x + self.body(x))


class ReconstructionNet(nn.Module):
    """U-Net que mapeia um EST (B, 2T, H, W) para uma imagem (B, 1, H, W) em [0, 1]."""

    def __init__(self, config: ReconNetConfig):
        super().__init__()
        self.config = config
        widths = config.widths

        self.encoders = nn.ModuleList()
        in_channels = config.input_channels
        for width in widths:
            self.encoders.append(ConvBlock(in_channels, width, config))
            in_channels = width

        self.bottleneck = nn.Sequential(*[ResidualBlock(widths[-1], config) for _ in range(config.residual_blocks)])

        self.decoders = nn.ModuleList()
        for level in reversed(range(len(widths) - 1)):
            self.decoders.append(ConvBlock(widths[level + 1] + widths[level], widths[level], config))

        self.head = nn.Conv2d(widths[0], 1, kernel_size=1)

    def check_input(self, x: torch.Tensor) -> None:
        """Valida canais e divisibilidade espacial da entrada."""
        if x.dim() != 4:
            raise ReconstructionConfigError(f"Entrada deve ter forma (B, C, H, W), recebido {tuple(x.shape)}")
        if x.shape[1] != self.config.input_channels:
            raise ReconstructionConfigError(f"Canais de entrada: esperado {self.config.input_channels}, recebido {x.shape[1]}")
        factor = self.config.downsampling_factor
        height, width = int(x.shape[-2]), int(x.shape[-1])
        if height % factor or width % factor or min(height, width) // factor < 2:
            raise ReconstructionConfigError(f"Tamanho {height}x{width} precisa ser múltiplo de {factor} com pelo menos {2 * factor} pixels")

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        self.check_input(x)
        if self.config.input_standardization:
            mean = x.mean(dim=(1, 2, 3), keepdim=True)
            std = x.std(dim=(1, 2, 3), keepdim=True).clamp_min(1e-6)
            x = (x - mean) / std

        skips: List[torch.Tensor] = []
        for level, encoder in enumerate(self.encoders):
            if level > 0:
                x = F.avg_pool2d(x, kernel_size=2)
            x = encoder(x)
            skips.append(x)

        x = self.bottleneck(skips.pop())

        for decoder in self.decoders:
            skip = skips.pop()
            x = F.interpolate(x, size=skip.shape[-2:], mode="bilinear", align_corners=False)
            x = decoder(torch.cat([x, skip], dim=1))

        return torch.sigmoid(self.head(x))


def count_parameters(net: nn.Module) -> int:
    return sum(parameter.numel() for parameter in net.parameters())


def init_network(config: ReconNetConfig, seed: int) -> ReconstructionNet:
    """
    Inicializa a rede de forma determinística a partir da semente.

    Returns:
        ReconstructionNet com parâmetros idênticos para o mesmo (config, seed)
    """
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        net = ReconstructionNet(config)

    logger.info(f"Rede de reconstrução inicializada (seed={seed}): {count_parameters(net)} parâmetros, níveis={config.levels}, base={config.base_channels}")
    return net


def reconstruct(net: ReconstructionNet, tensor: EventTensor) -> IntensityImage:
    """
    Reconstrói a imagem de intensidade de um único EST.

    Raises:
        ReconstructionConfigError: Canais ou tamanho incompatíveis
    """
    reference = next(net.parameters())
    x = tensor.as_network_input().unsqueeze(0).to(device=reference.device, dtype=reference.dtype)
    with torch.no_grad():
        image = net(x)
    return IntensityImage(data=image[0, 0].cpu())
