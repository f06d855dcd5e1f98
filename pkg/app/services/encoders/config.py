"""
Configuração dos backends de codificação.

Identificadores aceitos:
    "stub:seed=7,dim=64,size=16"    backend determinístico de testes
    "openclip:ViT-B-32@openai"       CLIP via open_clip (modelo@pesos)
    "/caminho/para/pesos.pt"         CLIP ViT-B-32 com pesos locais
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Tuple

CLIP_MEAN = (0.48145466, 0.4578275, 0.40821073)
CLIP_STD = (0.26862954, 0.26130258, 0.27577711)


@dataclass(frozen=True)
class PreprocessSpec:
    """Pré-processamento de imagem: replicação para 3 canais, resize e normalização por canal."""

    image_size: int = 16
    mean: Tuple[float, float, float] = (0.5, 0.5, 0.5)
    std: Tuple[float, float, float] = (0.5, 0.5, 0.5)
    channels: int = 3

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class StubBackendConfig:
    """Configuração do backend stub."""

    seed: int = 7
    dim: int = 64
    size: int = 16
    concept_seed: int = 0
    prompt_noise: float = 0.1

    def __post_init__(self):
        """Valida configurações após inicialização."""
        if self.dim < 1:
            raise ValueError("dim deve ser maior que zero")

        if self.size < 4:
            raise ValueError("size deve ser pelo menos 4")

        if self.prompt_noise < 0:
            raise ValueError("prompt_noise não pode ser negativo")


@dataclass
class OpenClipBackendConfig:
    """Configuração do backend CLIP (open_clip)."""

    model_name: str = "ViT-B-32"
    pretrained: str = "openai"
    device: str = "cpu"
    extra: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.model_name:
            raise ValueError("model_name é obrigatório")

        if not self.pretrained:
            raise ValueError("pretrained é obrigatório")
