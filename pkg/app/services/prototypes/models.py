"""
Banco de protótipos visuais por categoria.

A ordem de categories acompanha a das features textuais, então o índice de
pseudo-rótulo do treino indexa o banco diretamente.
"""

from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
import torch
import torch.nn.functional as F

from app.services.prototypes.interfaces import UnknownCategoryError


@dataclass
class PrototypeBank:
    categories: List[str]
    prototypes: Dict[str, torch.Tensor]
    clusters: int
    linkage: str = "average"
    metric: str = "cosine"
    sizes: Dict[str, List[int]] = field(default_factory=dict)

    def __post_init__(self):
        if self.clusters < 1:
            raise ValueError("clusters deve ser maior que zero")

        for name in self.categories:
            if name not in self.prototypes:
                raise ValueError(f"Categoria {name} sem protótipos")
            if self.prototypes[name].shape[0] != self.clusters:
                raise ValueError(f"Categoria {name} tem {self.prototypes[name].shape[0]} protótipos, esperado {self.clusters}")
            self.prototypes[name] = F.normalize(self.prototypes[name].float(), dim=-1)

    @property
    def dim(self) -> int:
        return int(self.prototypes[self.categories[0]].shape[1])

    def has_index(self, index: int) -> bool:
        return 0 <= index < len(self.categories)

    def matrix(self, category: str) -> torch.Tensor:
        """Protótipos W^c (L, D)."""
        if category not in self.prototypes:
            raise UnknownCategoryError(f"Categoria desconhecida no banco: {category}")
        return self.prototypes[category]

    def prototype(self, index: int, cluster: int) -> torch.Tensor:
        return self.matrix(self.categories[index])[cluster]

    def assign_index(self, v: torch.Tensor, index: int) -> int:
        if not self.has_index(index):
            raise UnknownCategoryError(f"Índice de categoria {index} fora do banco ({len(self.categories)} categorias)")
        return assign_cluster(v, self.categories[index], self)

    def restricted_to(self, categories: List[str]) -> "PrototypeBank":
        """Banco com as categorias na ordem dada (mesmos tensores)."""
        return PrototypeBank(categories=list(categories), prototypes={name: self.matrix(name) for name in categories}, clusters=self.clusters, linkage=self.linkage, metric=self.metric)


def assign_cluster(v: torch.Tensor, category: str, bank: PrototypeBank) -> int:
    """
    l = argmax_j v . w_j^c, empates para o menor índice, sem gradiente.

    Raises:
        UnknownCategoryError: Categoria ausente do banco
    """
    with torch.no_grad():
        scores = bank.matrix(category).to(v.dtype) @ v.detach()
    return int(np.argmax(scores.cpu().numpy()))
