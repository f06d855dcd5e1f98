from dataclasses import dataclass
from typing import Any, Dict, Tuple


@dataclass(frozen=True)
class ReliabilitySets:
    """Conjuntos de índices do lote: PPI (ordenado por confiança), TRCI e RDS (crescente)."""

    s_ppi: Tuple[int, ...]
    s_trci: Tuple[int, ...]
    s_rds: Tuple[int, ...]
    k: int
    batch_size: int

    def __post_init__(self):
        if len(self.s_ppi) != min(self.k, self.batch_size):
            raise ValueError(f"|S_PPI| deve ser min(K, B) = {min(self.k, self.batch_size)}, recebido {len(self.s_ppi)}")

        for name in ("s_ppi", "s_trci", "s_rds"):
            if any(not 0 <= index < self.batch_size for index in getattr(self, name)):
                raise ValueError(f"{name} contém índice fora de [0, {self.batch_size})")

        if set(self.s_rds) != set(self.s_ppi) & set(self.s_trci):
            raise ValueError("S_RDS deve ser a interseção de S_PPI e S_TRCI")

    def to_log(self) -> Dict[str, Any]:
        return {
            "ppi_size": len(self.s_ppi),
            "trci_size": len(self.s_trci),
            "rds_size": len(self.s_rds),
            "rds_indices": list(self.s_rds),
        }
