from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional


@dataclass
class EvalReport:
    """
    Resultado de uma avaliação.

    confusion[i][j] conta amostras da categoria verdadeira categories[i]
    preditas como prompt_categories[j].
    """

    protocol: str
    categories: List[str]
    prompt_categories: List[str]
    per_category_accuracy: Dict[str, float]
    overall_accuracy: float
    confusion: List[List[int]]
    correct: int
    total: int
    config_fingerprint: str = ""
    runtime_seconds: float = 0.0
    predictions: List[int] = field(default_factory=list)
    extra_metrics: Dict[str, float] = field(default_factory=dict)
    fid: Optional[float] = None
    inception_score: Optional[float] = None

    def __post_init__(self):
        if self.total and abs(self.overall_accuracy - self.correct / self.total) > 1e-12:
            raise ValueError("overall_accuracy deve ser correct / total")

        if not 0.0 <= self.overall_accuracy <= 1.0:
            raise ValueError("overall_accuracy deve estar em [0, 1]")

    def category_totals(self) -> Dict[str, int]:
        return {name: int(sum(row)) for name, row in zip(self.categories, self.confusion)}

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class SweepTable:
    """Tabela de um protocolo de varredura (K, lambdas, templates, ablação)."""

    name: str
    columns: List[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    x: str = ""
    y: str = "accuracy"
    plot: str = "line"

    def add(self, **row) -> None:
        missing = [column for column in self.columns if column not in row]
        if missing:
            raise ValueError(f"Linha sem as colunas {missing}")
        self.rows.append({column: row[column] for column in self.columns})

    def column(self, name: str) -> List[Any]:
        return [row[name] for row in self.rows]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class AblationRow:
    """Linha de ablação: quais componentes ficam ligados além da atração."""

    row: int
    repulsion: bool
    consistency: bool
    ppi: bool
    trci: bool

    def overrides(self, lambda_rep: float, lambda_con: float) -> Dict[str, Any]:
        return {
            "lambda_rep": lambda_rep if self.repulsion else 0.0,
            "lambda_con": lambda_con if self.consistency else 0.0,
            "use_ppi": self.ppi,
            "use_trci": self.trci,
        }


ABLATION_ROWS = (
    AblationRow(1, repulsion=False, consistency=False, ppi=False, trci=False),
    AblationRow(2, repulsion=True, consistency=False, ppi=False, trci=False),
    AblationRow(3, repulsion=True, consistency=True, ppi=False, trci=False),
    AblationRow(4, repulsion=True, consistency=False, ppi=True, trci=False),
    AblationRow(5, repulsion=True, consistency=True, ppi=True, trci=False),
    AblationRow(6, repulsion=True, consistency=False, ppi=True, trci=True),
    AblationRow(7, repulsion=True, consistency=True, ppi=True, trci=True),
)
