"""
Protocolos experimentais: varredura de K, ablação, grade de lambdas e templates.

Cada linha é um treino completo seguido de avaliação padrão, com a mesma
semente e o mesmo backend; só os campos varridos mudam.
"""

import logging
from pathlib import Path
from typing import Callable, Optional, Sequence

from app.services.encoders.factories import load_backend
from app.services.encoders.interfaces import EncoderBackend
from app.services.encoders.prompts import PROMPT_SWEEP_TEMPLATES
from app.services.evaluation.evaluator import evaluate
from app.services.evaluation.models import ABLATION_ROWS, AblationRow, EvalReport, SweepTable
from app.services.training.config import TrainConfig
from app.services.training.dataset import resolve_categories
from app.services.training.trainer import train

logger = logging.getLogger(__name__)

DEFAULT_K_VALUES = (2, 4, 6, 8, 16, 32)
DEFAULT_LAMBDA_REP = (0.005, 0.01, 0.02)
DEFAULT_LAMBDA_CON = (0.5, 1.0, 2.0)

RunCallback = Callable[[int, int, dict], None]


def train_and_evaluate(config: TrainConfig, backend: EncoderBackend) -> EvalReport:
    """Treina com config e avalia o checkpoint final no split de teste."""
    checkpoint = train(config, backend=backend)
    return evaluate(checkpoint, config.manifest, resolve_categories(config), backend)


def _run_rows(name: str, base: TrainConfig, variants, columns, backend: Optional[EncoderBackend], on_run: Optional[RunCallback], **table_options) -> SweepTable:
    backend = backend or load_backend(base.backend, base.device)
    table = SweepTable(name=name, columns=list(columns) + ["accuracy"], **table_options)
    variants = list(variants)
    for index, (label, values, overrides) in enumerate(variants):
        config = base.replace(run_dir=str(Path(base.run_dir) / name / label), **overrides)
        report = train_and_evaluate(config, backend)
        table.add(**values, accuracy=report.overall_accuracy)
        logger.info(f"{name} [{label}]: acurácia {report.overall_accuracy:.4f}")
        if on_run is not None:
            on_run(index + 1, len(variants), {**values, "accuracy": report.overall_accuracy})
    return table


def k_sweep(config: TrainConfig, k_values: Sequence[int] = DEFAULT_K_VALUES, backend: Optional[EncoderBackend] = None, on_run: Optional[RunCallback] = None) -> SweepTable:
    """
    Uma execução completa por K, com a mesma semente.

    K = B reproduz a seleção sem PPI.
    """
    variants = [(f"k_{k}", {"k": k}, {"k": k}) for k in k_values]
    return _run_rows("k_sweep", config, variants, ["k"], backend, on_run, x="k")


def ablation_harness(config: TrainConfig, rows: Sequence[AblationRow] = ABLATION_ROWS, backend: Optional[EncoderBackend] = None, on_run: Optional[RunCallback] = None) -> SweepTable:
    """Linhas (1) a (7): atração sempre ligada; repulsão, consistência, PPI e TRCI alternados."""
    variants = []
    for row in rows:
        flags = {"row": row.row, "repulsion": row.repulsion, "consistency": row.consistency, "ppi": row.ppi, "trci": row.trci}
        variants.append((f"row_{row.row}", flags, row.overrides(config.lambda_rep, config.lambda_con)))
    return _run_rows("ablation", config, variants, ["row", "repulsion", "consistency", "ppi", "trci"], backend, on_run, x="row", plot="bar")


def lambda_grid(
    config: TrainConfig,
    lambda_rep_values: Sequence[float] = DEFAULT_LAMBDA_REP,
    lambda_con_values: Sequence[float] = DEFAULT_LAMBDA_CON,
    backend: Optional[EncoderBackend] = None,
    on_run: Optional[RunCallback] = None,
) -> SweepTable:
    """Grade lambda_rep x lambda_con com lambda_att = 1."""
    variants = []
    for lambda_rep in lambda_rep_values:
        for lambda_con in lambda_con_values:
            values = {"lambda_rep": lambda_rep, "lambda_con": lambda_con}
            variants.append((f"rep_{lambda_rep}_con_{lambda_con}", values, {**values, "lambda_att": 1.0}))
    return _run_rows("lambda_grid", config, variants, ["lambda_rep", "lambda_con"], backend, on_run, x="lambda_rep", plot="heatmap")


def prompt_sweep(config: TrainConfig, templates: Sequence[str] = PROMPT_SWEEP_TEMPLATES, backend: Optional[EncoderBackend] = None, on_run: Optional[RunCallback] = None) -> SweepTable:
    """Treino e avaliação com cada template de prompt."""
    variants = [(f"template_{index}", {"template": template}, {"template": template}) for index, template in enumerate(templates)]
    return _run_rows("prompt_sweep", config, variants, ["template"], backend, on_run, x="template", plot="bar")
