"""
Emissão de relatórios: JSON, tabelas CSV (pandas) e gráficos (matplotlib).

O conteúdo dos arquivos é determinístico para o mesmo relatório.
"""

import json
import logging
from pathlib import Path
from typing import List, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from app.services.evaluation.models import EvalReport, SweepTable  # noqa: E402
from app.utils.artifacts import ArtifactError  # noqa: E402

logger = logging.getLogger(__name__)

_PNG_METADATA = {"Software": None}


def _write_json(path: Path, payload) -> Path:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def _emit_eval(report: EvalReport, out_dir: Path) -> List[Path]:
    files = [_write_json(out_dir / "report.json", report.to_dict())]

    per_category = pd.DataFrame(
        {
            "category": report.categories,
            "total": [report.category_totals()[name] for name in report.categories],
            "accuracy": [report.per_category_accuracy[name] for name in report.categories],
        }
    )
    per_category.to_csv(out_dir / "per_category.csv", index=False)
    files.append(out_dir / "per_category.csv")

    confusion = pd.DataFrame(report.confusion, index=report.categories, columns=report.prompt_categories)
    confusion.index.name = "true_category"
    confusion.to_csv(out_dir / "confusion.csv")
    files.append(out_dir / "confusion.csv")
    return files


def _plot_sweep(table: SweepTable, path: Path) -> Path:
    figure, axis = plt.subplots(figsize=(6, 4))
    if table.plot == "heatmap" and table.rows:
        grid = pd.DataFrame(table.rows).pivot(index=table.columns[0], columns=table.columns[1], values=table.y)
        image = axis.imshow(grid.values, cmap="viridis", origin="lower")
        axis.set_xticks(range(len(grid.columns)), [str(value) for value in grid.columns])
        axis.set_yticks(range(len(grid.index)), [str(value) for value in grid.index])
        axis.set_xlabel(table.columns[1])
        axis.set_ylabel(table.columns[0])
        figure.colorbar(image, ax=axis, label=table.y)
    elif table.plot == "bar":
        axis.bar([str(value) for value in table.column(table.x)], table.column(table.y))
        axis.set_xlabel(table.x)
        axis.set_ylabel(table.y)
    else:
        labels = [str(value) for value in table.column(table.x)]
        axis.plot(range(len(labels)), table.column(table.y), marker="o")
        axis.set_xticks(range(len(labels)), labels)
        axis.set_xlabel(table.x)
        axis.set_ylabel(table.y)
    axis.set_title(table.name)
    figure.tight_layout()
    figure.savefig(path, dpi=100, metadata=_PNG_METADATA)
    plt.close(figure)
    return path


def _emit_sweep(table: SweepTable, out_dir: Path) -> List[Path]:
    csv_path = out_dir / f"{table.name}.csv"
    pd.DataFrame(table.rows, columns=table.columns).to_csv(csv_path, index=False)
    files = [_write_json(out_dir / f"{table.name}.json", table.to_dict()), csv_path]
    files.append(_plot_sweep(table, out_dir / f"{table.name}.png"))
    return files


def emit_report(report: Union[EvalReport, SweepTable], out_dir: Union[str, Path]) -> List[Path]:
    """
    Grava os arquivos do relatório em out_dir.

    Returns:
        Caminhos gravados

    Raises:
        ArtifactError: Diretório não gravável
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        files = _emit_sweep(report, out_dir) if isinstance(report, SweepTable) else _emit_eval(report, out_dir)
    except OSError as e:
        raise ArtifactError(f"Erro ao gravar relatório em {out_dir}: {str(e)}")
    logger.info(f"Relatório gravado em {out_dir}: {', '.join(path.name for path in files)}")
    return files
