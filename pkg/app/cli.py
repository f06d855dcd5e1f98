"""
Interface de linha de comando (grupo click "evrec", também registrado no flask).

Cada comando grava os arquivos produzidos e um manifest.json no diretório
de saída.
"""

import functools
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import click
from marshmallow import fields as ma_fields

from app.flask_config import Config
from app.services.encoders.factories import load_backend
from app.services.events.manifest import read_category_list
from app.services.events.parsers import read_event_file
from app.services.events.synthetic import default_synthetic_categories, write_synthetic_dataset
from app.services.evaluation.evaluator import evaluate, superset_eval, zero_shot_eval
from app.services.evaluation.harness import DEFAULT_K_VALUES, DEFAULT_LAMBDA_CON, DEFAULT_LAMBDA_REP, ablation_harness, k_sweep, lambda_grid, prompt_sweep
from app.services.evaluation.models import ABLATION_ROWS
from app.services.evaluation.reports import emit_report
from app.services.prototypes.builder import build_prototypes, load_image_folder, save_bank
from app.services.reconstruction.network import reconstruct as reconstruct_tensor
from app.services.representation.est import stream_to_input
from app.services.training.checkpoint import load_checkpoint
from app.services.training.export import save_png
from app.services.training.interfaces import TrainingConfigError
from app.services.training.schema import TrainConfigSchema, load_train_config
from app.services.training.trainer import train as run_training
from app.utils.logging_setup import configure_logging
from app.utils.responses import AppError
from app.utils.runs import prepare_run_dir, write_run_manifest

logger = logging.getLogger(__name__)

_CLICK_TYPES = {ma_fields.Integer: int, ma_fields.Float: float, ma_fields.String: str}


def handle_errors(func):
    """Converte AppError em mensagem no stderr e código de saída 1."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except AppError as e:
            click.echo(f"Erro [{e.error_code.value}] {e.__class__.__name__}: {e.message}", err=True)
            sys.exit(1)

    return wrapper


def config_options(func):
    """Uma flag de override por campo de TrainConfigSchema (--batch-size, --lambda-rep, --use-ppi/--no-use-ppi...)."""
    for name, field in reversed(list(TrainConfigSchema().fields.items())):
        flag = name.replace("_", "-")
        if isinstance(field, ma_fields.Boolean):
            func = click.option(f"--{flag}/--no-{flag}", name, default=None, help=f"Override de {name}")(func)
        else:
            click_type = next((value for kind, value in _CLICK_TYPES.items() if isinstance(field, kind)), str)
            func = click.option(f"--{flag}", name, type=click_type, default=None, help=f"Override de {name}")(func)
    return func


def _overrides(kwargs: Dict[str, Any]) -> Dict[str, Any]:
    names = set(TrainConfigSchema().fields)
    return {key: value for key, value in kwargs.items() if key in names and value is not None}


def load_config_file(path: Optional[str], overrides: Dict[str, Any]):
    """
    Lê o JSON de configuração e aplica os overrides da linha de comando.

    Raises:
        TrainingConfigError: Arquivo ilegível ou configuração inválida
    """
    data: Dict[str, Any] = {}
    if path:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise TrainingConfigError(f"Não foi possível ler {path}: {e}")
    return load_train_config({**data, **overrides})


def _split_values(text: str, kind=float) -> List:
    return [kind(value) for value in text.split(",") if value.strip()]


def _categories(path: Optional[str], fallback: List[str]) -> List[str]:
    return read_category_list(path) if path else fallback


@click.group(name="evrec")
@click.option("--log-level", default=None, help="Nível de log (padrão: EVREC_LOG_LEVEL)")
def evrec(log_level: Optional[str]):
    """Reconhecimento de eventos sem rótulos: treino, avaliação e protocolos."""
    configure_logging(log_level)


@evrec.command()
@click.option("--root", required=True, type=click.Path(file_okay=False), help="Diretório do dataset")
@click.option("--categories", "category_count", default=3, show_default=True, help="Número de categorias")
@click.option("--names", default=None, help="Nomes das categorias separados por vírgula")
@click.option("--per-category", default=40, show_default=True)
@click.option("--test-fraction", default=0.25, show_default=True)
@click.option("--sensor-size", default=32, show_default=True)
@click.option("--seed", default=0, show_default=True)
@handle_errors
def synthesize(root, category_count, names, per_category, test_fraction, sensor_size, seed):
    """Gera o dataset sintético de eventos e o manifesto."""
    categories = default_synthetic_categories(category_count, names.split(",") if names else None)
    manifest = write_synthetic_dataset(root, categories, per_category=per_category, test_fraction=test_fraction, sensor_size=sensor_size, seed=seed)
    (Path(root) / "categories.txt").write_text("\n".join(categories) + "\n", encoding="utf-8")
    write_run_manifest(root, [manifest, Path(root) / "categories.txt"], "synthesize", {"categories": categories, "sensor_size": sensor_size})
    click.echo(str(manifest))


@evrec.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--resume", type=click.Path(exists=True, dir_okay=False), default=None, help="Checkpoint para retomar")
@config_options
@handle_errors
def train(config_path, resume, **kwargs):
    """Treina a rede de reconstrução."""
    config = load_config_file(config_path, _overrides(kwargs))
    click.echo(str(run_training(config, resume=resume)))


@evrec.command()
@click.option("--checkpoint", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--events", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@handle_errors
def reconstruct(checkpoint, events, out):
    """Reconstrói um arquivo de eventos como PNG 8 bits."""
    loaded = load_checkpoint(checkpoint)
    config = loaded.train_config
    stream = read_event_file(events, config.sensor_width, config.sensor_height)
    image = reconstruct_tensor(loaded.build_network(), stream_to_input(stream, config.t_bins, config.resize))
    path = save_png(image, out)
    write_run_manifest(Path(out).parent, [path], "reconstruct", {"checkpoint": checkpoint, "events": events})
    click.echo(str(path))


@evrec.command("build-prototypes")
@click.option("--images", required=True, type=click.Path(exists=True, file_okay=False), help="Uma subpasta por categoria")
@click.option("--clusters", default=3, show_default=True, help="L protótipos por categoria")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--backend", default=None, help="Identificador do backend (padrão: EVREC_BACKEND)")
@click.option("--size", default=None, type=int, help="Redimensiona as imagens para size x size")
@click.option("--linkage", default="average", show_default=True)
@click.option("--metric", default="cosine", show_default=True)
@handle_errors
def build_prototypes_command(images, clusters, out, backend, size, linkage, metric):
    """Constrói o banco de protótipos visuais."""
    encoder = load_backend(backend or Config.BACKEND, Config.DEVICE)
    bank = build_prototypes(encoder, load_image_folder(images, size), clusters, linkage, metric)
    path = save_bank(bank, out)
    write_run_manifest(Path(out).parent, [path], "build-prototypes", {"clusters": clusters, "categories": bank.categories})
    click.echo(str(path))


def _eval_context(checkpoint: str, backend: Optional[str]):
    loaded = load_checkpoint(checkpoint)
    encoder = load_backend(backend or loaded.backend or Config.BACKEND, Config.DEVICE)
    return loaded, encoder


def _finish(report, out: str, command: str) -> None:
    prepare_run_dir(out)
    files = emit_report(report, out)
    write_run_manifest(out, files, command)
    click.echo(json.dumps({"protocol": report.protocol, "accuracy": report.overall_accuracy, "correct": report.correct, "total": report.total}))


@evrec.command("eval")
@click.option("--checkpoint", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", default=None, help="Padrão: manifesto do checkpoint")
@click.option("--categories", "categories_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--backend", default=None)
@click.option("--workers", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@handle_errors
def eval_command(checkpoint, manifest, categories_path, backend, workers, out):
    """Avaliação padrão no split de teste."""
    loaded, encoder = _eval_context(checkpoint, backend)
    categories = _categories(categories_path, loaded.categories)
    _finish(evaluate(loaded, manifest or loaded.train_config.manifest, categories, encoder, workers=workers), out, "eval")


@evrec.command("zero-shot")
@click.option("--checkpoint", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", default=None)
@click.option("--train-categories", default=None, type=click.Path(exists=True, dir_okay=False), help="Padrão: categorias do checkpoint")
@click.option("--test-categories", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--backend", default=None)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@handle_errors
def zero_shot(checkpoint, manifest, train_categories, test_categories, backend, out):
    """Reconhecimento de categorias não vistas no treino."""
    loaded, encoder = _eval_context(checkpoint, backend)
    seen = _categories(train_categories, loaded.categories)
    report = zero_shot_eval(loaded, manifest or loaded.train_config.manifest, seen, read_category_list(test_categories), encoder)
    _finish(report, out, "zero-shot")


@evrec.command()
@click.option("--checkpoint", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--extras", required=True, type=click.Path(exists=True, dir_okay=False), help="Uma categoria extra por linha")
@click.option("--manifest", default=None)
@click.option("--categories", "categories_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--backend", default=None)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@handle_errors
def superset(checkpoint, extras, manifest, categories_path, backend, out):
    """Avaliação com prompts de categorias extras."""
    loaded, encoder = _eval_context(checkpoint, backend)
    categories = _categories(categories_path, loaded.categories)
    report = superset_eval(loaded, manifest or loaded.train_config.manifest, categories, read_category_list(extras), encoder)
    _finish(report, out, "superset")


def _finish_table(table, out: str, command: str) -> None:
    prepare_run_dir(out)
    files = emit_report(table, out)
    write_run_manifest(out, files, command)
    for row in table.rows:
        click.echo(json.dumps(row))


@evrec.command("sweep-k")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--values", default=",".join(str(k) for k in DEFAULT_K_VALUES), show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@config_options
@handle_errors
def sweep_k(config_path, values, out, **kwargs):
    """Uma execução de treino e avaliação por K."""
    config = load_config_file(config_path, _overrides(kwargs))
    _finish_table(k_sweep(config, _split_values(values, int)), out, "sweep-k")


@evrec.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--rows", default=",".join(str(row.row) for row in ABLATION_ROWS), show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@config_options
@handle_errors
def ablate(config_path, rows, out, **kwargs):
    """Ablação de repulsão, consistência, PPI e TRCI."""
    config = load_config_file(config_path, _overrides(kwargs))
    wanted = set(_split_values(rows, int))
    _finish_table(ablation_harness(config, [row for row in ABLATION_ROWS if row.row in wanted]), out, "ablate")


@evrec.command("lambda-grid")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--rep-values", default=",".join(str(value) for value in DEFAULT_LAMBDA_REP), show_default=True)
@click.option("--con-values", default=",".join(str(value) for value in DEFAULT_LAMBDA_CON), show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@config_options
@handle_errors
def lambda_grid_command(config_path, rep_values, con_values, out, **kwargs):
    """Grade lambda_rep x lambda_con."""
    config = load_config_file(config_path, _overrides(kwargs))
    _finish_table(lambda_grid(config, _split_values(rep_values), _split_values(con_values)), out, "lambda-grid")


@evrec.command("prompt-sweep")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--templates", "templates", multiple=True, help="Templates com [CLASS]; padrão: os cinco estudados")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@config_options
@handle_errors
def prompt_sweep_command(config_path, templates, out, **kwargs):
    """Treino e avaliação por template de prompt."""
    config = load_config_file(config_path, _overrides(kwargs))
    table = prompt_sweep(config, templates) if templates else prompt_sweep(config)
    _finish_table(table, out, "prompt-sweep")


def main():
    evrec()


if __name__ == "__main__":
    main()
