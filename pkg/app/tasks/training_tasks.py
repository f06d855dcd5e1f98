"""
Tasks do Celery para treino e varredura de K.

O estado PROGRESS traz o passo (treino) ou a execução (varredura) corrente.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List

from app.flask_config import Config
from app.services.evaluation.harness import k_sweep
from app.services.evaluation.reports import emit_report
from app.services.training.schema import load_train_config
from app.services.training.trainer import train
from app.utils.responses import AppError

from .celery_config import celery_app

logger = logging.getLogger(__name__)

PROGRESS_EVERY = 10


def _with_run_dir(config_dict: Dict[str, Any], task_id: str) -> Dict[str, Any]:
    """Sem run_dir explícito, a task grava em Config.RUNS_DIR/<id da task>."""
    if config_dict.get("run_dir"):
        return config_dict
    return {**config_dict, "run_dir": str(Path(Config.RUNS_DIR) / task_id)}


@celery_app.task(bind=True, name="app.tasks.training_tasks.train_job")
def train_job(self, config_dict: Dict[str, Any]) -> Dict[str, Any]:
    """
    Task de treino.

    Args:
        config_dict: Configuração de treino (mesmo formato do arquivo JSON)

    Returns:
        Caminho do checkpoint final ou erro
    """
    try:
        config = load_train_config(_with_run_dir(config_dict, self.request.id))
        logger.info(f"Iniciando treino em {config.run_dir}")

        def progress(step: int, total: int, record: dict) -> None:
            if step % PROGRESS_EVERY == 0 or step == total:
                self.update_state(state="PROGRESS", meta={"current": step, "total": total, "loss": record.get("total"), "rds_size": record.get("rds_size")})

        checkpoint = train(config, progress=progress)
        return {"success": True, "checkpoint": str(checkpoint), "run_dir": config.run_dir}

    except AppError as e:
        logger.error(f"Treino falhou: {e.message}")
        return {"success": False, "error": e.message, "error_code": e.error_code.value}


@celery_app.task(bind=True, name="app.tasks.training_tasks.sweep_k_job")
def sweep_k_job(self, config_dict: Dict[str, Any], k_values: List[int]) -> Dict[str, Any]:
    """Task de varredura de K; grava tabela e gráfico em run_dir/k_sweep."""
    try:
        config = load_train_config(_with_run_dir(config_dict, self.request.id))
        logger.info(f"Iniciando varredura de K {k_values} em {config.run_dir}")

        def on_run(current: int, total: int, row: dict) -> None:
            self.update_state(state="PROGRESS", meta={"current": current, "total": total, "last": row})

        table = k_sweep(config, k_values, on_run=on_run)
        files = emit_report(table, f"{config.run_dir}/k_sweep")
        return {"success": True, "rows": table.rows, "files": [str(path) for path in files]}

    except AppError as e:
        logger.error(f"Varredura de K falhou: {e.message}")
        return {"success": False, "error": e.message, "error_code": e.error_code.value}
