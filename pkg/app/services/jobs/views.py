import logging

from flask import Blueprint, request
from marshmallow import ValidationError

from app.services.jobs.schema import SweepKJobSchema, TrainJobSchema
from app.tasks.celery_config import celery_app
from app.tasks.training_tasks import sweep_k_job, train_job
from app.utils.responses import success_response, validation_error_response_fields

logger = logging.getLogger(__name__)

jobs_bp = Blueprint("jobs", __name__)


def _accepted(task, message: str):
    return success_response({"task_id": task.id, "status_url": f"/v1/jobs/status/{task.id}"}, message).to_json_response(202)


@jobs_bp.route("/train", methods=["POST"])
def start_training():
    """
    Inicia um treino em background.

    Body esperado:
    {
        "config": {"manifest": "data/synthetic/manifest.csv", "steps": 200, ...}
    }
    """
    try:
        data = TrainJobSchema().load(request.get_json() or {})
    except ValidationError as e:
        return validation_error_response_fields(e)

    task = train_job.delay(data["config"])
    logger.info(f"Treino enfileirado: {task.id}")
    return _accepted(task, "Treino iniciado")


@jobs_bp.route("/sweep-k", methods=["POST"])
def start_k_sweep():
    """
    Inicia uma varredura de K em background.

    Body esperado:
    {
        "config": {...},
        "k_values": [2, 4, 6, 8, 16, 32]  // opcional
    }
    """
    try:
        data = SweepKJobSchema().load(request.get_json() or {})
    except ValidationError as e:
        return validation_error_response_fields(e)

    task = sweep_k_job.delay(data["config"], data["k_values"])
    logger.info(f"Varredura de K enfileirada: {task.id}")
    return _accepted(task, "Varredura de K iniciada")


@jobs_bp.route("/status/<task_id>", methods=["GET"])
def get_task_status(task_id):
    """Estado de uma task: PENDING, STARTED, PROGRESS, SUCCESS ou FAILURE."""
    task = celery_app.AsyncResult(task_id)

    if task.state == "PENDING":
        response = {"task_id": task_id, "state": task.state, "status": "Aguardando processamento..."}
    elif task.state == "PROGRESS":
        info = task.info or {}
        response = {"task_id": task_id, "state": task.state, "current": info.get("current", 0), "total": info.get("total", 0), "status": "Processando..."}
    elif task.state == "SUCCESS":
        response = {"task_id": task_id, "state": task.state, "result": task.result, "status": "Concluído"}
    else:
        response = {"task_id": task_id, "state": task.state, "error": str(task.info) if task.info else "Erro desconhecido", "status": "Falhou"}

    return success_response(response).to_json_response()
