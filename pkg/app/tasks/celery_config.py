from celery import Celery
from kombu import Exchange, Queue

from app.flask_config import Config

default_exchange = Exchange("evrec_tasks", type="direct")

# Lista única de módulos de tasks
TASK_MODULES = [
    "app.tasks.training_tasks",
]

task_queues = (Queue("training_queue", default_exchange, routing_key="training"),)

task_routes = {
    "app.tasks.training_tasks.train_job": {"queue": "training_queue", "routing_key": "training"},
    "app.tasks.training_tasks.sweep_k_job": {"queue": "training_queue", "routing_key": "training"},
}


def make_celery(app_name=__name__):
    # Fora de produção o broker em memória e o modo eager dispensam serviços externos
    celery = Celery(
        app_name,
        broker=Config.CELERY_BROKER_URL,
        backend=Config.CELERY_RESULT_BACKEND,
        include=TASK_MODULES,
    )

    celery_config = {
        # Serialização
        "task_serializer": "json",
        "accept_content": ["json"],
        "result_serializer": "json",
        # Configuração de filas e rotas
        "task_queues": task_queues,
        "task_routes": task_routes,
        "task_default_queue": "training_queue",
        "timezone": "America/Sao_Paulo",
        "enable_utc": True,
        "imports": TASK_MODULES,
        "task_create_missing_queues": True,
        # Execução síncrona para desenvolvimento e testes
        "task_always_eager": Config.CELERY_ALWAYS_EAGER,
        "task_eager_propagates": False,
        "task_store_eager_result": True,
        "task_track_started": True,
        "result_expires": 43200,  # 12 horas
        # Treinos longos: uma task por vez por worker
        "task_acks_late": True,
        "worker_prefetch_multiplier": 1,
        "task_reject_on_worker_lost": True,
        "broker_connection_retry_on_startup": True,
    }

    celery.conf.update(celery_config)

    return celery


celery_app = make_celery("evrec_tasks")
