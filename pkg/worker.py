import os
import platform
import sys

sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

from app.tasks.celery_config import celery_app  # noqa: E402
from worker_factory import create_worker_app  # noqa: E402

flask_app = create_worker_app()
celery_app.flask_app = flask_app

if __name__ == "__main__":
    worker_args = sys.argv[1:] or ["worker", "--loglevel=INFO", "--queues=training_queue"]
    if platform.system() == "Windows":
        if "--pool" not in " ".join(worker_args):
            worker_args.extend(["--pool=threads"])
        if "--concurrency" not in " ".join(worker_args):
            worker_args.extend(["--concurrency=1"])
    celery_app.worker_main(worker_args)
