from flask import Blueprint

from app.services.health.views import health_bp
from app.services.jobs.views import jobs_bp
from app.services.recognition.views import recognition_bp

blueprint_v1 = Blueprint("v1", __name__)

blueprint_v1.register_blueprint(health_bp, url_prefix="/health")
blueprint_v1.register_blueprint(recognition_bp, url_prefix="/recognition")
blueprint_v1.register_blueprint(jobs_bp, url_prefix="/jobs")
