"""
Views para reconhecimento de eventos.

Os endpoints recebem o arquivo de eventos como multipart (campo "events").
"""

import io

from flask import Blueprint, request, send_file
from marshmallow import ValidationError

from app.services.recognition.controller import RecognitionController
from app.services.recognition.schema import RecognitionRequestSchema
from app.utils.responses import AppError, ErrorCode, error_response, success_response, validation_error_response_fields

recognition_bp = Blueprint("recognition", __name__)

recognition_controller = RecognitionController()


def _request_payload():
    upload = request.files.get("events")
    if upload is None:
        raise ValidationError({"events": ["Arquivo de eventos é obrigatório"]})
    form = {key: value for key, value in request.form.items() if key != "categories"}
    if request.form.getlist("categories"):
        form["categories"] = [name for value in request.form.getlist("categories") for name in value.split(",") if name.strip()]
    return upload.read(), RecognitionRequestSchema().load(form)


@recognition_bp.route("/predict", methods=["POST"])
def predict():
    """
    Classifica um fluxo de eventos.

    Form esperado:
        events: arquivo (binário de 5 bytes por evento ou texto "t x y p")
        format: "binary" | "text"  // opcional
        categories: "a,b,c"  // opcional, padrão: categorias do checkpoint
    """
    try:
        raw, options = _request_payload()
        result = recognition_controller.predict(
            raw, categories=options["categories"], event_format=options["format"], sensor_width=options["sensor_width"], sensor_height=options["sensor_height"]
        )
        return success_response(result).to_json_response()
    except ValidationError as e:
        return validation_error_response_fields(e)
    except AppError as e:
        return e.to_json_response()
    except UnicodeDecodeError:
        return error_response("Arquivo texto com codificação inválida", ErrorCode.INVALID_FORMAT).to_json_response(400)


@recognition_bp.route("/reconstruct", methods=["POST"])
def reconstruct():
    """Devolve a reconstrução do fluxo como PNG 8 bits."""
    try:
        raw, options = _request_payload()
        png = recognition_controller.reconstruct_png(raw, event_format=options["format"], sensor_width=options["sensor_width"], sensor_height=options["sensor_height"])
        return send_file(io.BytesIO(png), mimetype="image/png", download_name="reconstruction.png")
    except ValidationError as e:
        return validation_error_response_fields(e)
    except AppError as e:
        return e.to_json_response()
    except UnicodeDecodeError:
        return error_response("Arquivo texto com codificação inválida", ErrorCode.INVALID_FORMAT).to_json_response(400)
