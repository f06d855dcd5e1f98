"""Schemas de validação para a API de reconhecimento."""

from marshmallow import Schema, fields, validate

EVENT_FORMATS = ("binary", "text")


class RecognitionRequestSchema(Schema):
    """Campos de formulário que acompanham o arquivo de eventos."""

    format = fields.Str(load_default="binary", validate=validate.OneOf(EVENT_FORMATS))
    categories = fields.List(fields.Str(validate=validate.Length(min=1)), load_default=None, allow_none=True)
    sensor_width = fields.Int(load_default=None, allow_none=True, validate=validate.Range(min=1))
    sensor_height = fields.Int(load_default=None, allow_none=True, validate=validate.Range(min=1))


class PredictionResponseSchema(Schema):
    category = fields.Str(required=True)
    index = fields.Int(required=True)
    probabilities = fields.Dict(keys=fields.Str(), values=fields.Float(), required=True)
    n_events = fields.Int(required=True)
