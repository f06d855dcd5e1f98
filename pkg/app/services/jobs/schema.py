"""Schemas de validação para as rotas de jobs."""

from marshmallow import Schema, ValidationError, fields, validate, validates

from app.services.training.schema import TrainConfigSchema


class TrainJobSchema(Schema):
    """Corpo de POST /jobs/train."""

    config = fields.Dict(required=True)

    @validates("config")
    def validate_config(self, value, **kwargs):
        errors = TrainConfigSchema().validate(value)
        if errors:
            raise ValidationError(errors)


class SweepKJobSchema(TrainJobSchema):
    """Corpo de POST /jobs/sweep-k."""

    k_values = fields.List(fields.Int(validate=validate.Range(min=1)), load_default=[2, 4, 6, 8, 16, 32], validate=validate.Length(min=1))
