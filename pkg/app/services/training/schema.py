"""
Schemas de validação para configurações de treino.

O schema rejeita chaves desconhecidas e aplica os padrões documentados;
a CLI gera uma flag de override para cada campo.
"""

from marshmallow import RAISE, Schema, ValidationError, fields, post_load, validate, validates_schema

from app.services.training.config import MODES, OPTIMIZERS, REPULSION_MODES, TrainConfig
from app.services.training.interfaces import TrainingConfigError

_positive = validate.Range(min=1)
_non_negative = validate.Range(min=0)


class TrainConfigSchema(Schema):
    """Schema para arquivos de configuração de treino (JSON)."""

    class Meta:
        unknown = RAISE

    manifest = fields.Str(load_default="")
    backend = fields.Str(load_default="stub:seed=7")
    mode = fields.Str(load_default="text_prompt", validate=validate.OneOf(MODES))
    prototype_bank = fields.Str(load_default=None, allow_none=True)
    categories_file = fields.Str(load_default=None, allow_none=True)
    template = fields.Str(load_default="image of a [CLASS].")
    sensor_width = fields.Int(load_default=240, validate=_positive)
    sensor_height = fields.Int(load_default=180, validate=_positive)

    batch_size = fields.Int(load_default=32, validate=_positive)
    k = fields.Int(load_default=6, validate=_positive)
    t_bins = fields.Int(load_default=9, validate=_positive)
    resize = fields.Int(load_default=224, validate=_positive)
    crop = fields.Int(load_default=128, validate=_positive)

    lambda_att = fields.Float(load_default=1.0, validate=_non_negative)
    lambda_rep = fields.Float(load_default=0.01, validate=_non_negative)
    lambda_con = fields.Float(load_default=1.0, validate=_non_negative)
    loss_temperature = fields.Float(load_default=1.0, validate=validate.Range(min=0, min_inclusive=False))
    prediction_temperature = fields.Float(load_default=0.01, validate=validate.Range(min=0, min_inclusive=False))
    repulsion_mode = fields.Str(load_default="agnostic", validate=validate.OneOf(REPULSION_MODES))
    use_ppi = fields.Bool(load_default=True)
    use_trci = fields.Bool(load_default=True)

    optimizer = fields.Str(load_default="lamb", validate=validate.OneOf(OPTIMIZERS))
    learning_rate = fields.Float(load_default=6e-3, validate=validate.Range(min=0, min_inclusive=False))
    weight_decay = fields.Float(load_default=1e-4, validate=_non_negative)

    steps = fields.Int(load_default=1000, validate=_non_negative)
    epochs = fields.Int(load_default=None, allow_none=True, validate=_non_negative)
    seed = fields.Int(load_default=0)
    checkpoint_every = fields.Int(load_default=500, validate=_non_negative)
    workers = fields.Int(load_default=0, validate=_non_negative)

    net_levels = fields.Int(load_default=3, validate=_positive)
    net_base_channels = fields.Int(load_default=32, validate=_positive)
    net_residual_blocks = fields.Int(load_default=2, validate=_non_negative)

    run_dir = fields.Str(load_default="runs/train")
    device = fields.Str(load_default="cpu")

    @validates_schema
    def validate_budget(self, data, **kwargs):
        """K não pode exceder o lote e o crop não pode exceder o resize."""
        if data.get("k", 6) > data.get("batch_size", 32):
            raise ValidationError("k não pode ser maior que batch_size", "k")

        if data.get("crop", 128) > data.get("resize", 224):
            raise ValidationError("crop não pode ser maior que resize", "crop")

    @post_load
    def make_config(self, data, **kwargs) -> TrainConfig:
        return TrainConfig.from_dict(data)


def load_train_config(data: dict) -> TrainConfig:
    """
    Valida um dicionário de configuração.

    Raises:
        TrainingConfigError: Campos inválidos ou desconhecidos (mensagem com os campos)
    """
    try:
        return TrainConfigSchema().load(data)
    except ValidationError as e:
        raise TrainingConfigError(f"Configuração inválida: {e.messages}")
