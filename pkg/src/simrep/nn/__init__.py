from .adam import AdamState, adam_step
from .gradcheck import grad_check, standard_check_specs
from .network import EncoderWeights, LayerParams, backward, forward, init_encoder
from .spec import (
    Activation,
    Conv1D,
    Conv2D,
    Dense,
    EncoderSpec,
    Flatten,
    GlobalAvgPool,
    MaxPool,
    ShapeError,
)

__all__ = [
    "Activation", "AdamState", "Conv1D", "Conv2D", "Dense", "EncoderSpec",
    "EncoderWeights", "Flatten", "GlobalAvgPool", "LayerParams", "MaxPool",
    "ShapeError", "adam_step", "backward", "forward", "grad_check",
    "init_encoder", "standard_check_specs",
]
