"""Minimal tensor/layer engine: forward/backward, activations, loss, Adam."""

from .layers import (
    ACTIVATIONS,
    Activation,
    BatchNorm,
    Conv1d,
    Dense,
    Dropout,
    Flatten,
    MaxPoolAxis0,
    relu,
    softsign,
    softsign_grad,
)
from .network import (
    LayerSpec,
    Network,
    activation,
    batchnorm,
    conv1d,
    dense,
    dropout,
    flatten,
    maxpool_axis0,
)
from .optim import AdamState, adam_step, mse_loss

__all__ = [
    "ACTIVATIONS",
    "Activation",
    "AdamState",
    "BatchNorm",
    "Conv1d",
    "Dense",
    "Dropout",
    "Flatten",
    "LayerSpec",
    "MaxPoolAxis0",
    "Network",
    "activation",
    "adam_step",
    "batchnorm",
    "conv1d",
    "dense",
    "dropout",
    "flatten",
    "maxpool_axis0",
    "mse_loss",
    "relu",
    "softsign",
    "softsign_grad",
]
