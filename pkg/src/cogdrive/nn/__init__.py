"""Minimal float64 neural-network engine with explicit backward passes."""

from .core import (
    Param,
    Layer,
    Dense,
    Conv2d,
    conv2d,
    ReLU,
    Tanh,
    Sigmoid,
    ScaledSigmoid,
    GlobalAvgPool,
    Flatten,
    Sequential,
    SelfAttention,
    softmax,
)
from .losses import bce_loss, mse_loss
from .optim import Adam, adam_step
from .gradcheck import grad_check
from .serialize import save_weights, load_weights, assign_weights

__all__ = [
    "Param",
    "Layer",
    "Dense",
    "Conv2d",
    "conv2d",
    "ReLU",
    "Tanh",
    "Sigmoid",
    "ScaledSigmoid",
    "GlobalAvgPool",
    "Flatten",
    "Sequential",
    "SelfAttention",
    "softmax",
    "bce_loss",
    "mse_loss",
    "Adam",
    "adam_step",
    "grad_check",
    "save_weights",
    "load_weights",
    "assign_weights",
]
