"""Scalar losses returning (loss, gradient-w.r.t.-prediction) pairs."""

from __future__ import annotations

import numpy as np

from .core import as_tensor

# Predictions are clamped into [EPS, 1 - EPS] before the log so a saturated
# sigmoid cannot produce an infinite loss or gradient.
EPS = 1e-7


def bce_loss(pred: np.ndarray, label: np.ndarray) -> tuple[float, np.ndarray]:
    """Binary cross-entropy, averaged over every element.

    ``pred`` holds probabilities in [0, 1]; ``label`` must contain only 0s and
    1s.  The returned gradient is with respect to the (unclamped) prediction
    and is zero where the clamp is active.
    """
    pred = as_tensor(pred)
    label = as_tensor(label)
    if pred.shape != label.shape:
        raise ValueError(f"bce_loss: shape mismatch {pred.shape} vs "
                         f"{label.shape}")
    if not np.all((label == 0.0) | (label == 1.0)):
        raise ValueError("bce_loss: labels must be 0 or 1")
    p = np.clip(pred, EPS, 1.0 - EPS)
    n = pred.size
    loss = float(-(label * np.log(p) + (1.0 - label) * np.log1p(-p)).mean())
    grad = (p - label) / (p * (1.0 - p)) / n
    grad = np.where((pred > EPS) & (pred < 1.0 - EPS), grad, 0.0)
    return loss, grad


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error, averaged over every element."""
    pred = as_tensor(pred)
    target = as_tensor(target)
    if pred.shape != target.shape:
        raise ValueError(f"mse_loss: shape mismatch {pred.shape} vs "
                         f"{target.shape}")
    diff = pred - target
    loss = float((diff * diff).mean())
    return loss, 2.0 * diff / pred.size
