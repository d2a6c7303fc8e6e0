"""Adam with bias correction, operating in place on :class:`Param` state."""

from __future__ import annotations

import logging

import numpy as np

from .core import Param

log = logging.getLogger(__name__)


def adam_step(param: Param, lr: float, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> bool:
    """Apply one Adam update to ``param`` using ``param.grad``.

    m <- b1*m + (1-b1)*g        v <- b2*v + (1-b2)*g^2
    update = lr * m_hat / (sqrt(v_hat) + eps) with bias-corrected moments.

    A non-finite gradient skips the update (the parameter, moments and step
    count are left untouched) and is reported through a warning; the return
    value says whether the update was applied.
    """
    g = param.grad
    if not np.all(np.isfinite(g)):
        log.warning("adam_step: non-finite gradient for param of shape %s; "
                    "update skipped", param.value.shape)
        return False
    param.t += 1
    param.m = beta1 * param.m + (1.0 - beta1) * g
    param.v = beta2 * param.v + (1.0 - beta2) * (g * g)
    m_hat = param.m / (1.0 - beta1 ** param.t)
    v_hat = param.v / (1.0 - beta2 ** param.t)
    param.value -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return True


class Adam:
    """Convenience wrapper applying :func:`adam_step` to a parameter list."""

    def __init__(self, params: list[Param], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def step(self) -> int:
        """Update every parameter; returns how many updates were applied."""
        applied = 0
        for p in self.params:
            applied += adam_step(p, self.lr, self.beta1, self.beta2, self.eps)
        return applied

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()
