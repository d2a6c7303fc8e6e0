"""Central finite-difference gradient checking for layers.

The check projects the layer output onto a fixed random direction ``R`` so the
loss is the scalar ``sum(forward(x) * R)``.  Analytic gradients come from one
``backward(R)`` call; numerical ones from central differences on every input
and parameter element.  The reported figure is the maximum relative error

    |analytic - numeric| / max(|analytic| + |numeric|, 1e-6)

across all coordinates.  For layers whose output is linear in the perturbed
quantity the central difference is exact up to float rounding, so the error
lands near 1e-10; smooth nonlinear layers sit a few orders above that.
"""

from __future__ import annotations

import numpy as np

from .core import Layer, as_tensor

_DENOM_FLOOR = 1e-6


def _rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), _DENOM_FLOOR)
    return float(np.max(np.abs(analytic - numeric) / denom)) \
        if analytic.size else 0.0


def grad_check(layer: Layer, x: np.ndarray, eps: float = 1e-5,
               seed: int = 0) -> float:
    """Return the worst relative error between analytic and numeric grads."""
    x = as_tensor(x).copy()
    rng = np.random.default_rng(seed)
    out = layer.forward(x)
    proj = rng.normal(size=out.shape)

    for p in layer.params():
        p.zero_grad()
    dx = layer.backward(proj)

    def loss() -> float:
        return float(np.sum(layer.forward(x) * proj))

    worst = 0.0

    num_dx = np.zeros_like(x)
    flat = x.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = loss()
        flat[i] = orig - eps
        lo = loss()
        flat[i] = orig
        num_dx.reshape(-1)[i] = (hi - lo) / (2.0 * eps)
    worst = max(worst, _rel_err(as_tensor(dx), num_dx))

    for p in layer.params():
        analytic = p.grad.copy()
        numeric = np.zeros_like(analytic)
        pflat = p.value.reshape(-1)
        nflat = numeric.reshape(-1)
        for i in range(pflat.size):
            orig = pflat[i]
            pflat[i] = orig + eps
            hi = loss()
            pflat[i] = orig - eps
            lo = loss()
            pflat[i] = orig
            nflat[i] = (hi - lo) / (2.0 * eps)
        worst = max(worst, _rel_err(analytic, numeric))

    return worst
