"""Behavior cloning of the scripted controller.

Supervised regression of the policy's action head on expert actions (MSE),
with the TTC head co-trained on the ground-truth time to collision.  The
TTC term is down-weighted so action imitation dominates: TTC lives on
[0, 5] and its squared errors would otherwise swamp the [-1, 1] actions.
"""

from __future__ import annotations

import numpy as np

from ..nn import Adam, mse_loss
from ..reward import normalize_state
from .nets import PolicyNet

BC_TTC_WEIGHT = 0.1
MIN_DEMOS = 100


def bc_train(demos, seed: int = 0, epochs: int = 20, lr: float = 1e-3,
             batch_size: int = 64):
    """Train a fresh policy on (state, expert_action, ttc_truth) demos.

    Returns ``(policy, per-epoch action-MSE history)``.
    """
    if len(demos) < MIN_DEMOS:
        raise ValueError(f"need at least {MIN_DEMOS} demos, got {len(demos)}")
    rng = np.random.default_rng(seed)
    policy = PolicyNet(rng)
    states = normalize_state(np.stack([d[0] for d in demos]))
    actions = np.array([[float(d[1])] for d in demos])
    ttcs = np.array([[float(d[2])] for d in demos])
    n = len(demos)
    opt = Adam(policy.params(), lr=lr)
    history = []
    for _ in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            a_pred, t_pred = policy.forward(states[idx])
            a_loss, d_a = mse_loss(a_pred, actions[idx])
            _, d_t = mse_loss(t_pred, ttcs[idx])
            opt.zero_grad()
            policy.backward(d_action=d_a, d_ttc=BC_TTC_WEIGHT * d_t)
            opt.step()
            total += a_loss * len(idx)
        history.append(total / n)
    return policy, history
