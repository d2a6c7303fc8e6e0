"""Twin-delayed deterministic policy-gradient training.

Standard TD3 machinery -- twin critics regressed on clipped-noise Bellman
targets, delayed actor updates, polyak-averaged target networks -- with one
addition: the actor's loss carries an auxiliary time-to-collision regression

    L_total = L_pi + alpha_ttc * L_mse

so the policy's TTC head is trained on the actor path only; critic updates
never touch it.  Exploration noise is added to the action alone.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass

import numpy as np

from ..nn import Adam, mse_loss
from ..reward import normalize_state
from .buffer import ReplayBuffer
from .nets import CriticNet, PolicyNet, polyak_update

log = logging.getLogger(__name__)


@dataclass
class Td3Config:
    gamma: float = 0.99
    polyak_tau: float = 0.005
    policy_delay: int = 2
    target_noise_sigma: float = 0.2
    target_noise_clip: float = 0.5
    exploration_sigma: float = 0.1
    batch_size: int = 64
    buffer_capacity: int = 100_000
    actor_lr: float = 3e-4
    critic_lr: float = 1e-3
    alpha_ttc: float = 0.1
    total_steps: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        if not 0.0 < self.polyak_tau <= 1.0:
            raise ValueError("polyak_tau must be in (0, 1]")
        if self.policy_delay < 1:
            raise ValueError("policy_delay must be >= 1")
        if min(self.batch_size, self.buffer_capacity, self.total_steps) < 1:
            raise ValueError("batch_size, buffer_capacity and total_steps "
                             "must be positive")
        if min(self.actor_lr, self.critic_lr) <= 0:
            raise ValueError("learning rates must be positive")
        if self.alpha_ttc < 0:
            raise ValueError("alpha_ttc must be >= 0")


@dataclass
class LossReport:
    """Losses from one update; actor fields are None on non-delayed steps.

    When the actor was updated, ``total`` is exactly
    ``policy_loss + alpha_ttc * ttc_mse``.
    """

    critic_losses: tuple
    policy_loss: float | None = None
    ttc_mse: float | None = None
    total: float | None = None


class Td3Agent:
    """Actor, twin critics, their targets, and the update rule."""

    def __init__(self, config: Td3Config):
        self.cfg = config
        rng = np.random.default_rng(config.seed)
        self.actor = PolicyNet(rng)
        self.critic1 = CriticNet(rng)
        self.critic2 = CriticNet(rng)
        self.actor_target = copy.deepcopy(self.actor)
        self.critic1_target = copy.deepcopy(self.critic1)
        self.critic2_target = copy.deepcopy(self.critic2)
        self.opt_actor = Adam(self.actor.params(), lr=config.actor_lr)
        self.opt_critic1 = Adam(self.critic1.params(), lr=config.critic_lr)
        self.opt_critic2 = Adam(self.critic2.params(), lr=config.critic_lr)
        self._explore_rng = np.random.default_rng(config.seed + 1)
        self._target_rng = np.random.default_rng(config.seed + 2)
        self.updates = 0

    def act(self, state, explore: bool = False) -> float:
        """Greedy action for one class-id stack, optionally with noise."""
        action = self.actor.act(state)
        if explore:
            action += self._explore_rng.normal(0.0, self.cfg.exploration_sigma)
        return float(np.clip(action, -1.0, 1.0))

    def random_action(self) -> float:
        """Uniform warmup action from the exploration stream."""
        return float(self._explore_rng.uniform(-1.0, 1.0))

    def update(self, buffer: ReplayBuffer,
               update_actor: bool = True) -> LossReport | None:
        """One TD3 update from a sampled batch; no-op if data is short.

        With ``update_actor=False`` only the critics (and their targets)
        train; the actor and its target stay frozen.  Callers use this for a
        policy-evaluation warm phase before letting the actor move.
        """
        if len(buffer) == 0:
            log.warning("td3 update skipped: replay buffer is empty")
            return None
        if len(buffer) < self.cfg.batch_size:
            log.warning("td3 update skipped: buffer holds %d < batch %d",
                        len(buffer), self.cfg.batch_size)
            return None
        batch = buffer.sample(self.cfg.batch_size)
        return td3_update(self, batch, update_actor=update_actor)


def td3_update(agent: Td3Agent, batch: dict,
               update_actor: bool = True) -> LossReport:
    """Apply one TD3 update to ``agent`` from an explicit batch."""
    cfg = agent.cfg
    s = normalize_state(batch["state"])
    s2 = normalize_state(batch["next_state"])
    a = np.asarray(batch["action"], dtype=np.float64)
    r = np.asarray(batch["reward"], dtype=np.float64)
    done = np.asarray(batch["done"], dtype=np.float64)
    ttc = np.asarray(batch["ttc_truth"], dtype=np.float64)

    # Clipped-noise smoothed target actions, then the twin-minimum target.
    a2, _ = agent.actor_target.forward(s2)
    noise = np.clip(
        agent._target_rng.normal(0.0, cfg.target_noise_sigma, size=a2.shape),
        -cfg.target_noise_clip, cfg.target_noise_clip)
    a2 = np.clip(a2 + noise, -1.0, 1.0)
    q_next = np.minimum(agent.critic1_target.forward(s2, a2),
                        agent.critic2_target.forward(s2, a2))
    y = r + cfg.gamma * (1.0 - done) * q_next

    critic_losses = []
    for critic, opt in ((agent.critic1, agent.opt_critic1),
                        (agent.critic2, agent.opt_critic2)):
        q = critic.forward(s, a)
        loss, grad = mse_loss(q, y)
        opt.zero_grad()
        critic.backward(grad)
        opt.step()
        critic_losses.append(loss)

    agent.updates += 1
    policy_loss = ttc_mse = total = None
    if agent.updates % cfg.policy_delay == 0:
        a_pi, ttc_pred = agent.actor.forward(s)
        q1 = agent.critic1.forward(s, a_pi)
        policy_loss = float(-q1.mean())
        # dL_pi/dQ1 for L_pi = -mean(Q1); only the action-path gradient is
        # kept, and the critic's own parameter grads are cleared afterwards.
        _, d_action = agent.critic1.backward(
            np.full(q1.shape, -1.0 / q1.shape[0]))
        ttc_mse, d_ttc = mse_loss(ttc_pred, ttc)
        agent.opt_actor.zero_grad()
        agent.actor.backward(d_action=d_action, d_ttc=cfg.alpha_ttc * d_ttc)
        agent.opt_actor.step()
        agent.opt_critic1.zero_grad()
        total = policy_loss + cfg.alpha_ttc * ttc_mse
        polyak_update(agent.actor, agent.actor_target, cfg.polyak_tau)
        polyak_update(agent.critic1, agent.critic1_target, cfg.polyak_tau)
        polyak_update(agent.critic2, agent.critic2_target, cfg.polyak_tau)
    return LossReport(critic_losses=tuple(critic_losses),
                      policy_loss=policy_loss, ttc_mse=ttc_mse, total=total)
