"""Experiment orchestration: method training, rollouts, and evaluation.

Four methods share one environment interface:

- ``ours``      TD3 whose reward carries the learned cognitive term
                ``beta * y_hat`` (beta < 0) on top of the environment terms,
- ``vanilla``   the identical TD3 with the cognitive term removed (beta 0),
- ``bc``        behavior cloning of the scripted controller, no RL,
- ``rlhf_bt``   TD3 where the cognitive slot is replaced by a clipped
                preference-learned reward.

Towns are procedural route seeds.  Training and evaluation pools are
disjoint by construction (validated); every evaluation route comes from the
evaluation pool only.  All randomness is derived from configured seeds, so
a repeated run reproduces its logs and reports byte for byte.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass

import numpy as np

from ..agent import (PolicyNet, ReplayBuffer, RewardWeights, Td3Agent,
                     Td3Config, Transition, bc_train, bt_preference_oracle,
                     bt_train, clips_from_episode, compose_reward,
                     expert_step_action)
from ..nn import Sequential, save_weights
from ..reward import (RewardModelConfig, collect_scenario_dataset,
                      normalize_state, predict_cog, train_reward_model)
from ..reward.dataset import make_demo_policy
from ..sim import ScenarioConfig, make_sim
from ..sim.logio import write_jsonl
from .metrics import (METHODS, CurveRow, EvalRecord, RouteResult,
                      emit_curve_csv, emit_eval_csv, emit_summary_csv,
                      summarize_eval)

SCENARIOS = ("emergency_braking", "left_turn")
ASSET_SEED = 1000       # shared cognitive / preference reward assets
WARMUP_EXPERT_SIGMA = 0.3   # action noise around the scripted warmup source

_CONFIG_TUPLES = ("seeds", "train_town_seedset", "eval_town_seedset")


@dataclass
class ExperimentConfig:
    scenario: str = "emergency_braking"
    method: str = "ours"
    seeds: tuple = (0, 1, 2, 3, 4)
    train_town_seedset: tuple = tuple(range(100, 120))
    eval_town_seedset: tuple = tuple(range(200, 210))
    output_dir: str = "runs"
    total_steps: int = 10_000
    warmup_steps: int = 500
    train_freq: int = 4
    batch_size: int = 64
    reward_dataset_episodes: int = 60
    reward_epochs: int = 200
    bc_demo_episodes: int = 6
    bc_demo_stride: int = 2
    bc_epochs: int = 20
    bt_pair_count: int = 300
    bt_epochs: int = 4

    def __post_init__(self):
        for name in _CONFIG_TUPLES:
            setattr(self, name, tuple(int(v) for v in getattr(self, name)))
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}, got "
                             f"{self.scenario!r}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got "
                             f"{self.method!r}")
        for name in _CONFIG_TUPLES:
            values = getattr(self, name)
            if not values:
                raise ValueError(f"{name} must not be empty")
            if len(set(values)) != len(values):
                raise ValueError(f"{name} contains duplicates")
        overlap = set(self.train_town_seedset) & set(self.eval_town_seedset)
        if overlap:
            raise ValueError(f"train and eval town pools must be disjoint; "
                             f"both contain {sorted(overlap)}")
        positives = ("total_steps", "train_freq", "batch_size",
                     "reward_dataset_episodes", "reward_epochs",
                     "bc_demo_episodes", "bc_demo_stride", "bc_epochs",
                     "bt_pair_count", "bt_epochs")
        for name in positives:
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.warmup_steps < 0:
            raise ValueError("warmup_steps must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for name in _CONFIG_TUPLES:
            d[name] = list(d[name])
        return d


def environment_weights(weights: RewardWeights) -> RewardWeights:
    return dataclasses.replace(weights, beta=0.0)


def make_reward_fn(method: str, weights: RewardWeights | None = None,
                   cog_model: Sequential | None = None,
                   bt_net: Sequential | None = None):
    """Step-reward callable for a method: StepResult -> (total, components).

    ``ours`` scores the post-action frame stack with the cognitive model;
    ``rlhf_bt`` fills the same slot with the clipped preference reward;
    ``vanilla`` and ``bc`` keep only the environment terms.
    """
    weights = weights if weights is not None else RewardWeights()
    if method == "ours":
        if cog_model is None:
            raise ValueError("method 'ours' needs a cognitive reward model")

        def reward_fn(res):
            return compose_reward(weights, res,
                                  predict_cog(cog_model, res.next_state))
    elif method in ("vanilla", "bc"):
        env = environment_weights(weights)

        def reward_fn(res):
            return compose_reward(env, res, 0.0)
    elif method == "rlhf_bt":
        if bt_net is None:
            raise ValueError("method 'rlhf_bt' needs a preference reward net")
        env = environment_weights(weights)

        def reward_fn(res):
            total, comps = compose_reward(env, res, 0.0)
            r = float(bt_net.forward(
                normalize_state(res.next_state)[None])[0, 0])
            bonus = float(np.clip(r, -1.0, 1.0))
            comps = dict(comps, cog=bonus)
            return bonus + total, comps
    else:
        raise ValueError(f"unknown method {method!r}")
    return reward_fn


def run_episode(act_fn, scenario: str, town_seed: int, reward_fn=None):
    """Deterministic rollout of one route.

    Returns ``(log_rows, RouteResult)`` where each log row carries the step
    index, the action taken, the resulting speed / gap / ground-truth TTC,
    the collision and idle flags, and the reward component breakdown.
    Completion is the final route progress as a percentage.
    """
    if reward_fn is None:
        reward_fn = make_reward_fn("vanilla")
    sim = make_sim(ScenarioConfig(scenario, seed=town_seed))
    state = sim.reset()
    rows = []
    collisions = 0
    progress = 0.0
    t = 0
    while True:
        action = float(act_fn(state))
        res = sim.step(action)
        _, comps = reward_fn(res)
        rows.append({"t": t, "action": action, "speed": res.speed,
                     "gap": res.gap_time, "ttc_truth": res.ttc_truth,
                     "collided": bool(res.collided), "idle": bool(res.idle),
                     "reward_components": comps})
        collisions += int(res.collided)
        progress = res.route_progress
        state = res.next_state
        t += 1
        if res.done:
            break
    return rows, RouteResult(route_seed=town_seed,
                             completion=100.0 * progress,
                             collisions=collisions)


def build_cognitive_model(config: ExperimentConfig,
                          seed: int = ASSET_SEED) -> Sequential:
    """Collect an EEG-labeled event dataset and fit the criticality scorer.

    Brake-event sessions only exist in the car-following scenario, so the
    model is always trained there and applied to whichever scenario is being
    driven; the scorer consumes rendered frame stacks, which both scenarios
    share.
    """
    data, _ = collect_scenario_dataset(config.reward_dataset_episodes,
                                       base_seed=seed)
    model, _ = train_reward_model(
        data, RewardModelConfig(epochs=config.reward_epochs, seed=seed))
    return model


def _demo_rollout(policy, scenario: str, town_seed: int):
    """Roll one styled demo controller; returns per-step arrays for clips."""
    sim = make_sim(ScenarioConfig(scenario, seed=town_seed))
    state = sim.reset()
    prev = None
    states, gaps, collided = [], [], []
    while True:
        res = sim.step(policy(prev))
        states.append(state)
        gaps.append(res.gap_time)
        collided.append(res.collided)
        state = res.next_state
        prev = res
        if res.done:
            return np.stack(states), np.array(gaps), np.array(collided)


def collect_preference_queries(config: ExperimentConfig,
                               seed: int = ASSET_SEED,
                               min_clips: int = 120):
    """Oracle-labeled clip pairs from varied-style rollouts on train towns."""
    rng = np.random.default_rng(seed)
    clips = []
    episode = 0
    while len(clips) < min_clips:
        town = config.train_town_seedset[episode % len(
            config.train_town_seedset)]
        states, gaps, collided = _demo_rollout(
            make_demo_policy(rng), config.scenario, town)
        clips.extend(clips_from_episode(states, gaps, collided,
                                        first_id=len(clips)))
        episode += 1
    queries = []
    for _ in range(config.bt_pair_count):
        i, j = rng.choice(len(clips), size=2, replace=False)
        a, b = clips[int(i)], clips[int(j)]
        queries.append((a, b, bt_preference_oracle(a, b)))
    return queries


def build_bt_net(config: ExperimentConfig,
                 seed: int = ASSET_SEED) -> Sequential:
    queries = collect_preference_queries(config, seed)
    net, _ = bt_train(queries, seed=seed, epochs=config.bt_epochs)
    return net


def collect_bc_demos(config: ExperimentConfig, seed: int):
    """(state, expert_action, ttc) tuples from scripted-expert rollouts.

    The town rotation starts at ``seed`` so different training seeds see
    different episode mixes.
    """
    demos = []
    pool = config.train_town_seedset
    for episode in range(config.bc_demo_episodes):
        town = pool[(seed + episode) % len(pool)]
        sim = make_sim(ScenarioConfig(config.scenario, seed=town))
        state = sim.reset()
        prev = None
        step = 0
        while True:
            action = expert_step_action(prev)
            res = sim.step(action)
            if step % config.bc_demo_stride == 0:
                demos.append((state, action, res.ttc_truth))
            state = res.next_state
            prev = res
            step += 1
            if res.done:
                break
    return demos


def train_td3_policy(config: ExperimentConfig, seed: int, reward_fn):
    """One TD3 training cell; returns ``(agent, learning-curve rows)``.

    Warmup alternates per episode between two behavior sources, both scored
    by ``reward_fn``: the scripted controller with wide Gaussian noise (so
    the buffer contains braking-near-the-lead coverage from the start) and
    uniform random actions.  Without the scripted episodes the early buffer
    is dominated by idle/creep penalties, the critics see a one-sided
    "accelerate" landscape, and the actor's tanh saturates at full throttle
    before collision data can push back.
    """
    agent = Td3Agent(Td3Config(batch_size=config.batch_size,
                               total_steps=config.total_steps, seed=seed))
    buffer = ReplayBuffer(capacity=config.total_steps + 1, seed=seed + 9000)
    warmup_rng = np.random.default_rng(seed + 77)
    pool = config.train_town_seedset
    episode = 0
    sim = make_sim(ScenarioConfig(config.scenario, seed=pool[0]))
    state = sim.reset()
    prev_res = None
    curve = []
    episode_return = 0.0
    episode_collisions = 0
    last_policy_loss = None
    last_ttc_mse = None
    for step in range(1, config.total_steps + 1):
        if step <= config.warmup_steps:
            if episode % 2 == 0:
                action = expert_step_action(prev_res)
                action += warmup_rng.normal(0.0, WARMUP_EXPERT_SIGMA)
                action = float(np.clip(action, -1.0, 1.0))
            else:
                action = agent.random_action()
        else:
            action = agent.act(state, explore=True)
        res = sim.step(action)
        total, _ = reward_fn(res)
        buffer.add(Transition(state, action, total, res.next_state,
                              res.done, res.ttc_truth))
        episode_return += total
        episode_collisions += int(res.collided)
        state = res.next_state
        prev_res = res
        if step > config.warmup_steps and step % config.train_freq == 0:
            report = agent.update(buffer)
            if report is not None and report.policy_loss is not None:
                last_policy_loss = report.policy_loss
                last_ttc_mse = report.ttc_mse
        if res.done:
            curve.append(CurveRow(step=step, episode=episode,
                                  episode_return=episode_return,
                                  collisions=episode_collisions,
                                  policy_loss=last_policy_loss,
                                  ttc_mse=last_ttc_mse))
            episode += 1
            episode_return = 0.0
            episode_collisions = 0
            sim = make_sim(ScenarioConfig(config.scenario,
                                          seed=pool[episode % len(pool)]))
            state = sim.reset()
            prev_res = None
    return agent, curve


def train_cell(config: ExperimentConfig, seed: int, cog_model=None,
               bt_net=None):
    """Train one (method, seed) cell.

    Returns ``(act_fn, policy_net, curve_rows, reward_fn)`` where ``act_fn``
    maps a raw frame stack to a greedy action.
    """
    reward_fn = make_reward_fn(config.method, cog_model=cog_model,
                               bt_net=bt_net)
    if config.method == "bc":
        demos = collect_bc_demos(config, seed)
        policy, history = bc_train(demos, seed=seed, epochs=config.bc_epochs,
                                   lr=2e-3, batch_size=32)
        curve = [CurveRow(step=0, episode=i, episode_return=-mse,
                          collisions=0, policy_loss=mse, ttc_mse=None)
                 for i, mse in enumerate(history)]
        return policy.act, policy, curve, reward_fn
    agent, curve = train_td3_policy(config, seed, reward_fn)
    return (lambda s: agent.act(s)), agent.actor, curve, reward_fn


def evaluate_policy(act_fn, config: ExperimentConfig, seed: int, reward_fn):
    """Drive every route in the evaluation pool; no training-pool route is
    ever touched here."""
    records = []
    logs = {}
    for town in config.eval_town_seedset:
        rows, result = run_episode(act_fn, config.scenario, town, reward_fn)
        records.append(EvalRecord(method=config.method,
                                  scenario=config.scenario, train_seed=seed,
                                  route_seed=town,
                                  completion=result.completion,
                                  collisions=result.collisions))
        logs[town] = rows
    return records, logs


def build_assets(config: ExperimentConfig, seed: int = ASSET_SEED):
    """Shared learned-reward assets for the configured method, if any."""
    cog_model = build_cognitive_model(config, seed) \
        if config.method == "ours" else None
    bt_net = build_bt_net(config, seed) \
        if config.method == "rlhf_bt" else None
    return cog_model, bt_net


def run_experiment(config: ExperimentConfig, write_episode_logs: bool = True):
    """Train and evaluate every configured seed; write all reports.

    Output layout under ``config.output_dir``::

        config.json                          resolved configuration
        curves/<method>_seed<k>.csv          learning curve per cell
        weights/<method>_seed<k>.cgw         policy parameters per cell
        eval_records.csv                     one row per evaluated route
        summary.csv                          per-seed aggregates + mean row
        logs/<method>_seed<k>_route<t>.jsonl per-step evaluation logs

    Cells are independent given the shared assets, so distinct (method,
    seed) pairs may also be produced by separate processes and their
    ``eval_records.csv`` rows concatenated.

    Returns the list of :class:`EvalRecord` produced.
    """
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    for sub in ("curves", "weights", "logs"):
        os.makedirs(os.path.join(out, sub), exist_ok=True)
    with open(os.path.join(out, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    cog_model, bt_net = build_assets(config)
    all_records = []
    for seed in config.seeds:
        act_fn, policy_net, curve, reward_fn = train_cell(
            config, seed, cog_model=cog_model, bt_net=bt_net)
        cell = f"{config.method}_seed{seed}"
        with open(os.path.join(out, "curves", f"{cell}.csv"), "w",
                  encoding="utf-8") as fh:
            fh.write(emit_curve_csv(curve))
        save_weights(os.path.join(out, "weights", f"{cell}.cgw"),
                     [(name, p.value) for name, p
                      in policy_net.named_params()])
        records, logs = evaluate_policy(act_fn, config, seed, reward_fn)
        all_records.extend(records)
        if write_episode_logs:
            for town, rows in logs.items():
                write_jsonl(os.path.join(out, "logs",
                                         f"{cell}_route{town}.jsonl"), rows)
    with open(os.path.join(out, "eval_records.csv"), "w",
              encoding="utf-8") as fh:
        fh.write(emit_eval_csv(all_records))
    with open(os.path.join(out, "summary.csv"), "w", encoding="utf-8") as fh:
        fh.write(emit_summary_csv(summarize_eval(all_records)))
    return all_records
