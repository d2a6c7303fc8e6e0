"""Driving agents: TD3 actor-critic plus behavior-cloning and
preference-reward baselines, with replay, reward shaping, and attention
introspection utilities."""

from .attention import (attention_heatmap, heatmap_argmax_cell,
                        lead_vehicle_cell, load_heatmap_pgm, pixel_cell,
                        save_heatmap_pgm)
from .bc import BC_TTC_WEIGHT, MIN_DEMOS, bc_train
from .buffer import ReplayBuffer, Transition
from .expert import (EXPERT_BRAKE_TTC, EXPERT_GAIN, EXPERT_GAP_TARGET,
                     expert_step_action, scripted_expert)
from .nets import (FEATURE_CHANNELS, FLAT_DIM, HEAD_HIDDEN, N_TOKENS,
                   TOKEN_GRID, CriticNet, PolicyNet, TokenGrid, copy_params,
                   polyak_update)
from .preferences import (CANNOT_TELL, CLIP_STEPS, PREFER_A, PREFER_B, Clip,
                          bt_preference_oracle, bt_train,
                          build_segment_reward_net, clips_from_episode,
                          predict_preference, segment_return)
from .rewards import RewardWeights, compose_reward, gap_reward
from .td3 import LossReport, Td3Agent, Td3Config, td3_update

__all__ = [
    "attention_heatmap", "heatmap_argmax_cell", "lead_vehicle_cell",
    "load_heatmap_pgm", "pixel_cell", "save_heatmap_pgm",
    "BC_TTC_WEIGHT", "MIN_DEMOS", "bc_train",
    "ReplayBuffer", "Transition",
    "EXPERT_BRAKE_TTC", "EXPERT_GAIN", "EXPERT_GAP_TARGET",
    "expert_step_action", "scripted_expert",
    "FEATURE_CHANNELS", "FLAT_DIM", "HEAD_HIDDEN", "N_TOKENS", "TOKEN_GRID",
    "CriticNet", "PolicyNet", "TokenGrid", "copy_params", "polyak_update",
    "CANNOT_TELL", "CLIP_STEPS", "PREFER_A", "PREFER_B", "Clip",
    "bt_preference_oracle", "bt_train", "build_segment_reward_net",
    "clips_from_episode", "predict_preference", "segment_return",
    "RewardWeights", "compose_reward", "gap_reward",
    "LossReport", "Td3Agent", "Td3Config", "td3_update",
]
