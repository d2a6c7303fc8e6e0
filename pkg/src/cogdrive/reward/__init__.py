"""Frame-to-ERP-label dataset construction and the cognitive reward model."""

from .dataset import (
    EventFrameRecord,
    LabeledExample,
    STATE_SHAPE,
    build_dataset,
    collect_scenario_dataset,
    dataset_from_npz,
    dataset_to_npz,
    label_session_trials,
    make_demo_policy,
    synthetic_separable_dataset,
    synthetic_separable_records,
)
from .model import (
    RewardModelConfig,
    build_reward_model,
    measure_fps,
    normalize_state,
    predict_batch,
    predict_cog,
    train_reward_model,
)
from .crossval import FoldReport, cross_validate, stratified_folds

__all__ = [
    "EventFrameRecord",
    "LabeledExample",
    "STATE_SHAPE",
    "build_dataset",
    "collect_scenario_dataset",
    "dataset_from_npz",
    "dataset_to_npz",
    "label_session_trials",
    "make_demo_policy",
    "synthetic_separable_dataset",
    "synthetic_separable_records",
    "RewardModelConfig",
    "build_reward_model",
    "measure_fps",
    "normalize_state",
    "predict_batch",
    "predict_cog",
    "train_reward_model",
    "FoldReport",
    "cross_validate",
    "stratified_folds",
]
