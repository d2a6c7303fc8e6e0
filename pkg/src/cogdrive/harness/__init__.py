"""Experiment harness: metrics, method comparison runs, figures, CLI."""

from .cli import build_parser, main
from .experiment import (ASSET_SEED, SCENARIOS, ExperimentConfig,
                         build_assets, build_bt_net, build_cognitive_model,
                         collect_bc_demos, collect_preference_queries,
                         environment_weights, evaluate_policy, make_reward_fn,
                         run_episode, run_experiment, train_cell,
                         train_td3_policy)
from .metrics import (COLLISION_DECAY, METHODS, CurveRow, EvalRecord,
                      MetricsReport, RouteResult, SummaryRow,
                      compute_metrics, emit_curve_csv, emit_eval_csv,
                      emit_summary_csv, parse_curve_csv, parse_eval_csv,
                      parse_summary_csv, summarize_eval, uniform_weights)

__all__ = [
    "ASSET_SEED", "COLLISION_DECAY", "METHODS", "SCENARIOS",
    "CurveRow", "EvalRecord", "ExperimentConfig", "MetricsReport",
    "RouteResult", "SummaryRow",
    "build_assets", "build_bt_net", "build_cognitive_model", "build_parser",
    "collect_bc_demos", "collect_preference_queries", "compute_metrics",
    "emit_curve_csv", "emit_eval_csv", "emit_summary_csv",
    "environment_weights", "evaluate_policy", "main", "make_reward_fn",
    "parse_curve_csv", "parse_eval_csv", "parse_summary_csv", "run_episode",
    "run_experiment", "summarize_eval", "train_cell", "train_td3_policy",
    "uniform_weights",
]
