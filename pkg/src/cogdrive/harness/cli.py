"""Command-line front end for the whole pipeline.

Every subcommand accepts ``--config PATH`` (a JSON object of options),
``--seed N`` (overriding the config seed), and ``--output-dir DIR``.  Exit
codes: 0 on success, 1 for configuration/validation problems (including
unknown flags and a missing config file), 2 for runtime failures.  Report
paths write figures next to their CSV output.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from ..agent import (PolicyNet, attention_heatmap, heatmap_argmax_cell,
                     lead_vehicle_cell, save_heatmap_pgm)
from ..eeg import (SynthConfig, epoch_trials, grand_average, label_erp,
                   make_default_schedule, pearson, permutation_test,
                   preprocess, session_from_csv, session_to_csv,
                   synth_session, trials_to_csv)
from ..eeg.labeling import LABEL_CHANNEL
from ..nn import assign_weights, load_weights, save_weights
from ..reward import (RewardModelConfig, build_reward_model,
                      collect_scenario_dataset, cross_validate,
                      dataset_from_npz, dataset_to_npz, measure_fps,
                      synthetic_separable_dataset, train_reward_model)
from ..sim import ScenarioConfig, make_sim
from . import figures
from .experiment import (SCENARIOS, ExperimentConfig, build_assets,
                         run_experiment, train_cell)
from .metrics import emit_curve_csv, parse_curve_csv, parse_summary_csv


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with status 1, not 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(1)


def _load_config(path) -> dict:
    if path is None:
        return {}
    if not os.path.exists(path):
        raise ValueError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(config, dict):
        raise ValueError(f"config root must be a JSON object: {path}")
    return config


def _common(args) -> tuple[dict, int, str]:
    """(config dict, effective seed, output dir), CLI flags winning."""
    config = _load_config(args.config)
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    out = args.output_dir or config.get("output_dir", "out")
    os.makedirs(out, exist_ok=True)
    return config, seed, out


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"wrote {path}")


def cmd_synth_eeg(args) -> int:
    config, seed, out = _common(args)
    n_events = int(config.get("n_events", 40))
    schedule = make_default_schedule(n_events, seed=seed)
    raw = synth_session(
        SynthConfig(amplitude_scale=float(config.get("amplitude_scale", 1.5)),
                    noise_sigma=float(config.get("noise_sigma", 0.4)),
                    seed=seed),
        schedule)
    data = os.path.join(out, "session_data.csv")
    markers = os.path.join(out, "session_markers.csv")
    session_to_csv(raw, data, markers)
    print(f"synthesized {raw.channels.shape[0]} channels x "
          f"{raw.channels.shape[1]} samples at {raw.fs} Hz, "
          f"{len(raw.markers)} markers")
    print(f"wrote {data}\nwrote {markers}")
    return 0


def _read_session(config, fs=1000):
    for key in ("session_data", "session_markers"):
        if key not in config:
            raise ValueError(f"config key {key!r} is required")
    return session_from_csv(config["session_data"],
                            config["session_markers"], fs=fs)


def cmd_preprocess(args) -> int:
    config, _, out = _common(args)
    clean = preprocess(_read_session(config))
    data = os.path.join(out, "clean_data.csv")
    markers = os.path.join(out, "clean_markers.csv")
    session_to_csv(clean, data, markers)
    print(f"preprocessed to {clean.fs} Hz, "
          f"{clean.channels.shape[1]} samples")
    print(f"wrote {data}\nwrote {markers}")
    return 0


def cmd_label_erp(args) -> int:
    config, _, out = _common(args)
    clean = preprocess(_read_session(config))
    trials, skipped = epoch_trials(clean)
    for trial in trials:
        label_erp(trial)
    path = os.path.join(out, "trials.csv")
    trials_to_csv(trials, path)
    n_high = sum(t.erp_label == "high" for t in trials)
    print(f"labeled {len(trials)} trials ({n_high} high, "
          f"{len(trials) - n_high} low, {skipped} skipped at edges)")
    print(f"wrote {path}")
    return 0


def cmd_analyze_erp(args) -> int:
    config, seed, out = _common(args)
    n_events = int(config.get("n_events", 120))
    n_perm = int(config.get("n_perm", 10_000))
    alpha = float(config.get("alpha", 0.05))
    schedule = make_default_schedule(n_events, seed=seed)
    raw = synth_session(
        SynthConfig(amplitude_scale=float(config.get("amplitude_scale", 1.5)),
                    noise_sigma=float(config.get("noise_sigma", 0.4)),
                    seed=seed),
        schedule)
    trials, skipped = epoch_trials(preprocess(raw))
    for trial in trials:
        label_erp(trial)
    high = [t for t in trials if t.erp_label == "high"]
    low = [t for t in trials if t.erp_label == "low"]
    if not high or not low:
        raise ValueError("need trials in both label classes; adjust "
                         "amplitude_scale or n_events")
    contrast = permutation_test(
        np.stack([t.epoch[LABEL_CHANNEL] for t in high]),
        np.stack([t.epoch[LABEL_CHANNEL] for t in low]),
        n_perm=n_perm, alpha=alpha, seed=seed)
    latencies = [t.peak_latency for t in trials]
    rts = [t.marker.reaction_time for t in trials]
    r, p = pearson(latencies, rts, n_perm=n_perm, seed=seed)
    lines = ["metric,value",
             f"n_trials,{len(trials)}",
             f"n_skipped,{skipped}",
             f"n_high,{len(high)}",
             f"n_low,{len(low)}",
             f"latency_rt_r,{r!r}",
             f"latency_rt_p,{p!r}",
             f"contrast_threshold,{contrast.threshold!r}",
             f"n_significant_samples,{int(contrast.mask.sum())}"]
    _write(os.path.join(out, "erp_stats.csv"), "\n".join(lines) + "\n")
    times = trials[0].times_ms()
    figures.erp_contrast_figure(times, grand_average(high, LABEL_CHANNEL),
                                grand_average(low, LABEL_CHANNEL),
                                contrast.mask,
                                os.path.join(out, "erp_contrast.png"))
    figures.latency_rt_figure(latencies, rts, r, p,
                              os.path.join(out, "latency_rt.png"))
    print(f"latency-RT r={r:.3f} p={p:.4f}; "
          f"{int(contrast.mask.sum())} significant samples")
    print(f"wrote {os.path.join(out, 'erp_contrast.png')}")
    print(f"wrote {os.path.join(out, 'latency_rt.png')}")
    return 0


def cmd_build_dataset(args) -> int:
    config, seed, out = _common(args)
    n_episodes = int(config.get("n_episodes", 30))
    examples, orphans = collect_scenario_dataset(n_episodes, base_seed=seed)
    path = os.path.join(out, "dataset.npz")
    dataset_to_npz(path, examples)
    n_high = sum(ex.label for ex in examples)
    print(f"{len(examples)} examples from {n_episodes} episodes "
          f"({n_high} high / {len(examples) - n_high} low, "
          f"{orphans} orphans)")
    print(f"wrote {path}")
    return 0


def _load_dataset(config, seed):
    if "dataset" in config:
        return dataset_from_npz(config["dataset"])
    if "collect_episodes" in config:
        examples, _ = collect_scenario_dataset(
            int(config["collect_episodes"]), base_seed=seed)
        return examples
    return synthetic_separable_dataset(int(config.get("synthetic_n", 200)),
                                       seed=seed)


def _reward_config(config, seed) -> RewardModelConfig:
    return RewardModelConfig(epochs=int(config.get("epochs", 60)),
                             lr=float(config.get("lr", 5e-3)),
                             batch_size=int(config.get("batch_size", 16)),
                             seed=seed)


def cmd_train_reward(args) -> int:
    config, seed, out = _common(args)
    data = _load_dataset(config, seed)
    model, history = train_reward_model(data, _reward_config(config, seed))
    weights_path = os.path.join(out, "reward_model.cgw")
    save_weights(weights_path, [(n, p.value) for n, p
                                in model.named_params()])
    rows = "\n".join(f"{i},{loss!r}" for i, loss in enumerate(history))
    _write(os.path.join(out, "reward_loss.csv"), "epoch,loss\n" + rows + "\n")
    figures.training_loss_figure(history, os.path.join(out,
                                                       "reward_loss.png"))
    print(f"trained on {len(data)} examples, final loss {history[-1]:.6f}")
    print(f"wrote {weights_path}")
    print(f"wrote {os.path.join(out, 'reward_loss.png')}")
    return 0


def cmd_cv_reward(args) -> int:
    config, seed, out = _common(args)
    data = _load_dataset(config, seed)
    k = int(config.get("folds", 5))
    report = cross_validate(data, k=k, config=_reward_config(config, seed))
    lines = ["fold,accuracy"]
    lines += [f"{i + 1},{acc!r}" for i, acc
              in enumerate(report.per_fold_accuracy)]
    lines.append(f"mean,{report.mean_accuracy!r}")
    _write(os.path.join(out, "cv_accuracy.csv"), "\n".join(lines) + "\n")
    figures.cv_accuracy_figure(report.per_fold_accuracy,
                               report.mean_accuracy,
                               os.path.join(out, "cv_accuracy.png"))
    print(f"mean accuracy {report.mean_accuracy:.4f} over {k} folds, "
          f"inference {report.fps:.0f} frames/s")
    print(f"wrote {os.path.join(out, 'cv_accuracy.png')}")
    return 0


def _experiment_config(config: dict, out: str) -> ExperimentConfig:
    d = dict(config)
    d.pop("seed", None)          # generic key, not an experiment field
    d["output_dir"] = out
    return ExperimentConfig.from_dict(d)


def cmd_train_agent(args) -> int:
    config, seed, out = _common(args)
    exp = _experiment_config(config, out)
    if args.seed is None and exp.seeds:
        seed = exp.seeds[0]
    cog_model, bt_net = build_assets(exp)
    _, policy_net, curve, _ = train_cell(exp, seed, cog_model=cog_model,
                                         bt_net=bt_net)
    cell = f"{exp.method}_seed{seed}"
    curve_path = os.path.join(out, f"{cell}_curve.csv")
    _write(curve_path, emit_curve_csv(curve))
    weights_path = os.path.join(out, f"{cell}.cgw")
    save_weights(weights_path, [(n, p.value) for n, p
                                in policy_net.named_params()])
    print(f"wrote {weights_path}")
    figures.learning_curve_figure(curve,
                                  os.path.join(out, f"{cell}_curve.png"),
                                  title=cell)
    print(f"wrote {os.path.join(out, f'{cell}_curve.png')}")
    return 0


def cmd_evaluate(args) -> int:
    config, _, out = _common(args)
    d = dict(config)
    if args.seeds is not None:
        if args.seeds < 1:
            raise ValueError("--seeds must be >= 1")
        d["seeds"] = list(range(args.seeds))
    exp = _experiment_config(d, out)
    run_experiment(exp)
    with open(os.path.join(out, "summary.csv"), encoding="utf-8") as fh:
        summary = parse_summary_csv(fh.read())
    fig_dir = os.path.join(out, "figures")
    os.makedirs(fig_dir, exist_ok=True)
    figures.summary_figure(summary, os.path.join(fig_dir, "summary.png"))
    for seed in exp.seeds:
        cell = f"{exp.method}_seed{seed}"
        with open(os.path.join(out, "curves", f"{cell}.csv"),
                  encoding="utf-8") as fh:
            curve = parse_curve_csv(fh.read())
        if curve:
            figures.learning_curve_figure(
                curve, os.path.join(fig_dir, f"{cell}.png"), title=cell)
    for row in summary:
        print(f"{row.method} seed={row.seed_label}: "
              f"DS {row.driving_score:.2f}, completion "
              f"{row.mean_completion:.1f}%, collisions "
              f"{row.mean_collisions:.2f}")
    print(f"wrote {os.path.join(out, 'summary.csv')}")
    print(f"wrote {os.path.join(fig_dir, 'summary.png')}")
    return 0


def cmd_attention_dump(args) -> int:
    config, seed, out = _common(args)
    scenario = config.get("scenario", "emergency_braking")
    if scenario not in SCENARIOS:
        raise ValueError(f"scenario must be one of {SCENARIOS}")
    town = int(config.get("town_seed", 200))
    stride = int(config.get("stride", 10))
    max_steps = int(config.get("max_steps", 200))
    policy = PolicyNet(np.random.default_rng(seed))
    if "weights" in config:
        assign_weights(policy, load_weights(config["weights"]))
    sim = make_sim(ScenarioConfig(scenario, seed=town))
    state = sim.reset()
    rows = ["step,argmax_row,argmax_col,lead_row,lead_col,on_lead"]
    heat = None
    hits = probes = 0
    for step in range(max_steps):
        if step % stride == 0:
            heat = attention_heatmap(policy, state)
            arow, acol = heatmap_argmax_cell(heat)
            lead = lead_vehicle_cell(state)
            lrow, lcol = lead if lead is not None else (-1, -1)
            on_lead = lead is not None and (arow, acol) == lead
            hits += on_lead
            probes += 1
            rows.append(f"{step},{arow},{acol},{lrow},{lcol},"
                        f"{int(on_lead)}")
            save_heatmap_pgm(heat, os.path.join(out,
                                                f"attention_{step:04d}.pgm"))
        res = sim.step(policy.act(state))
        state = res.next_state
        if res.done:
            break
    _write(os.path.join(out, "attention.csv"), "\n".join(rows) + "\n")
    figures.attention_figure(heat, os.path.join(out, "attention.png"))
    print(f"attention on the lead vehicle cell in {hits}/{probes} probes")
    print(f"wrote {os.path.join(out, 'attention.png')}")
    return 0


def cmd_bench_fps(args) -> int:
    config, seed, out = _common(args)
    model = build_reward_model(RewardModelConfig(seed=seed))
    if "weights" in config:
        assign_weights(model, load_weights(config["weights"]))
    n_frames = int(config.get("frames", 200))
    fps = measure_fps(model, n_frames=n_frames, seed=seed)
    _write(os.path.join(out, "bench_fps.csv"),
           "n_frames,fps,ms_per_frame\n"
           f"{n_frames},{fps!r},{1000.0 / fps!r}\n")
    print(f"{fps:.0f} frames/s ({1000.0 / fps:.2f} ms/frame) "
          f"over {n_frames} frames")
    return 0


_SUBCOMMANDS = [
    ("synth-eeg", cmd_synth_eeg,
     "generate a synthetic EEG session and write it as CSV"),
    ("preprocess", cmd_preprocess,
     "band-pass, notch and decimate a recorded session"),
    ("label-erp", cmd_label_erp,
     "epoch a session and label each trial high/low"),
    ("analyze-erp", cmd_analyze_erp,
     "condition contrast and latency-RT correlation with figures"),
    ("build-dataset", cmd_build_dataset,
     "collect an EEG-labeled frame-stack dataset from driving episodes"),
    ("train-reward", cmd_train_reward,
     "fit the cognitive criticality scorer on a dataset"),
    ("cv-reward", cmd_cv_reward,
     "stratified k-fold cross-validation of the scorer"),
    ("train-agent", cmd_train_agent,
     "train one (method, seed) policy cell"),
    ("evaluate", cmd_evaluate,
     "train all seeds of a method and score the evaluation routes"),
    ("attention-dump", cmd_attention_dump,
     "dump policy attention maps along a route"),
    ("bench-fps", cmd_bench_fps,
     "measure single-frame inference throughput of the scorer"),
]


def build_parser() -> _Parser:
    parser = _Parser(prog="cogdrive",
                     description="EEG-shaped reward learning testbed")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="COMMAND")
    for name, handler, help_text in _SUBCOMMANDS:
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.add_argument("--config", metavar="PATH",
                        help="JSON file of options for this command")
        sp.add_argument("--seed", type=int, default=None, metavar="N",
                        help="override the config seed")
        sp.add_argument("--output-dir", default=None, metavar="DIR",
                        help="override the config output directory")
        if name == "evaluate":
            sp.add_argument("--seeds", type=int, default=None, metavar="N",
                            help="evaluate training seeds 0..N-1 instead of "
                                 "the configured list")
        sp.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else int(exc.code)
    try:
        return args.handler(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:                     # noqa: BLE001
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
