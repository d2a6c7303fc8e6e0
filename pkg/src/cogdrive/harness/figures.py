"""Report figures, rendered straight to files next to the CSV output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (needs the backend set first)
import numpy as np  # noqa: E402


def learning_curve_figure(curve_rows, path, title="training"):
    """Episode return and per-episode collisions against environment steps."""
    steps = [r.step for r in curve_rows]
    returns = [r.episode_return for r in curve_rows]
    collisions = [r.collisions for r in curve_rows]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    ax1.plot(steps, returns, marker=".", lw=1)
    ax1.set_ylabel("episode return")
    ax1.set_title(title)
    ax1.grid(alpha=0.3)
    ax2.plot(steps, collisions, marker=".", lw=1, color="tab:red")
    ax2.set_ylabel("collisions / episode")
    ax2.set_xlabel("environment steps")
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def summary_figure(summary_rows, path):
    """Driving-score bars per method (mean rows), seed rows as dots."""
    means = [r for r in summary_rows if r.seed_label == "mean"]
    seeds = [r for r in summary_rows if r.seed_label != "mean"]
    methods = [r.method for r in means]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(methods, [r.driving_score for r in means], color="tab:blue",
           alpha=0.6)
    for i, m in enumerate(methods):
        ys = [r.driving_score for r in seeds if r.method == m]
        ax.plot([i] * len(ys), ys, "k.", ms=8)
    ax.set_ylabel("driving score")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def attention_figure(heatmap, path, title="token attention"):
    fig, ax = plt.subplots(figsize=(4, 4))
    im = ax.imshow(np.asarray(heatmap), cmap="viridis")
    ax.set_title(title)
    ax.set_xticks(range(heatmap.shape[1]))
    ax.set_yticks(range(heatmap.shape[0]))
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def erp_contrast_figure(times_ms, avg_high, avg_low, mask, path):
    """Grand averages of both label classes with significant spans shaded."""
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(times_ms, avg_high, label="high criticality", color="tab:red")
    ax.plot(times_ms, avg_low, label="low criticality", color="tab:blue")
    mask = np.asarray(mask, dtype=bool)
    if mask.any():
        ax.fill_between(times_ms, *ax.get_ylim(), where=mask, alpha=0.15,
                        color="gray", label="significant")
    ax.axvline(0.0, color="k", lw=0.8)
    ax.set_xlabel("time from event (ms)")
    ax.set_ylabel("amplitude (uV)")
    ax.legend(loc="upper right", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def latency_rt_figure(latencies_ms, reaction_times_s, r, p, path):
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(latencies_ms, reaction_times_s, "o", ms=4, alpha=0.6)
    coef = np.polyfit(latencies_ms, reaction_times_s, 1)
    xs = np.linspace(min(latencies_ms), max(latencies_ms), 50)
    ax.plot(xs, np.polyval(coef, xs), "k--", lw=1)
    ax.set_xlabel("ERP peak latency (ms)")
    ax.set_ylabel("reaction time (s)")
    ax.set_title(f"r = {r:.3f}, p = {p:.4f}")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def training_loss_figure(history, path, ylabel="loss"):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(1, len(history) + 1), history, marker=".")
    ax.set_xlabel("epoch")
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def cv_accuracy_figure(per_fold, mean_accuracy, path):
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.bar(range(1, len(per_fold) + 1), per_fold, color="tab:green",
           alpha=0.7)
    ax.axhline(mean_accuracy, color="k", ls="--", lw=1,
               label=f"mean = {mean_accuracy:.3f}")
    ax.set_xlabel("fold")
    ax.set_ylabel("accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
