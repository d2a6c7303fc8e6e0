"""Stratified k-fold evaluation of the frame-stack classifier."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import (RewardModelConfig, measure_fps, normalize_state,
                    train_reward_model)


@dataclass
class FoldReport:
    per_fold_accuracy: list
    mean_accuracy: float
    fps: float

    def __post_init__(self):
        self.per_fold_accuracy = [float(a) for a in self.per_fold_accuracy]
        if any(not 0.0 <= a <= 1.0 for a in self.per_fold_accuracy):
            raise ValueError("fold accuracies must lie in [0, 1]")
        expected = float(np.mean(self.per_fold_accuracy))
        if abs(self.mean_accuracy - expected) > 1e-12:
            raise ValueError(f"mean_accuracy {self.mean_accuracy} != average "
                             f"of folds {expected}")


def stratified_folds(data, k: int):
    """Index sets for k folds, stratified by label, round-robin by trial id.

    Within each label class, examples are ordered by trial id and dealt to
    folds in turn, so every fold keeps close to the overall label balance.
    Returns a list of k disjoint index lists covering the dataset.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    folds = [[] for _ in range(k)]
    for label in (0, 1):
        member = [(data[i].trial_id, i) for i in range(len(data))
                  if data[i].label == label]
        member.sort()
        for pos, (_, i) in enumerate(member):
            folds[pos % k].append(i)
    return [sorted(f) for f in folds]


def cross_validate(data, k: int = 5,
                   config: RewardModelConfig | None = None) -> FoldReport:
    """Held-out accuracy per fold plus inference throughput.

    Each fold trains a fresh model (fold index added to the seed) on the
    other k-1 folds and scores hard 0.5-threshold accuracy on its own
    examples.  Requires at least k examples of each class.
    """
    if config is None:
        config = RewardModelConfig()
    n = len(data)
    if k > n:
        raise ValueError(f"k={k} exceeds dataset size {n}")
    labels = np.array([ex.label for ex in data])
    for label in (0, 1):
        count = int(np.sum(labels == label))
        if count < k:
            raise ValueError(f"need at least {k} examples of class {label}, "
                             f"got {count}")
    folds = stratified_folds(data, k)
    model = None
    accs = []
    for fold_idx, test_idx in enumerate(folds):
        test_set = set(test_idx)
        train = [data[i] for i in range(n) if i not in test_set]
        model, _ = train_reward_model(
            train, replace(config, seed=config.seed + fold_idx))
        x = normalize_state(np.stack([data[i].state for i in test_idx]))
        y = labels[test_idx]
        pred = (model.forward(x)[:, 0] >= 0.5).astype(int)
        accs.append(float(np.mean(pred == y)))
    fps = measure_fps(model, n_frames=200)
    return FoldReport(per_fold_accuracy=accs,
                      mean_accuracy=float(np.mean(accs)), fps=fps)
