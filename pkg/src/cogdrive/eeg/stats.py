"""Permutation-based statistics: Pearson correlation and a family-wise
corrected pointwise condition contrast."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_PERM_DEFAULT = 10_000


def _standardize(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    sd = x.std()
    if sd == 0.0:
        raise ValueError("zero variance input")
    return (x - x.mean()) / sd


def pearson(x, y, n_perm: int = N_PERM_DEFAULT,
            seed: int = 0) -> tuple[float, float]:
    """Sample Pearson r with a two-sided permutation p-value.

    The null distribution reshuffles ``y`` ``n_perm`` times; the p-value uses
    the add-one rule (1 + hits) / (n_perm + 1) so it can never be zero.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.size != y.size:
        raise ValueError("x and y must be 1-D and the same length")
    if x.size < 3:
        raise ValueError("need at least 3 pairs")
    zx = _standardize(x)
    zy = _standardize(y)
    n = x.size
    r = float(zx @ zy / n)

    rng = np.random.default_rng(seed)
    idx = np.tile(np.arange(n), (n_perm, 1))
    idx = rng.permuted(idx, axis=1)
    r_null = zy[idx] @ zx / n
    p = (1.0 + np.count_nonzero(np.abs(r_null) >= abs(r))) / (n_perm + 1.0)
    return r, float(p)


@dataclass
class PermutationResult:
    observed: np.ndarray     # pointwise mean(cond_a) - mean(cond_b)
    threshold: float         # 95th percentile of the null max-|stat|
    mask: np.ndarray         # bool, where |observed| exceeds the threshold


def permutation_test(cond_a: np.ndarray, cond_b: np.ndarray,
                     n_perm: int = N_PERM_DEFAULT, alpha: float = 0.05,
                     seed: int = 0) -> PermutationResult:
    """Pointwise condition contrast with max-statistic family-wise control.

    ``cond_a``/``cond_b`` are (trials, time) arrays.  The statistic is the
    pointwise difference of condition means; the null is built by shuffling
    condition labels, and the family-wise threshold is the (1 - alpha)
    quantile of the per-permutation maximum of |statistic| over time.
    """
    a = np.asarray(cond_a, dtype=np.float64)
    b = np.asarray(cond_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError("conditions must be (trials, time) with equal time")
    if a.shape[0] < 5 or b.shape[0] < 5:
        raise ValueError("need at least 5 trials per condition")
    na, nb = a.shape[0], b.shape[0]
    x = np.vstack([a, b])
    observed = a.mean(axis=0) - b.mean(axis=0)

    # Attach permutation weights to a canonically ordered pooled matrix so
    # the realized null -- not just its distribution -- is invariant to
    # swapping the two conditions.
    x_sorted = x[np.lexsort(x.T[::-1])]
    rng = np.random.default_rng(seed)
    row = np.concatenate([np.full(na, 1.0 / na), np.full(nb, -1.0 / nb)])
    weights = np.tile(row, (n_perm, 1))
    weights = rng.permuted(weights, axis=1)
    null_stats = weights @ x_sorted               # (n_perm, time)
    null_max = np.abs(null_stats).max(axis=1)
    threshold = float(np.quantile(null_max, 1.0 - alpha))
    mask = np.abs(observed) > threshold
    return PermutationResult(observed=observed, threshold=threshold,
                             mask=mask)
