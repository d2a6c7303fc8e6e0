"""Route-level driving metrics and delimited report files.

A route run yields a completion percentage and a collision count; the score
of the route is ``completion * 0.6^collisions`` and the driving score of a
set of routes is the weighted sum of route scores (uniform weights unless
stated).  All CSV emitters here have exact-inverse parsers: floats are
written with ``repr`` so ``parse(emit(x)) == x`` holds bit for bit.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

COLLISION_DECAY = 0.6
METHODS = ("ours", "vanilla", "bc", "rlhf_bt")


@dataclass(frozen=True)
class RouteResult:
    """Outcome of one evaluation route."""

    route_seed: int
    completion: float           # percent of the route finished, 0..100
    collisions: int

    def __post_init__(self):
        if not 0.0 <= self.completion <= 100.0:
            raise ValueError(f"completion must be in [0, 100], got "
                             f"{self.completion}")
        if self.collisions < 0:
            raise ValueError("collisions must be >= 0")

    @property
    def penalty(self) -> float:
        """Multiplicative infraction penalty, 0.6 per collision."""
        return COLLISION_DECAY ** self.collisions

    @property
    def score(self) -> float:
        return self.completion * self.penalty


@dataclass(frozen=True)
class MetricsReport:
    """Aggregates over one set of evaluated routes."""

    n_routes: int
    driving_score: float
    mean_completion: float
    mean_collisions: float


def uniform_weights(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("need at least one route")
    return np.full(n, 1.0 / n)


def compute_metrics(results, weights=None) -> MetricsReport:
    """Weighted driving score and companion aggregates.

    ``weights`` defaults to uniform; explicit weights must be non-negative,
    match the number of routes, and sum to 1.
    """
    results = list(results)
    if not results:
        raise ValueError("cannot compute metrics over zero routes")
    if weights is None:
        weights = uniform_weights(len(results))
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (len(results),):
        raise ValueError(f"need {len(results)} weights, got shape "
                         f"{weights.shape}")
    if np.any(weights < 0.0):
        raise ValueError("weights must be non-negative")
    if abs(float(weights.sum()) - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to 1, got {weights.sum()!r}")
    scores = np.array([r.score for r in results])
    completions = np.array([r.completion for r in results])
    collisions = np.array([float(r.collisions) for r in results])
    return MetricsReport(
        n_routes=len(results),
        driving_score=float(weights @ scores),
        mean_completion=float(weights @ completions),
        mean_collisions=float(weights @ collisions),
    )


@dataclass(frozen=True)
class EvalRecord:
    """One evaluated route, tagged with the policy that drove it."""

    method: str
    scenario: str
    train_seed: int
    route_seed: int
    completion: float
    collisions: int

    def route_result(self) -> RouteResult:
        return RouteResult(self.route_seed, self.completion, self.collisions)


@dataclass(frozen=True)
class SummaryRow:
    """Per-seed aggregate, plus one 'mean' row per (method, scenario)."""

    method: str
    scenario: str
    seed_label: str             # training seed as text, or "mean"
    driving_score: float
    mean_completion: float
    mean_collisions: float


_EVAL_HEADER = "method,scenario,train_seed,route_seed,completion,collisions"
_SUMMARY_HEADER = ("method,scenario,seed,driving_score,mean_completion,"
                   "mean_collisions")
_CURVE_HEADER = "step,episode,episode_return,collisions,policy_loss,ttc_mse"


def _split_csv(text: str, expected_header: str) -> list[list[str]]:
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != expected_header:
        raise ValueError(f"expected header {expected_header!r}")
    return [ln.split(",") for ln in lines[1:]]


def emit_eval_csv(records) -> str:
    out = io.StringIO()
    out.write(_EVAL_HEADER + "\n")
    for r in records:
        out.write(f"{r.method},{r.scenario},{r.train_seed},{r.route_seed},"
                  f"{r.completion!r},{r.collisions}\n")
    return out.getvalue()


def parse_eval_csv(text: str) -> list[EvalRecord]:
    records = []
    for f in _split_csv(text, _EVAL_HEADER):
        if len(f) != 6:
            raise ValueError(f"malformed route row: {','.join(f)!r}")
        records.append(EvalRecord(method=f[0], scenario=f[1],
                                  train_seed=int(f[2]), route_seed=int(f[3]),
                                  completion=float(f[4]),
                                  collisions=int(f[5])))
    return records


def summarize_eval(records) -> list[SummaryRow]:
    """Per-(method, scenario, seed) metrics plus a cross-seed mean row.

    Routes within a seed are aggregated by :func:`compute_metrics` with
    uniform weights; the mean row averages the per-seed aggregates.
    """
    records = list(records)
    if not records:
        raise ValueError("no evaluation records to summarize")
    groups: dict[tuple, list] = {}
    for r in records:
        groups.setdefault((r.method, r.scenario, r.train_seed), []) \
            .append(r.route_result())
    rows = []
    by_pair: dict[tuple, list[MetricsReport]] = {}
    for (method, scenario, seed) in sorted(groups):
        report = compute_metrics(groups[(method, scenario, seed)])
        rows.append(SummaryRow(method, scenario, str(seed),
                               report.driving_score, report.mean_completion,
                               report.mean_collisions))
        by_pair.setdefault((method, scenario), []).append(report)
    for (method, scenario) in sorted(by_pair):
        reports = by_pair[(method, scenario)]
        rows.append(SummaryRow(
            method, scenario, "mean",
            float(np.mean([m.driving_score for m in reports])),
            float(np.mean([m.mean_completion for m in reports])),
            float(np.mean([m.mean_collisions for m in reports]))))
    return rows


def emit_summary_csv(rows) -> str:
    out = io.StringIO()
    out.write(_SUMMARY_HEADER + "\n")
    for r in rows:
        out.write(f"{r.method},{r.scenario},{r.seed_label},"
                  f"{r.driving_score!r},{r.mean_completion!r},"
                  f"{r.mean_collisions!r}\n")
    return out.getvalue()


def parse_summary_csv(text: str) -> list[SummaryRow]:
    rows = []
    for f in _split_csv(text, _SUMMARY_HEADER):
        if len(f) != 6:
            raise ValueError(f"malformed summary row: {','.join(f)!r}")
        rows.append(SummaryRow(method=f[0], scenario=f[1], seed_label=f[2],
                               driving_score=float(f[3]),
                               mean_completion=float(f[4]),
                               mean_collisions=float(f[5])))
    return rows


@dataclass(frozen=True)
class CurveRow:
    """One finished training episode on the learning curve."""

    step: int                   # environment steps consumed so far
    episode: int
    episode_return: float
    collisions: int
    policy_loss: float | None   # None until the first delayed actor update
    ttc_mse: float | None


def emit_curve_csv(rows) -> str:
    out = io.StringIO()
    out.write(_CURVE_HEADER + "\n")
    for r in rows:
        pl = "" if r.policy_loss is None else repr(r.policy_loss)
        tm = "" if r.ttc_mse is None else repr(r.ttc_mse)
        out.write(f"{r.step},{r.episode},{r.episode_return!r},"
                  f"{r.collisions},{pl},{tm}\n")
    return out.getvalue()


def parse_curve_csv(text: str) -> list[CurveRow]:
    rows = []
    for f in _split_csv(text, _CURVE_HEADER):
        if len(f) != 6:
            raise ValueError(f"malformed curve row: {','.join(f)!r}")
        rows.append(CurveRow(step=int(f[0]), episode=int(f[1]),
                             episode_return=float(f[2]), collisions=int(f[3]),
                             policy_loss=float(f[4]) if f[4] else None,
                             ttc_mse=float(f[5]) if f[5] else None))
    return rows
