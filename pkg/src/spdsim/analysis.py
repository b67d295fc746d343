"""Replication statistics, policy comparison and accuracy against ground truth."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from scipy import stats

from .diagnostics import AnalysisError

#: Metrics where smaller values are better; everything else is higher-better.
LOWER_IS_BETTER = {"mean_rt": True, "p95_rt": True, "throughput": False,
                   "mean_containers": True, "utilization": False}
DEFAULT_KAPPA_METRICS = ("mean_rt", "p95_rt", "throughput", "mean_containers")
GROUND_TRUTH_HEADER = ["policy", "workload", "metric", "value", "unit"]


@dataclass(frozen=True)
class Estimate:
    n: int
    mean: float
    stddev: float
    half_width: Optional[float]  # 95% Student-t, None when n < 2

    @property
    def low(self):
        return None if self.half_width is None else self.mean - self.half_width

    @property
    def high(self):
        return None if self.half_width is None else self.mean + self.half_width


def confidence_interval(values: Sequence[float], level: float = 0.95) -> Estimate:
    n = len(values)
    if n == 0:
        raise AnalysisError("no values to summarize")
    mean = math.fsum(values) / n
    if n == 1:
        return Estimate(1, mean, 0.0, None)
    sd = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1))
    q = stats.t.ppf(0.5 + level / 2, n - 1)
    return Estimate(n, mean, sd, float(q * sd / math.sqrt(n)))


def _metric_map(item) -> dict:
    if isinstance(item, Mapping):
        return dict(item)
    if isinstance(item, (int, float)):
        return {"value": float(item)}
    return {k: getattr(item, k) for k in ("mean_rt", "p95_rt", "throughput", "utilization",
                                          "mean_containers", "adaptations")}


def summarize_replications(items, spec_ids=None) -> dict:
    """Per-metric estimate over replications of one experiment.

    ``items`` are MetricSummary objects, metric mappings or plain numbers
    (summarized under ``"value"``). ``spec_ids`` identifies the experiment of
    each item; all must agree.
    """
    items = list(items)
    if len(items) < 2:
        raise AnalysisError(f"need at least 2 replications, got {len(items)}")
    if spec_ids is not None and len(set(spec_ids)) > 1:
        raise AnalysisError("replications come from different experiment specs")
    maps = [_metric_map(i) for i in items]
    keys = list(maps[0])
    if any(list(m) != keys for m in maps):
        raise AnalysisError("replications report different metrics")
    out = {}
    for k in keys:
        values = [m[k] for m in maps]
        if any(v is None for v in values):
            out[k] = None
            continue
        out[k] = confidence_interval([float(v) for v in values])
    return out


def relative_absolute_error(ground_truth: float, predicted: float) -> float:
    if not ground_truth > 0:
        raise AnalysisError(f"ground truth must be positive, got {ground_truth}")
    return abs(ground_truth - predicted) / ground_truth


def mape(pairs) -> float:
    pairs = list(pairs)
    if not pairs:
        raise AnalysisError("MAPE of an empty set")
    return 100.0 * math.fsum(relative_absolute_error(g, p) for g, p in pairs) / len(pairs)


def speedup(baseline, variant, metric: str) -> float:
    """Improvement factor of ``variant`` over ``baseline``; above 1 is better."""
    b = _metric_map(baseline).get(metric) if not isinstance(baseline, (int, float)) else baseline
    v = _metric_map(variant).get(metric) if not isinstance(variant, (int, float)) else variant
    if b is None or v is None:
        raise AnalysisError(f"metric '{metric}' undefined")
    if not b > 0 or not v > 0:
        raise AnalysisError(f"metric '{metric}' must be positive for a speedup")
    return b / v if LOWER_IS_BETTER.get(metric, False) else v / b


def pearson(xs, ys) -> tuple:
    """Sample correlation and two-sided p-value from Student-t with n-2 df."""
    xs, ys = list(map(float, xs)), list(map(float, ys))
    if len(xs) != len(ys):
        raise AnalysisError("pearson inputs differ in length")
    if len(xs) < 3:
        raise AnalysisError("pearson needs at least 3 pairs")
    if len(set(xs)) < 2 or len(set(ys)) < 2:
        raise AnalysisError("pearson needs non-zero variance on both sides")
    res = stats.pearsonr(xs, ys)
    r = max(-1.0, min(1.0, float(res.statistic)))
    return r, float(res.pvalue)


def _round6(x: float) -> float:
    return float(f"{x:.6g}")


def pairwise_comparison_score(policies, lower_is_better: Mapping[str, bool]) -> list:
    """Tournament score per policy in percent.

    Every policy meets every other on every metric: a win scores 1, a tie
    0.5. Scores are normalized by (n - 1) opponents and the metric count.
    """
    maps = [_metric_map(p) for p in policies]
    n, metrics = len(maps), list(lower_is_better)
    if n < 2 or not metrics:
        raise AnalysisError("need at least 2 policies and 1 metric")
    for m in maps:
        for k in metrics:
            if m.get(k) is None:
                raise AnalysisError(f"metric '{k}' undefined")
    scores = []
    for a in range(n):
        total = 0.0
        for i in range(n):
            if i == a:
                continue
            for k in metrics:
                xa, xi = _round6(maps[a][k]), _round6(maps[i][k])
                if xa == xi:
                    total += 0.5
                elif (xa < xi) == lower_is_better[k]:
                    total += 1.0
        scores.append(100.0 * total / ((n - 1) * len(metrics)))
    return scores


def read_ground_truth(path) -> dict:
    """``(policy, workload, metric) -> value`` from a ground-truth CSV."""
    table = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != GROUND_TRUTH_HEADER:
            raise AnalysisError(f"{path}: header must be {','.join(GROUND_TRUTH_HEADER)}")
        for row in reader:
            key = (row["policy"], row["workload"], row["metric"])
            if key in table:
                raise AnalysisError(f"{path}: duplicate row for {key}")
            try:
                table[key] = float(row["value"])
            except ValueError:
                raise AnalysisError(f"{path}: bad value {row['value']!r} for {key}") from None
    return table
