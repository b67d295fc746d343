"""Summary metrics over a simulation result."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

from .monitor import nearest_rank


@dataclass
class MetricSummary:
    completed: int
    mean_rt: Optional[float]
    p95_rt: Optional[float]
    throughput: float
    utilization: Optional[float]
    mean_containers: Optional[float]
    mean_elements: dict = field(default_factory=dict)  # target group -> time-weighted size
    per_operation: dict = field(default_factory=dict)  # op -> {mean_rt, p95_rt, throughput}
    adaptations: int = 0
    first_enactment: Optional[float] = None

    @property
    def defined(self) -> bool:
        return self.completed > 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["defined"] = self.defined
        return d


def _rt_stats(durations):
    if not durations:
        return None, None
    return math.fsum(durations) / len(durations), nearest_rank(sorted(durations), 95)


def time_weighted(steps, start: float, end: float) -> float:
    """Mean of a right-continuous step function [(t, v), ...] over [start, end]."""
    if end <= start:
        return float(steps[-1][1])
    total = 0.0
    for i, (t, v) in enumerate(steps):
        nxt = steps[i + 1][0] if i + 1 < len(steps) else end
        lo, hi = max(t, start), min(nxt, end)
        if hi > lo:
            total += v * (hi - lo)
    return total / (end - start)


def compute_metrics(result, warmup: float = 0.0) -> MetricSummary:
    """Metrics over completions after ``warmup``; undefined values are None."""
    if not 0 <= warmup < result.horizon:
        raise ValueError(f"warmup {warmup} must lie in [0, horizon)")
    span = result.horizon - warmup
    everything = []
    per_op = {}
    for op, samples in result.response_times.items():
        durs = [d for t, d in samples if t > warmup or warmup == 0]
        everything.extend(durs)
        mean, p95 = _rt_stats(durs)
        per_op[op] = {"mean_rt": mean, "p95_rt": p95, "throughput": len(durs) / span,
                      "completed": len(durs)}
    mean, p95 = _rt_stats(everything)
    cap = [(b, n) for t, b, n in result.capacity if t > warmup]
    alive = sum(n for _, n in cap)
    util = sum(b for b, _ in cap) / alive if alive else None
    elements = {g: time_weighted(steps, warmup, result.horizon)
                for g, steps in result.size_timeline.items()}
    containers = (sum(n for _, n in cap) / len(cap)) if cap else None
    decisions = [r for r in result.adaptation_trace if r.enacted]
    return MetricSummary(
        completed=len(everything), mean_rt=mean, p95_rt=p95,
        throughput=len(everything) / span, utilization=util, mean_containers=containers,
        mean_elements=elements, per_operation=per_op, adaptations=len(decisions),
        first_enactment=decisions[0].time if decisions else None)


def response_time_law_gap(result, warmup: float, population: int) -> dict:
    """Measured R against N/X - Z over cycles completed after ``warmup``.

    Z is the mean think time of the counted cycles, so the check does not
    depend on sampling noise of the declared think-time distribution.
    """
    counted = [(z, r) for t, z, r in result.cycles if t > warmup]
    if not counted:
        return {"defined": False}
    x = len(counted) / (result.horizon - warmup)
    z = math.fsum(c[0] for c in counted) / len(counted)
    r = math.fsum(c[1] for c in counted) / len(counted)
    law = population / x - z
    return {"defined": True, "throughput": x, "think": z, "response": r, "law": law,
            "relative_error": abs(r - law) / r if r > 0 else math.inf}
