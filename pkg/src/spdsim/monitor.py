"""Windowed measurements and trigger evaluation."""

from __future__ import annotations

import enum
import math
from bisect import bisect_left, bisect_right
from collections import defaultdict

from .spd import (CpuUtilization, ExpectedPercentage, NumberOfElements, OperationResponseTime,
                  QueueLength, SimpleFireOnTrend, SimpleFireOnValue, SimulationTime,
                  TrendPattern)


class TriggerResult(enum.Enum):
    FIRED = "fired"
    NOT_FIRED = "not-fired"
    UNDEFINED = "undefined"


def stimulus_key(stimulus) -> tuple:
    """Series key a stimulus reads from, relative to its target group."""
    if isinstance(stimulus, CpuUtilization):
        return ("cpu",)
    if isinstance(stimulus, QueueLength):
        return ("ql",)
    if isinstance(stimulus, OperationResponseTime):
        return ("rt", stimulus.operation)
    if isinstance(stimulus, NumberOfElements):
        return ("elements",)
    return ("time",)


def nearest_rank(sorted_values, percentile: float) -> float:
    rank = max(1, math.ceil(percentile / 100.0 * len(sorted_values)))
    return sorted_values[rank - 1]


class Monitor:
    """Time-stamped samples per (target group, series key).

    Samples are appended in non-decreasing time order. ``horizon`` bounds how
    far back any trigger will look so old samples can be dropped.
    """

    def __init__(self, size_of=None):
        self._times = defaultdict(list)
        self._values = defaultdict(list)
        self._keep = {}
        self.size_of = size_of  # callable target -> current size

    def retain(self, target: str, key: tuple, seconds: float):
        k = (target, key)
        self._keep[k] = max(self._keep.get(k, 0.0), seconds)

    def record(self, target: str, key: tuple, t: float, value: float):
        k = (target, key)
        times = self._times[k]
        times.append(t)
        self._values[k].append(value)
        keep = self._keep.get(k)
        if keep is not None and len(times) > 4096:
            cut = bisect_left(times, t - keep - 1.0)
            if cut > 2048:
                del times[:cut]
                del self._values[k][:cut]

    def window(self, target: str, key: tuple, lo: float, hi: float,
               include_lo: bool = True) -> list:
        k = (target, key)
        times = self._times.get(k)
        if not times:
            return []
        a = bisect_left(times, lo) if include_lo else bisect_right(times, lo)
        b = bisect_right(times, hi)
        return self._values[k][a:b]

    def aggregate(self, target, stimulus, lo, hi, include_lo=True):
        """Aggregate of ``stimulus`` over the window, or None when it is empty."""
        values = self.window(target, stimulus_key(stimulus), lo, hi, include_lo)
        if not values:
            return None
        if isinstance(stimulus, OperationResponseTime) and stimulus.percentile is not None:
            return nearest_rank(sorted(values), stimulus.percentile)
        return math.fsum(values) / len(values)

    def current(self, target, stimulus, now):
        """Value of ``stimulus`` as compared by a fire-on-value trigger."""
        if isinstance(stimulus, SimulationTime):
            return now
        if isinstance(stimulus, NumberOfElements):
            return None if self.size_of is None else self.size_of(target)
        return self.aggregate(target, stimulus, now - stimulus.window, now)


def _scaled(stimulus, value, expected):
    # utilization is sampled as a fraction, compared against percentages
    if isinstance(expected, ExpectedPercentage) and isinstance(stimulus, CpuUtilization):
        return value * 100.0
    return value


def evaluate_trigger(trigger, monitor: Monitor, now: float, target: str = "") -> TriggerResult:
    stim = trigger.stimulus
    if isinstance(trigger, SimpleFireOnValue):
        value = monitor.current(target, stim, now)
        if value is None:
            return TriggerResult.UNDEFINED
        holds = trigger.operator.holds(_scaled(stim, value, trigger.expected),
                                       trigger.expected.value)
        return TriggerResult.FIRED if holds else TriggerResult.NOT_FIRED

    assert isinstance(trigger, SimpleFireOnTrend)
    w, k = stim.window, trigger.window_count
    aggs = []
    for i in range(k):
        hi = now - (k - 1 - i) * w
        value = monitor.aggregate(target, stim, hi - w, hi, include_lo=False)
        if value is None:
            return TriggerResult.UNDEFINED
        aggs.append(value)
    rising = trigger.trend is TrendPattern.INCREASING
    pairs = list(zip(aggs, aggs[1:]))
    monotone = all(b > a for a, b in pairs) if rising else all(b < a for a, b in pairs)
    if monotone and trigger.expected is not None:
        last = _scaled(stim, aggs[-1], trigger.expected)
        monotone = last > trigger.expected.value if rising else last < trigger.expected.value
    return TriggerResult.FIRED if monotone else TriggerResult.NOT_FIRED
