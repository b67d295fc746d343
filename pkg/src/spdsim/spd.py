"""Scaling Policy Definition (SPD) domain model.

An SPD is a set of scaling policies. Each policy applies to one target
group, fires on exactly one trigger, resizes the group with exactly one
adjustment and may be restricted by constraints. Constraints can also be
attached to a target group, in which case they apply to every policy acting
on it.

All types are frozen value objects. Source spans are carried along for
diagnostics but never take part in equality.
"""

from __future__ import annotations

import enum
import operator as _op
from dataclasses import dataclass, field
from typing import Optional, Union

from .diagnostics import NO_SPAN, Diagnostic, SourceSpan, ValidationError

#: Absolute tolerance for ``==`` on continuous stimuli.
EQUAL_TOLERANCE = 1e-9
DEFAULT_WINDOW = 60.0
DEFAULT_TREND_WINDOWS = 3


def _span():
    return field(default=NO_SPAN, compare=False, repr=False)


# --------------------------------------------------------------------------
# Target groups


@dataclass(frozen=True)
class ElasticInfrastructure:
    name: str
    unit_container: str
    constraints: tuple = ()
    span: SourceSpan = _span()

    kind = "elastic-infrastructure"
    is_service = False


@dataclass(frozen=True)
class ServiceGroup:
    name: str
    unit_assembly: str
    hosting_infrastructure: str
    load_balancer: Optional[str] = None
    constraints: tuple = ()
    span: SourceSpan = _span()

    kind = "service-group"
    is_service = True


@dataclass(frozen=True)
class CompetingConsumersGroup:
    name: str
    unit_consumer: str
    queue: str
    hosting_infrastructure: str
    constraints: tuple = ()
    span: SourceSpan = _span()

    kind = "competing-consumers"
    is_service = True


TargetGroup = Union[ElasticInfrastructure, ServiceGroup, CompetingConsumersGroup]


# --------------------------------------------------------------------------
# Stimuli and expected values


@dataclass(frozen=True)
class CpuUtilization:
    window: float = DEFAULT_WINDOW

    keyword = "cpu-utilization"
    unit = "percentage"


@dataclass(frozen=True)
class QueueLength:
    window: float = DEFAULT_WINDOW

    keyword = "queue-length"
    unit = "count"


@dataclass(frozen=True)
class OperationResponseTime:
    window: float = DEFAULT_WINDOW
    operation: Optional[str] = None
    percentile: Optional[float] = None  # None means average

    keyword = "response-time"
    unit = "time"


@dataclass(frozen=True)
class NumberOfElements:
    keyword = "elements"
    unit = "count"
    window = None


@dataclass(frozen=True)
class SimulationTime:
    keyword = "simulation-time"
    unit = "count"
    window = None


Stimulus = Union[CpuUtilization, QueueLength, OperationResponseTime,
                 NumberOfElements, SimulationTime]


@dataclass(frozen=True)
class ExpectedPercentage:
    value: float

    unit = "percentage"


@dataclass(frozen=True)
class ExpectedTime:
    seconds: float

    unit = "time"

    @property
    def value(self):
        return self.seconds


@dataclass(frozen=True)
class ExpectedCount:
    value: int

    unit = "count"


ExpectedValue = Union[ExpectedPercentage, ExpectedTime, ExpectedCount]


class RelationalOperator(enum.Enum):
    GREATER_THAN = ">"
    GREATER_THAN_OR_EQUAL = ">="
    LESS_THAN = "<"
    LESS_THAN_OR_EQUAL = "<="
    EQUAL_TO = "=="

    @property
    def symbol(self) -> str:
        return self.value

    def holds(self, lhs: float, rhs: float) -> bool:
        if self is RelationalOperator.EQUAL_TO:
            return abs(lhs - rhs) <= EQUAL_TOLERANCE
        return _COMPARE[self](lhs, rhs)


_COMPARE = {
    RelationalOperator.GREATER_THAN: _op.gt,
    RelationalOperator.GREATER_THAN_OR_EQUAL: _op.ge,
    RelationalOperator.LESS_THAN: _op.lt,
    RelationalOperator.LESS_THAN_OR_EQUAL: _op.le,
}


class TrendPattern(enum.Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"


@dataclass(frozen=True)
class SimpleFireOnValue:
    stimulus: Stimulus
    operator: RelationalOperator
    expected: ExpectedValue


@dataclass(frozen=True)
class SimpleFireOnTrend:
    stimulus: Stimulus
    trend: TrendPattern
    window_count: int = DEFAULT_TREND_WINDOWS
    expected: Optional[ExpectedValue] = None


ScalingTrigger = Union[SimpleFireOnValue, SimpleFireOnTrend]


# --------------------------------------------------------------------------
# Adjustments


@dataclass(frozen=True)
class AbsoluteAdjustment:
    goal_value: int

    def problems(self):
        if not isinstance(self.goal_value, int) or self.goal_value < 1:
            yield f"goal value must be a positive integer, got {self.goal_value!r}"


@dataclass(frozen=True)
class RelativeAdjustment:
    percentage_growth: int
    min_adjustment: int

    def problems(self):
        p, m = self.percentage_growth, self.min_adjustment
        if not isinstance(p, int) or not isinstance(m, int):
            yield "percentage growth and minimum adjustment must be integers"
        elif p == 0 or m == 0:
            yield "percentage growth and minimum adjustment must be nonzero"
        elif (p > 0) != (m > 0):
            yield f"percentage growth {p} and minimum adjustment {m} differ in sign"


@dataclass(frozen=True)
class StepAdjustment:
    step_value: int

    def problems(self):
        if not isinstance(self.step_value, int) or self.step_value == 0:
            yield f"step value must be a nonzero integer, got {self.step_value!r}"


AdjustmentType = Union[AbsoluteAdjustment, RelativeAdjustment, StepAdjustment]


def apply_adjustment(adjustment: AdjustmentType, n: int) -> int:
    """New target group size after applying ``adjustment`` at size ``n``.

    Raises ValidationError for a malformed adjustment or ``n < 1``.
    """
    for problem in adjustment.problems():
        raise ValidationError("INVALID_ADJUSTMENT", problem)
    if not isinstance(n, int) or n < 1:
        raise ValidationError("INVALID_SIZE", f"current size must be >= 1, got {n!r}")
    if isinstance(adjustment, AbsoluteAdjustment):
        return adjustment.goal_value
    if isinstance(adjustment, StepAdjustment):
        return max(1, n + adjustment.step_value)
    if isinstance(adjustment, RelativeAdjustment):
        p, m = adjustment.percentage_growth, adjustment.min_adjustment
        if p > 0:
            grow = -((-n * p) // 100)  # ceil(n*p/100)
            return n + max(grow, m)
        shrink = (n * -p) // 100  # floor(n*|p|/100)
        return max(1, n - max(shrink, -m))
    raise ValidationError("INVALID_ADJUSTMENT", f"unknown adjustment {adjustment!r}")


# --------------------------------------------------------------------------
# Constraints


@dataclass(frozen=True)
class CooldownConstraint:
    duration: float
    span: SourceSpan = _span()

    type = "temporal"
    behavior = "prohibiting"

    def problems(self):
        if not self.duration > 0:
            yield f"cooldown must be positive, got {self.duration!r}"


@dataclass(frozen=True)
class IntervalConstraint:
    active_from: float
    active_until: float
    span: SourceSpan = _span()

    type = "temporal"
    behavior = "prohibiting"

    def problems(self):
        if self.active_from < 0 or self.active_until < self.active_from:
            yield f"interval [{self.active_from}, {self.active_until}] is empty or negative"


@dataclass(frozen=True)
class TargetGroupSizeConstraint:
    min_elements: int = 1
    max_elements: Optional[int] = None
    span: SourceSpan = _span()

    type = "state"
    behavior = "altering"

    def problems(self):
        if self.min_elements < 1:
            yield f"minimum size must be >= 1, got {self.min_elements}"
        if self.max_elements is not None and self.max_elements < self.min_elements:
            yield f"maximum size {self.max_elements} below minimum {self.min_elements}"


Constraint = Union[CooldownConstraint, IntervalConstraint, TargetGroupSizeConstraint]


# --------------------------------------------------------------------------
# Policies and the root


@dataclass(frozen=True)
class ScalingPolicy:
    name: str
    target: str
    trigger: ScalingTrigger
    adjustment: AdjustmentType
    constraints: tuple = ()
    active: bool = True
    span: SourceSpan = _span()


@dataclass(frozen=True)
class SpdModel:
    name: str
    policies: tuple = ()
    target_groups: tuple = ()
    span: SourceSpan = _span()

    def target(self, name: str) -> Optional[TargetGroup]:
        for tg in self.target_groups:
            if tg.name == name:
                return tg
        return None

    def policies_for(self, target_name: str):
        return [p for p in self.policies if p.target == target_name]

    @property
    def active_policies(self):
        return [p for p in self.policies if p.active]

    @property
    def semantics(self) -> Optional[str]:
        """``"bottom-up"``, ``"top-down"`` or None when no policy resolves."""
        kinds = {tg.is_service for tg in map(self.target, (p.target for p in self.policies)) if tg}
        if kinds == {False}:
            return "bottom-up"
        if kinds == {True}:
            return "top-down"
        return None


# --------------------------------------------------------------------------
# Validation

_UNIT_OF_STIMULUS = {
    CpuUtilization: "percentage",
    QueueLength: "count",
    OperationResponseTime: "time",
    NumberOfElements: "count",
    SimulationTime: "count",
}


def _trigger_problems(trigger):
    stim = trigger.stimulus
    window = getattr(stim, "window", None)
    if window is not None and not window > 0:
        yield "INVALID_STIMULUS", f"window must be positive, got {window}"
    if isinstance(stim, OperationResponseTime) and stim.percentile is not None:
        if not 0 < stim.percentile < 100:
            yield "INVALID_STIMULUS", f"percentile must lie in (0, 100), got {stim.percentile}"
    expected = trigger.expected
    if isinstance(trigger, SimpleFireOnTrend):
        if window is None:
            yield "INVALID_TRIGGER", f"trend triggers need a windowed stimulus, not {stim.keyword}"
        if not isinstance(trigger.window_count, int) or trigger.window_count < 2:
            yield "INVALID_TRIGGER", "trend window count must be an integer >= 2"
    elif expected is None:
        yield "INVALID_TRIGGER", "fire-on-value triggers need an expected value"
    if expected is not None:
        if _UNIT_OF_STIMULUS[type(stim)] != expected.unit:
            yield ("INCOMPATIBLE_EXPECTED",
                   f"{stim.keyword} cannot be compared with a {expected.unit} value")
        if isinstance(expected, ExpectedPercentage) and not 0 <= expected.value <= 100:
            yield "INVALID_EXPECTED", f"percentage {expected.value} outside [0, 100]"
        if isinstance(expected, ExpectedTime) and not expected.seconds > 0:
            yield "INVALID_EXPECTED", f"time {expected.seconds} must be positive"
        if isinstance(expected, ExpectedCount) and (
                not isinstance(expected.value, int) or expected.value < 0):
            yield "INVALID_EXPECTED", f"count {expected.value} must be a non-negative integer"


def check_spd(spd: SpdModel) -> list:
    """Architecture-independent invariants of an SPD model."""
    diags = []

    def err(code, msg, span):
        diags.append(Diagnostic(code, msg, span or NO_SPAN))

    if not spd.policies:
        err("EMPTY_SPD", f"SPD '{spd.name}' contains no scaling policy", spd.span)

    seen = {}
    for tg in spd.target_groups:
        if tg.name in seen:
            err("DUPLICATE_NAME", f"target group '{tg.name}' declared twice", tg.span)
        seen[tg.name] = tg
        for c in tg.constraints:
            for msg in c.problems():
                err("INVALID_CONSTRAINT", msg, c.span)
    for tg in spd.target_groups:
        if isinstance(tg, (ServiceGroup, CompetingConsumersGroup)):
            host = seen.get(tg.hosting_infrastructure)
            if not isinstance(host, ElasticInfrastructure):
                err("UNRESOLVED_HOST",
                    f"'{tg.name}' is hosted on undeclared elastic infrastructure "
                    f"'{tg.hosting_infrastructure}'", tg.span)

    names = set()
    kinds = {}
    for p in spd.policies:
        if p.name in names:
            err("DUPLICATE_NAME", f"policy '{p.name}' declared twice", p.span)
        names.add(p.name)
        tg = seen.get(p.target)
        if tg is None:
            err("UNRESOLVED_TARGET", f"policy '{p.name}' targets undeclared group '{p.target}'",
                p.span)
        else:
            kinds.setdefault(tg.is_service, p)
        for msg in p.adjustment.problems():
            err("INVALID_ADJUSTMENT", f"policy '{p.name}': {msg}", p.span)
        for code, msg in _trigger_problems(p.trigger):
            err(code, f"policy '{p.name}': {msg}", p.span)
        for c in p.constraints:
            for msg in c.problems():
                err("INVALID_CONSTRAINT", msg, c.span)
    if len(kinds) > 1:
        infra, service = kinds[False], kinds[True]
        later = infra if infra.span.line >= service.span.line else service
        err("MIXED_TARGET_KINDS",
            f"policies '{infra.name}' and '{service.name}' mix infrastructure and service "
            "targets", later.span)
    return diags


def validate_spd(spd: SpdModel, arch=None) -> list:
    """All SPD invariants plus, when ``arch`` is given, its references into it."""
    diags = check_spd(spd)
    if arch is None:
        return diags

    def err(code, msg, span):
        diags.append(Diagnostic(code, msg, span or NO_SPAN))

    containers = {c.name for c in arch.containers}
    assemblies = {a.name: a for a in arch.assemblies}
    queues = {q.name: q for q in arch.queues}
    allocation = dict(arch.allocation)
    by_name = {tg.name: tg for tg in spd.target_groups}

    for tg in spd.target_groups:
        if isinstance(tg, ElasticInfrastructure):
            if tg.unit_container not in containers:
                err("UNRESOLVED_CONTAINER",
                    f"'{tg.name}' uses unknown unit container '{tg.unit_container}'", tg.span)
            continue
        unit = tg.unit_assembly if isinstance(tg, ServiceGroup) else tg.unit_consumer
        if unit not in assemblies:
            err("UNRESOLVED_ASSEMBLY", f"'{tg.name}' uses unknown assembly '{unit}'", tg.span)
        else:
            host = by_name.get(tg.hosting_infrastructure)
            if isinstance(host, ElasticInfrastructure) and allocation.get(unit) != host.unit_container:
                err("HOST_MISMATCH",
                    f"assembly '{unit}' is not allocated on '{host.unit_container}', the unit "
                    f"container of '{host.name}'", tg.span)
        if isinstance(tg, ServiceGroup) and tg.load_balancer is not None \
                and tg.load_balancer not in assemblies:
            err("UNRESOLVED_ASSEMBLY",
                f"'{tg.name}' uses unknown load balancer '{tg.load_balancer}'", tg.span)
        if isinstance(tg, CompetingConsumersGroup):
            q = queues.get(tg.queue)
            if q is None:
                err("UNRESOLVED_QUEUE", f"'{tg.name}' uses unknown queue '{tg.queue}'", tg.span)
            elif q.consumer != tg.unit_consumer:
                err("QUEUE_CONSUMER_MISMATCH",
                    f"queue '{q.name}' is consumed by '{q.consumer}', not '{tg.unit_consumer}'",
                    tg.span)

    for p in spd.policies:
        stim = p.trigger.stimulus
        if not isinstance(stim, OperationResponseTime) or stim.operation is None:
            continue
        tg = by_name.get(p.target)
        if tg is None:
            continue
        if stim.operation not in _operations_of_target(tg, arch):
            err("UNRESOLVED_OPERATION",
                f"policy '{p.name}' observes unknown operation '{stim.operation}' of '{tg.name}'",
                p.span)
    return diags


def _operations_of_target(tg, arch) -> set:
    components = {c.name: c for c in arch.components}
    assemblies = {a.name: a for a in arch.assemblies}
    if isinstance(tg, ElasticInfrastructure):
        names = [a for a, c in arch.allocation if c == tg.unit_container]
    elif isinstance(tg, ServiceGroup):
        names = [tg.unit_assembly]
    else:
        names = [tg.unit_consumer]
    ops = set()
    for a in names:
        asm = assemblies.get(a)
        comp = components.get(asm.component) if asm else None
        if comp is not None:
            ops.update(comp.operations)
    return ops
