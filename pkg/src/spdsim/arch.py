"""Static architecture and usage model.

Components provide operations whose behavior (a SEFF) is an ordered list of
actions. Assemblies instantiate components and wire their required roles to
other assemblies; the allocation places assemblies on resource containers.
A closed usage model drives the system. The model is never mutated by a
simulation run; all dynamism lives in :mod:`spdsim.runtime`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

from .diagnostics import NO_SPAN, Diagnostic, SourceSpan

PROBABILITY_TOLERANCE = 1e-9


def _span():
    return field(default=NO_SPAN, compare=False, repr=False)


# --------------------------------------------------------------------------
# Stochastic expressions


@dataclass(frozen=True)
class Constant:
    value: float

    def sample(self, rng) -> float:
        return self.value

    @property
    def mean(self) -> float:
        return self.value

    def problems(self):
        if not self.value >= 0:
            yield f"constant {self.value} must be non-negative"


@dataclass(frozen=True)
class Exponential:
    mean: float

    def sample(self, rng) -> float:
        return rng.expovariate(1.0 / self.mean)

    def problems(self):
        if not self.mean > 0:
            yield f"exponential mean {self.mean} must be positive"


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def sample(self, rng) -> float:
        return rng.uniform(self.lo, self.hi)

    @property
    def mean(self) -> float:
        return (self.lo + self.hi) / 2

    def problems(self):
        if self.lo < 0 or self.lo > self.hi:
            yield f"uniform({self.lo}, {self.hi}) needs 0 <= lo <= hi"


StochasticExpression = Union[Constant, Exponential, Uniform]


# --------------------------------------------------------------------------
# Behavior


@dataclass(frozen=True)
class InternalAction:
    demand: StochasticExpression
    resource: str = "cpu"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ExternalCall:
    role: str
    operation: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Branch:
    cases: tuple  # of (probability, tuple of actions)
    span: SourceSpan = _span()


@dataclass(frozen=True)
class AsyncSend:
    queue: str
    span: SourceSpan = _span()


Action = Union[InternalAction, ExternalCall, Branch, AsyncSend]


@dataclass(frozen=True)
class Component:
    name: str
    operations: dict  # operation name -> tuple of actions
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Assembly:
    name: str
    component: str
    wiring: dict = field(default_factory=dict)  # role -> assembly name
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ResourceContainerSpec:
    name: str
    processing_rate: float
    scheduling: str = "ps"  # "ps" (processor sharing) or "fcfs"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class BrokerQueue:
    name: str
    consumer: str  # assembly
    operation: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class SystemCall:
    assembly: str
    operation: str

    @property
    def label(self) -> str:
        return f"{self.assembly}.{self.operation}"


@dataclass(frozen=True)
class UsageModel:
    population: int
    think_time: StochasticExpression
    scenario: tuple  # of (probability, SystemCall)
    span: SourceSpan = _span()

    @property
    def operations(self):
        return [call.label for _, call in self.scenario]


@dataclass(frozen=True)
class ArchitectureModel:
    name: str
    components: tuple
    assemblies: tuple
    containers: tuple
    allocation: tuple  # of (assembly, container)
    usage: Optional[UsageModel]
    queues: tuple = ()
    span: SourceSpan = _span()

    def component(self, name: str) -> Optional[Component]:
        return next((c for c in self.components if c.name == name), None)

    def assembly(self, name: str) -> Optional[Assembly]:
        return next((a for a in self.assemblies if a.name == name), None)

    def container(self, name: str) -> Optional[ResourceContainerSpec]:
        return next((c for c in self.containers if c.name == name), None)

    def queue(self, name: str) -> Optional[BrokerQueue]:
        return next((q for q in self.queues if q.name == name), None)

    def allocated_on(self, assembly: str) -> Optional[str]:
        return dict(self.allocation).get(assembly)


# --------------------------------------------------------------------------
# Validation


def _walk(actions):
    for a in actions:
        yield a
        if isinstance(a, Branch):
            for _, sub in a.cases:
                yield from _walk(sub)


def validate_architecture(arch: ArchitectureModel) -> list:
    """Semantic checks on an architecture model; returns positioned diagnostics."""
    diags = []

    def err(code, msg, span=None):
        diags.append(Diagnostic(code, msg, span or NO_SPAN))

    def check_expr(expr, where, span):
        for msg in expr.problems():
            err("INVALID_EXPRESSION", f"{where}: {msg}", span)

    def check_probs(cases, where, span):
        total = math.fsum(p for p, _ in cases)
        if any(p < 0 for p, _ in cases) or abs(total - 1.0) > PROBABILITY_TOLERANCE:
            err("PROB_SUM", f"{where}: probabilities sum to {total:g}, not 1", span)

    for kind, items in (("component", arch.components), ("assembly", arch.assemblies),
                        ("container", arch.containers), ("queue", arch.queues)):
        seen = set()
        for item in items:
            if item.name in seen:
                err("DUPLICATE_NAME", f"{kind} '{item.name}' declared twice", item.span)
            seen.add(item.name)

    components = {c.name: c for c in arch.components}
    assemblies = {a.name: a for a in arch.assemblies}
    containers = {c.name: c for c in arch.containers}
    queues = {q.name: q for q in arch.queues}

    for c in arch.containers:
        if not c.processing_rate > 0:
            err("NONPOSITIVE_RATE", f"container '{c.name}' has rate {c.processing_rate}", c.span)
        if c.scheduling not in ("ps", "fcfs"):
            err("INVALID_SCHEDULING", f"container '{c.name}' uses unknown scheduling "
                f"'{c.scheduling}'", c.span)

    for comp in arch.components:
        for op, actions in comp.operations.items():
            for a in _walk(actions):
                where = f"{comp.name}.{op}"
                if isinstance(a, InternalAction):
                    check_expr(a.demand, where, a.span)
                elif isinstance(a, Branch):
                    check_probs(a.cases, where, a.span)
                elif isinstance(a, AsyncSend) and a.queue not in queues:
                    err("UNRESOLVED_QUEUE", f"{where} sends to unknown queue '{a.queue}'",
                        a.span)

    for asm in arch.assemblies:
        comp = components.get(asm.component)
        if comp is None:
            err("UNRESOLVED_COMPONENT",
                f"assembly '{asm.name}' instantiates unknown component '{asm.component}'",
                asm.span)
            continue
        for role, target in asm.wiring.items():
            if target not in assemblies:
                err("UNRESOLVED_ASSEMBLY",
                    f"assembly '{asm.name}' wires role '{role}' to unknown '{target}'", asm.span)
        for op, actions in comp.operations.items():
            for a in _walk(actions):
                if not isinstance(a, ExternalCall):
                    continue
                target = asm.wiring.get(a.role)
                if target is None:
                    err("UNWIRED_ROLE", f"assembly '{asm.name}' leaves role '{a.role}' "
                        f"(used by {comp.name}.{op}) unwired", asm.span)
                    continue
                tasm = assemblies.get(target)
                tcomp = components.get(tasm.component) if tasm else None
                if tcomp is not None and a.operation not in tcomp.operations:
                    err("UNRESOLVED_OPERATION",
                        f"{comp.name}.{op} calls '{a.operation}' which '{target}' "
                        f"({tcomp.name}) does not provide", a.span)

    allocated = {}
    for asm_name, cont in arch.allocation:
        if asm_name not in assemblies:
            err("UNRESOLVED_ASSEMBLY", f"allocation of unknown assembly '{asm_name}'")
        if cont not in containers:
            err("UNRESOLVED_CONTAINER", f"assembly '{asm_name}' allocated on unknown "
                f"container '{cont}'")
        if asm_name in allocated:
            err("DUPLICATE_ALLOCATION", f"assembly '{asm_name}' allocated twice")
        allocated[asm_name] = cont
    for asm in arch.assemblies:
        if asm.name not in allocated:
            err("UNALLOCATED", f"assembly '{asm.name}' is not allocated", asm.span)

    for q in arch.queues:
        asm = assemblies.get(q.consumer)
        if asm is None:
            err("UNRESOLVED_ASSEMBLY", f"queue '{q.name}' consumer '{q.consumer}' is unknown",
                q.span)
            continue
        comp = components.get(asm.component)
        if comp is not None and q.operation not in comp.operations:
            err("UNRESOLVED_OPERATION",
                f"queue '{q.name}' consumer '{q.consumer}' lacks operation '{q.operation}'",
                q.span)

    cycle = _find_call_cycle(arch, components, assemblies)
    if cycle:
        err("CALL_CYCLE", "synchronous calls form a cycle: " + " -> ".join(cycle),
            assemblies[cycle[0]].span)

    usage = arch.usage
    if usage is None:
        err("MISSING_USAGE", "architecture declares no usage model", arch.span)
    else:
        if not isinstance(usage.population, int) or usage.population < 1:
            err("INVALID_POPULATION", f"population must be a positive integer, got "
                f"{usage.population!r}", usage.span)
        check_expr(usage.think_time, "think time", usage.span)
        if not usage.scenario:
            err("PROB_SUM", "usage scenario is empty", usage.span)
        else:
            check_probs(usage.scenario, "usage scenario", usage.span)
        for _, call in usage.scenario:
            asm = assemblies.get(call.assembly)
            if asm is None:
                err("UNRESOLVED_ASSEMBLY", f"usage calls unknown assembly '{call.assembly}'",
                    usage.span)
                continue
            comp = components.get(asm.component)
            if comp is not None and call.operation not in comp.operations:
                err("UNRESOLVED_OPERATION",
                    f"usage calls '{call.label}' which is not provided", usage.span)
    return diags


def _find_call_cycle(arch, components, assemblies):
    edges = {}
    for asm in arch.assemblies:
        comp = components.get(asm.component)
        targets = []
        if comp is not None:
            for actions in comp.operations.values():
                for a in _walk(actions):
                    if isinstance(a, ExternalCall) and asm.wiring.get(a.role) in assemblies:
                        t = asm.wiring[a.role]
                        if t not in targets:
                            targets.append(t)
        edges[asm.name] = targets

    state = {}
    stack = []

    def visit(n):
        state[n] = 1
        stack.append(n)
        for m in edges.get(n, ()):
            if state.get(m) == 1:
                return stack[stack.index(m):] + [m]
            if m not in state:
                found = visit(m)
                if found:
                    return found
        stack.pop()
        state[n] = 2
        return None

    for n in edges:
        if n not in state:
            found = visit(n)
            if found:
                return found
    return None
