"""Runtime configuration and the elasticity transformation rules.

The runtime configuration is the mutable, simulation-time copy of the
architecture: which container instances exist, which assembly replicas run
on them, and the enactment history of every target group. Two families of
transformations move it between states:

* bottom-up (policies on an elastic infrastructure): containers are added or
  removed and every service group hosted on the infrastructure follows with
  one replica per container;
* top-down (policies on a service or competing-consumers group): replicas
  are added or removed and the hosting infrastructure grows or shrinks only
  as far as placement requires.

Every transformation call appends exactly one record to the target's
history. Groups changed as a side effect get a record flagged ``causal``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from .diagnostics import ConfigError
from .spd import CompetingConsumersGroup, ElasticInfrastructure, ServiceGroup

APPLIED = "applied"
CLAMPED = "clamped"
VETOED = "vetoed"


@dataclass
class EnactmentRecord:
    time: float
    target: str
    policy: Optional[str]
    size_before: int
    size_after: int
    outcome: str
    requested: Optional[int] = None  # size asked for before clamping
    reason: str = ""
    causal: bool = False

    @property
    def enacted(self) -> bool:
        return self.outcome in (APPLIED, CLAMPED)

    @property
    def outcome_label(self) -> str:
        if self.outcome == CLAMPED:
            return f"clamped({self.requested}->{self.size_after})"
        if self.outcome == VETOED:
            return f"vetoed({self.reason})"
        return APPLIED


class ContainerInstance:
    """One live (or draining) resource container."""

    def __init__(self, uid, spec, name, created_at, elastic):
        self.uid = uid
        self.spec = spec
        self.name = name
        self.created_at = created_at
        self.removed_at = None
        self.elastic = elastic  # created by a transformation
        self.pinned = False  # hosts a rigid assembly

    def __repr__(self):
        return f"<container {self.name}>"


class AssemblyInstance:
    def __init__(self, uid, assembly, container, created_at):
        self.uid = uid
        self.assembly = assembly
        self.container = container
        self.created_at = created_at
        self.removed_at = None
        self.name = f"{assembly}#{uid}"

    def __repr__(self):
        return f"<replica {self.name} on {self.container.name}>"


class TargetGroupCfg:
    def __init__(self, spec):
        self.spec = spec
        self.name = spec.name
        self.history = []

    @property
    def size(self) -> int:
        return len(self.members)

    def last_enactment(self, policy=None) -> Optional[float]:
        for rec in reversed(self.history):
            if rec.enacted and not rec.causal and (policy is None or rec.policy == policy):
                return rec.time
        return None


class ElasticInfrastructureCfg(TargetGroupCfg):
    def __init__(self, spec, unit_container, first):
        super().__init__(spec)
        self.unit_container = unit_container
        self.containers = [first]

    @property
    def members(self):
        return self.containers


class ServiceGroupCfg(TargetGroupCfg):
    def __init__(self, spec, unit_assembly, hosting, first, max_per_container):
        super().__init__(spec)
        self.unit_assembly = unit_assembly
        self.hosting = hosting
        self.replicas = [first]
        self.max_per_container = max_per_container
        self.load_balancer = getattr(spec, "load_balancer", None)

    @property
    def members(self):
        return self.replicas

    def count_on(self, container) -> int:
        return sum(1 for r in self.replicas if r.container is container)


class CompetingConsumersGroupCfg(ServiceGroupCfg):
    def __init__(self, spec, unit_assembly, hosting, first, max_per_container):
        super().__init__(spec, unit_assembly, hosting, first, max_per_container)
        self.queue = spec.queue


@dataclass
class TransformationReport:
    target: str
    size_before: int
    size_after: int
    record: EnactmentRecord
    created_containers: list = field(default_factory=list)
    removed_containers: list = field(default_factory=list)
    created_replicas: list = field(default_factory=list)  # (group name, instance)
    removed_replicas: list = field(default_factory=list)

    @property
    def changed(self) -> bool:
        return bool(self.created_containers or self.removed_containers
                    or self.created_replicas or self.removed_replicas)


class RuntimeConfiguration:
    """Current architecture configuration plus per-target-group state.

    Together with the monitor of a running simulation this forms the state
    tuple (configuration, usage, measurements, time).
    """

    def __init__(self, architecture, spd, max_replicas_per_container):
        self.architecture = architecture
        self.spd = spd
        self.max_replicas_per_container = max_replicas_per_container
        self.groups = {}
        self.static_containers = {}
        self.static_assemblies = {}
        self.enacted_policy = None
        self.time = 0.0
        self.journal = []  # every record of every group, in creation order
        self._uid = 0
        self._serial = Counter()

    # -- factories

    def _next_uid(self) -> int:
        self._uid += 1
        return self._uid

    def new_container(self, spec, now, elastic=True) -> ContainerInstance:
        self._serial[spec.name] += 1
        return ContainerInstance(self._next_uid(), spec, f"{spec.name}#{self._serial[spec.name]}",
                                 now, elastic)

    def new_replica(self, assembly, container, now) -> AssemblyInstance:
        return AssemblyInstance(self._next_uid(), assembly, container, now)

    # -- queries

    @property
    def elastic_infrastructures(self):
        return [g for g in self.groups.values() if isinstance(g, ElasticInfrastructureCfg)]

    def hosted_groups(self, ei):
        return [g for g in self.groups.values()
                if isinstance(g, ServiceGroupCfg) and g.hosting is ei]

    def group_of_assembly(self, assembly) -> Optional[ServiceGroupCfg]:
        for g in self.groups.values():
            if isinstance(g, ServiceGroupCfg) and g.unit_assembly == assembly:
                return g
        return None

    def instances(self, assembly):
        """Live instances of ``assembly``: the group replicas or the rigid instance."""
        g = self.group_of_assembly(assembly)
        if g is not None:
            return g.replicas
        return [self.static_assemblies[assembly]]

    def live_containers(self):
        seen = {}
        for c in self.static_containers.values():
            seen[c.uid] = c
        for ei in self.elastic_infrastructures:
            for c in ei.containers:
                seen[c.uid] = c
        return [c for c in seen.values() if c.removed_at is None]

    def sizes(self) -> dict:
        return {name: g.size for name, g in self.groups.items()}


def identify_slingshot(arch, spd, max_replicas_per_container: int = 1) -> RuntimeConfiguration:
    """Build the initial runtime configuration from the static models.

    Every container gets one instance and every assembly one instance on its
    allocated container; each target group declared in ``spd`` gets a cfg
    of size one. Assemblies outside all groups stay rigid and pin their
    container.
    """
    if not isinstance(max_replicas_per_container, int) or max_replicas_per_container < 1:
        raise ConfigError(f"maxReplicasPerContainer must be a positive integer, got "
                          f"{max_replicas_per_container!r}")
    cfg = RuntimeConfiguration(arch, spd, max_replicas_per_container)
    for spec in arch.containers:
        cfg.static_containers[spec.name] = cfg.new_container(spec, 0.0, elastic=False)
    for asm_name, cont in arch.allocation:
        if cont not in cfg.static_containers:
            raise ConfigError(f"assembly '{asm_name}' allocated on unknown container '{cont}'")
        cfg.static_assemblies[asm_name] = cfg.new_replica(
            asm_name, cfg.static_containers[cont], 0.0)
    if spd is None:
        _pin(cfg)
        return cfg

    for tg in spd.target_groups:
        if isinstance(tg, ElasticInfrastructure):
            if tg.unit_container not in cfg.static_containers:
                raise ConfigError(f"'{tg.name}' uses unknown unit container "
                                  f"'{tg.unit_container}'")
            first = cfg.static_containers[tg.unit_container]
            if any(isinstance(g, ElasticInfrastructureCfg) and g.containers[0] is first
                   for g in cfg.groups.values()):
                raise ConfigError(f"container '{tg.unit_container}' is the unit of two "
                                  "elastic infrastructures")
            cfg.groups[tg.name] = ElasticInfrastructureCfg(tg, arch.container(tg.unit_container),
                                                           first)
    for tg in spd.target_groups:
        if isinstance(tg, ElasticInfrastructure):
            continue
        host = cfg.groups.get(tg.hosting_infrastructure)
        if not isinstance(host, ElasticInfrastructureCfg):
            raise ConfigError(f"'{tg.name}' is hosted on undeclared elastic infrastructure "
                              f"'{tg.hosting_infrastructure}'")
        unit = tg.unit_assembly if isinstance(tg, ServiceGroup) else tg.unit_consumer
        if unit not in cfg.static_assemblies:
            raise ConfigError(f"'{tg.name}' uses unknown assembly '{unit}'")
        if cfg.group_of_assembly(unit) is not None:
            raise ConfigError(f"assembly '{unit}' belongs to two target groups")
        first = cfg.static_assemblies[unit]
        if first.container not in host.containers:
            raise ConfigError(f"assembly '{unit}' is not allocated inside '{host.name}'")
        cls = CompetingConsumersGroupCfg if isinstance(tg, CompetingConsumersGroup) \
            else ServiceGroupCfg
        cfg.groups[tg.name] = cls(tg, unit, host, first, max_replicas_per_container)
    # keep declaration order of the SPD
    cfg.groups = {tg.name: cfg.groups[tg.name] for tg in spd.target_groups}
    _pin(cfg)
    return cfg


def _pin(cfg):
    for name, inst in cfg.static_assemblies.items():
        if cfg.group_of_assembly(name) is None:
            inst.container.pinned = True


# --------------------------------------------------------------------------
# Transformations


def _resolve(cfg, group, cls):
    if isinstance(group, str):
        group = cfg.groups[group]
    if not isinstance(group, cls):
        raise ConfigError(f"'{group.name}' is not a {cls.__name__}")
    return group


def _check_k(k):
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")


def _record(cfg, group, before, now, policy, requested, causal=False, veto_reason="min-size"):
    after = group.size
    if after == before:
        outcome, reason = VETOED, veto_reason
    elif requested is not None and requested != after:
        outcome, reason = CLAMPED, ""
    else:
        outcome, reason = APPLIED, ""
    rec = EnactmentRecord(now, group.name, policy, before, after, outcome,
                          requested if outcome == CLAMPED else None, reason, causal)
    append_record(cfg, group, rec)
    return rec


def append_record(cfg, group, rec):
    group.history.append(rec)
    cfg.journal.append(rec)


def _causal(cfg, group, before, now, policy):
    if group.size != before:
        append_record(cfg, group, EnactmentRecord(now, group.name, policy, before, group.size,
                                                  APPLIED, causal=True))


def scale_out_bottom_up(cfg, ei, k, now=None, policy=None, requested=None):
    """Add ``k`` containers to ``ei`` and one replica per new container to each hosted group."""
    _check_k(k)
    ei = _resolve(cfg, ei, ElasticInfrastructureCfg)
    now = cfg.time if now is None else now
    cfg.time = now
    hosted = cfg.hosted_groups(ei)
    before = ei.size
    hosted_before = [g.size for g in hosted]
    created, replicas = [], []
    for _ in range(k):
        c = cfg.new_container(ei.unit_container, now)
        ei.containers.append(c)
        created.append(c)
        for g in hosted:
            r = cfg.new_replica(g.unit_assembly, c, now)
            g.replicas.append(r)
            replicas.append((g.name, r))
    for g, b in zip(hosted, hosted_before):
        _causal(cfg, g, b, now, policy)
    rec = _record(cfg, ei, before, now, policy, requested if requested is not None else before + k)
    return TransformationReport(ei.name, before, ei.size, rec, created_containers=created,
                                created_replicas=replicas)


def scale_in_bottom_up(cfg, ei, k, now=None, policy=None, requested=None):
    """Remove up to ``k`` containers, newest first, with their hosted replicas.

    A container is skipped when removing it would empty a hosted group or
    when it hosts a rigid assembly.
    """
    _check_k(k)
    ei = _resolve(cfg, ei, ElasticInfrastructureCfg)
    now = cfg.time if now is None else now
    cfg.time = now
    hosted = cfg.hosted_groups(ei)
    before = ei.size
    hosted_before = [g.size for g in hosted]
    goal = min(k, before - 1)
    removed, removed_replicas = [], []
    for c in reversed(list(ei.containers)):
        if len(removed) >= goal:
            break
        if c.pinned:
            continue
        if any(g.size - g.count_on(c) < 1 for g in hosted):
            continue
        ei.containers.remove(c)
        c.removed_at = now
        removed.append(c)
        for g in hosted:
            for r in [r for r in g.replicas if r.container is c]:
                g.replicas.remove(r)
                r.removed_at = now
                removed_replicas.append((g.name, r))
    for g, b in zip(hosted, hosted_before):
        _causal(cfg, g, b, now, policy)
    reason = "min-size" if goal == 0 else "pinned"
    rec = _record(cfg, ei, before, now, policy,
                  requested if requested is not None else max(1, before - k), veto_reason=reason)
    return TransformationReport(ei.name, before, ei.size, rec, removed_containers=removed,
                                removed_replicas=removed_replicas)


def scale_out_top_down(cfg, group, k, now=None, policy=None, requested=None):
    """Add ``k`` replicas to a service or competing-consumers group.

    Each replica goes to the container with spare capacity holding the
    fewest replicas of this group (oldest container on ties). When no
    container has room the hosting infrastructure grows by the minimal
    number of containers; other groups are not replicated onto them.
    """
    _check_k(k)
    group = _resolve(cfg, group, ServiceGroupCfg)
    now = cfg.time if now is None else now
    cfg.time = now
    ei = group.hosting
    before, ei_before = group.size, ei.size
    cap = group.max_per_container
    created, replicas = [], []
    for placed in range(k):
        counts = Counter(r.container.uid for r in group.replicas)
        candidates = [(counts[c.uid], i, c) for i, c in enumerate(ei.containers)
                      if counts[c.uid] < cap]
        if not candidates:
            for _ in range(math.ceil((k - placed) / cap)):
                c = cfg.new_container(ei.unit_container, now)
                ei.containers.append(c)
                created.append(c)
            candidates = [(counts[c.uid], i, c) for i, c in enumerate(ei.containers)
                          if counts[c.uid] < cap]
        _, _, target = min(candidates, key=lambda t: (t[0], t[1]))
        r = cfg.new_replica(group.unit_assembly, target, now)
        group.replicas.append(r)
        replicas.append((group.name, r))
    _causal(cfg, ei, ei_before, now, policy)
    rec = _record(cfg, group, before, now, policy,
                  requested if requested is not None else before + k)
    return TransformationReport(group.name, before, group.size, rec, created_containers=created,
                                created_replicas=replicas)


def scale_in_top_down(cfg, group, k, now=None, policy=None, requested=None):
    """Remove up to ``k`` replicas, newest first, then release emptied containers."""
    _check_k(k)
    group = _resolve(cfg, group, ServiceGroupCfg)
    now = cfg.time if now is None else now
    cfg.time = now
    ei = group.hosting
    before, ei_before = group.size, ei.size
    goal = min(k, before - 1)
    removed_replicas = []
    for r in list(reversed(group.replicas))[:goal]:
        group.replicas.remove(r)
        r.removed_at = now
        removed_replicas.append((group.name, r))
    removed = _release_empty(cfg, ei, now)
    _causal(cfg, ei, ei_before, now, policy)
    rec = _record(cfg, group, before, now, policy,
                  requested if requested is not None else max(1, before - k))
    return TransformationReport(group.name, before, group.size, rec, removed_containers=removed,
                                removed_replicas=removed_replicas)


def _release_empty(cfg, ei, now):
    used = {r.container.uid for g in cfg.hosted_groups(ei) for r in g.replicas}
    removed = []
    for c in reversed(list(ei.containers)):
        if ei.size <= 1:
            break
        if c.pinned or c.uid in used:
            continue
        ei.containers.remove(c)
        c.removed_at = now
        removed.append(c)
    return removed


# --------------------------------------------------------------------------
# Invariants


def check_invariants(cfg) -> list:
    """Violated runtime invariants, as human-readable strings (empty when sound)."""
    problems = []
    live = {c.uid for c in cfg.live_containers()}
    for g in cfg.groups.values():
        if g.size < 1:
            problems.append(f"{g.name}: size {g.size} < 1")
        prev = None
        for rec in g.history:
            if rec.enacted and rec.size_after == rec.size_before:
                problems.append(f"{g.name}: {rec.outcome} record without size change")
            if prev is not None and prev.size_after != rec.size_before:
                problems.append(f"{g.name}: history breaks at t={rec.time} "
                                 f"({prev.size_after} -> {rec.size_before})")
            prev = rec
        if prev is not None and prev.size_after != g.size:
            problems.append(f"{g.name}: last record size {prev.size_after} != size {g.size}")
        if isinstance(g, ElasticInfrastructureCfg):
            for c in g.containers:
                if c.removed_at is not None:
                    problems.append(f"{g.name}: removed container {c.name} still listed")
            continue
        hosting = {c.uid for c in g.hosting.containers}
        counts = Counter(r.container.uid for r in g.replicas)
        for r in g.replicas:
            if r.container.uid not in hosting:
                problems.append(f"{g.name}: replica {r.name} outside '{g.hosting.name}'")
            if r.container.uid not in live:
                problems.append(f"{g.name}: replica {r.name} on released container")
        for uid, n in counts.items():
            if n > g.max_per_container:
                problems.append(f"{g.name}: {n} replicas on one container "
                                f"(max {g.max_per_container})")
    for name, inst in cfg.static_assemblies.items():
        if cfg.group_of_assembly(name) is None and inst.container.uid not in live:
            problems.append(f"rigid assembly {name} lost its container")
    return problems
