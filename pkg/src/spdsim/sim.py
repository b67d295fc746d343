"""Discrete-event simulation of an architecture under a scaling policy definition.

Closed users cycle think -> system call -> response. Each container serves
CPU demand with its scheduling discipline; service groups spread calls
round-robin over live replicas; asynchronous sends land in broker queues that
consumer replicas drain competitively. A monitor samples every second and
policies are evaluated periodically.
"""

from __future__ import annotations

import copy
import hashlib
import json
import random
from bisect import bisect_right
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from itertools import accumulate

from .arch import AsyncSend, Branch, ExternalCall, InternalAction
from .diagnostics import SimulationError
from .enactment import enact_policy
from .engine import PRIO_MONITOR, PRIO_POLICY, Engine, Process, Server
from .monitor import Monitor, TriggerResult, evaluate_trigger, stimulus_key
from .runtime import CompetingConsumersGroupCfg, ElasticInfrastructureCfg, check_invariants
from .spd import OperationResponseTime, SimpleFireOnTrend

POLICY_PERIOD = 15.0
SAMPLE_PERIOD = 1.0


@dataclass
class SimulationResult:
    seed: int
    horizon: float
    response_times: dict  # system operation -> list of (completion time, duration)
    cycles: list  # (completion time, think time, response time) per user cycle
    started: dict  # system operation -> calls issued
    utilization: dict  # container instance -> busy fraction over its lifetime
    capacity: list  # (t, busy seconds, live containers) per sampling period
    size_timeline: dict  # target group -> [(time, size)], a step function
    trace: list  # every EnactmentRecord, causal ones included
    initial_sizes: dict = field(default_factory=dict)
    events: int = 0

    @property
    def adaptation_trace(self):
        """Records produced by policy decisions (side effects excluded)."""
        return [r for r in self.trace if not r.causal]


def stream(seed: int, key: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}/{key}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _action_keys(arch) -> dict:
    keys = {}

    def walk(actions, prefix):
        for i, a in enumerate(actions):
            path = f"{prefix}/{i}"
            keys[id(a)] = path
            if isinstance(a, Branch):
                for j, (_, sub) in enumerate(a.cases):
                    walk(sub, f"{path}/{j}")

    for comp in arch.components:
        for op, actions in comp.operations.items():
            walk(actions, f"{comp.name}.{op}")
    return keys


class Simulation:
    def __init__(self, arch, spd, cfg0, horizon: float, seed: int,
                 policy_period: float = POLICY_PERIOD, sample_period: float = SAMPLE_PERIOD):
        if not horizon > 0:
            raise ValueError("horizon must be positive")
        self.arch = arch
        self.spd = spd
        self.horizon = float(horizon)
        self.seed = seed
        self.policy_period = policy_period
        self.sample_period = sample_period
        memo = {id(arch): arch, id(cfg0.architecture): cfg0.architecture}
        if spd is not None:
            memo[id(spd)] = spd
        self.cfg = cfg = copy.deepcopy(cfg0, memo)
        self.engine = Engine()
        self.monitor = Monitor(size_of=lambda name: cfg.groups[name].size)

        self._components = {c.name: c for c in arch.components}
        self._ops = {a.name: self._components[a.component].operations for a in arch.assemblies}
        self._wiring = {(a.name, role): t for a in arch.assemblies for role, t in a.wiring.items()}
        self._group_of = {}
        for g in cfg.groups.values():
            if not isinstance(g, ElasticInfrastructureCfg):
                self._group_of[g.unit_assembly] = g
        self._rr = Counter()
        self._action_key = _action_keys(arch)
        self._action_rng = {}

        self._servers = {}
        self._containers = {}
        self._busy_mark = {}
        self._busy_final = {}
        self._ei_of = {}
        self._inflight = Counter()
        self._queues = {q.name: deque() for q in arch.queues}
        self._idle = {q.name: deque() for q in arch.queues}
        self._workers = {}

        self.response_times = defaultdict(list)
        self.started = Counter()
        self.cycles = []
        self.capacity = []
        self.timeline = {name: [(0.0, g.size)] for name, g in cfg.groups.items()}
        self._journal_seen = len(cfg.journal)
        self._rt_watch = defaultdict(list)  # (assembly, op) -> [(target, key)]
        self._rt_watch_ei = defaultdict(list)  # ei name -> [(op or None, key)]
        self._policies = list(spd.active_policies) if spd is not None else []
        self._watch()
        self._refresh_topology()

    # -- setup

    def _watch(self):
        for p in self._policies:
            stim = p.trigger.stimulus
            key = stimulus_key(stim)
            window = getattr(stim, "window", None) or 0.0
            count = p.trigger.window_count if isinstance(p.trigger, SimpleFireOnTrend) else 1
            self.monitor.retain(p.target, key, window * count)
            if not isinstance(stim, OperationResponseTime):
                continue
            tg = self.cfg.groups[p.target]
            if isinstance(tg, ElasticInfrastructureCfg):
                entry = (stim.operation, key)
                if entry not in self._rt_watch_ei[tg.name]:
                    self._rt_watch_ei[tg.name].append(entry)
                continue
            for op in self._ops[tg.unit_assembly]:
                if stim.operation in (None, op) and (p.target, key) not in \
                        self._rt_watch[(tg.unit_assembly, op)]:
                    self._rt_watch[(tg.unit_assembly, op)].append((p.target, key))

    def _server(self, container) -> Server:
        srv = self._servers.get(container.uid)
        if srv is None:
            srv = Server(self.engine, container.spec.processing_rate, container.spec.scheduling)
            self._servers[container.uid] = srv
        return srv

    def _refresh_topology(self):
        now = self.engine.now
        cfg = self.cfg
        live = cfg.live_containers()
        for c in live:
            if c.uid not in self._containers:
                self._containers[c.uid] = c
                self._server(c)
                self._busy_mark[c.uid] = 0.0
        for uid, c in self._containers.items():
            if c.removed_at is not None and uid not in self._busy_final:
                self._busy_final[uid] = self._servers[uid].busy_until(now)
        self._live = live
        self._ei_of = {c.uid: ei.name for ei in cfg.elastic_infrastructures for c in ei.containers}
        for q in self.arch.queues:
            for inst in self._instances(q.consumer):
                if inst.uid not in self._workers:
                    proc = Process(self.engine, None)
                    proc.gen = self._consumer(inst, q, proc)
                    self._workers[inst.uid] = proc
                    proc.start()

    def _instances(self, assembly):
        g = self._group_of.get(assembly)
        return g.replicas if g is not None else [self.cfg.static_assemblies[assembly]]

    def _arng(self, action) -> random.Random:
        rng = self._action_rng.get(id(action))
        if rng is None:
            rng = self._action_rng[id(action)] = stream(self.seed,
                                                        "action/" + self._action_key[id(action)])
        return rng

    # -- processes

    def _user(self, uid):
        usage = self.arch.usage
        rng = stream(self.seed, f"user/{uid}")
        calls = [c for _, c in usage.scenario]
        cum = list(accumulate(p for p, _ in usage.scenario))
        cum[-1] = float("inf")
        think = usage.think_time
        engine = self.engine
        while True:
            z = think.sample(rng)
            yield ("delay", z)
            call = calls[bisect_right(cum, rng.random())] if len(calls) > 1 else calls[0]
            label = call.label
            self.started[label] += 1
            t0 = engine.now
            yield from self._invoke(call.assembly, call.operation)
            dur = engine.now - t0
            self.response_times[label].append((engine.now, dur))
            self.cycles.append((engine.now, z, dur))

    def _consumer(self, inst, queue, proc):
        messages = self._queues[queue.name]
        idle = self._idle[queue.name]
        while inst.removed_at is None:
            if messages:
                messages.popleft()
                yield from self._execute(inst, queue.operation)
            else:
                idle.append((inst, proc))
                yield ("wait",)

    def _enqueue(self, name):
        self._queues[name].append(self.engine.now)
        idle = self._idle[name]
        while idle:
            inst, proc = idle.popleft()
            if inst.removed_at is None:
                proc.wake()
                return

    def _invoke(self, assembly, op):
        insts = self._instances(assembly)
        i = self._rr[assembly]
        self._rr[assembly] = i + 1
        yield from self._execute(insts[i % len(insts)], op)

    def _execute(self, inst, op):
        group = self._group_of.get(inst.assembly)
        if group is not None:
            self._inflight[group.name] += 1
        t0 = self.engine.now
        yield from self._run(inst, self._ops[inst.assembly][op])
        if group is not None:
            self._inflight[group.name] -= 1
        now = self.engine.now
        for target, key in self._rt_watch.get((inst.assembly, op), ()):
            self.monitor.record(target, key, now, now - t0)
        ei = self._ei_of.get(inst.container.uid)
        if ei is not None:
            for wanted, key in self._rt_watch_ei.get(ei, ()):
                if wanted in (None, op):
                    self.monitor.record(ei, key, now, now - t0)

    def _run(self, inst, actions):
        for a in actions:
            kind = type(a)
            if kind is InternalAction:
                yield ("work", self._server(inst.container), a.demand.sample(self._arng(a)))
            elif kind is ExternalCall:
                yield from self._invoke(self._wiring[(inst.assembly, a.role)], a.operation)
            elif kind is Branch:
                u = self._arng(a).random()
                acc = 0.0
                chosen = a.cases[-1][1]
                for p, sub in a.cases:
                    acc += p
                    if u < acc:
                        chosen = sub
                        break
                yield from self._run(inst, chosen)
            elif kind is AsyncSend:
                self._enqueue(a.queue)

    # -- periodic events

    def _sample(self):
        now = self.engine.now
        cfg = self.cfg
        frac = {}
        if now > 0:
            dt = self.sample_period
            busy_total = 0.0
            for c in self._live:
                b = self._servers[c.uid].busy_until(now)
                delta = b - self._busy_mark[c.uid]
                self._busy_mark[c.uid] = b
                busy_total += delta
                frac[c.uid] = min(1.0, max(0.0, delta / dt))
            self.capacity.append((now, busy_total, len(self._live)))
        for name, g in cfg.groups.items():
            if isinstance(g, ElasticInfrastructureCfg):
                hosts = g.containers
                ql = sum(self._servers[c.uid].n for c in hosts)
            else:
                hosts = list({r.container.uid: r.container for r in g.replicas}.values())
                ql = len(self._queues[g.queue]) if isinstance(g, CompetingConsumersGroupCfg) \
                    else self._inflight[name]
            self.monitor.record(name, ("ql",), now, ql)
            if frac:
                self.monitor.record(name, ("cpu",), now,
                                    sum(frac.get(c.uid, 0.0) for c in hosts) / len(hosts))
        nxt = now + self.sample_period
        if nxt <= self.horizon:
            self.engine.schedule(nxt, PRIO_MONITOR, self._sample)

    def _evaluate(self):
        now = self.engine.now
        for policy in self._policies:
            if evaluate_trigger(policy.trigger, self.monitor, now, policy.target) \
                    is TriggerResult.FIRED:
                enact_policy(policy, self.cfg, now)
                self._after_enactment(now)
        nxt = now + self.policy_period
        if nxt <= self.horizon:
            self.engine.schedule(nxt, PRIO_POLICY, self._evaluate)

    def _after_enactment(self, now):
        journal = self.cfg.journal
        new = journal[self._journal_seen:]
        self._journal_seen = len(journal)
        if not any(r.size_after != r.size_before for r in new):
            return
        for r in new:
            if r.size_after != r.size_before:
                self.timeline[r.target].append((now, r.size_after))
        self._refresh_topology()
        problems = check_invariants(self.cfg)
        if problems:
            raise SimulationError("runtime invariant violated at t=%g" % now, json.dumps({
                "problems": problems, "sizes": self.cfg.sizes(),
                "recent": [vars(r) for r in journal[-10:]]}, indent=2))

    # -- driver

    def run(self) -> SimulationResult:
        engine = self.engine
        usage = self.arch.usage
        initial = self.cfg.sizes()
        for uid in range(usage.population):
            Process(engine, self._user(uid)).start()
        engine.schedule(0.0, PRIO_MONITOR, self._sample)
        if self._policies:
            engine.schedule(0.0, PRIO_POLICY, self._evaluate)
        engine.run(self.horizon)
        end = self.horizon
        util = {}
        for uid, c in self._containers.items():
            stop = c.removed_at if c.removed_at is not None else end
            busy = self._busy_final.get(uid)
            if busy is None:
                busy = self._servers[uid].busy_until(end)
            life = stop - c.created_at
            util[c.name] = min(1.0, busy / life) if life > 0 else 0.0
        return SimulationResult(
            seed=self.seed, horizon=self.horizon,
            response_times={k: v for k, v in sorted(self.response_times.items())},
            cycles=self.cycles, started=dict(sorted(self.started.items())),
            utilization=util, capacity=self.capacity, size_timeline=self.timeline,
            trace=list(self.cfg.journal), initial_sizes=initial, events=engine.events)


def run_simulation(arch, spd, cfg0, horizon: float, seed: int, **options) -> SimulationResult:
    """Simulate exactly ``horizon`` seconds; deterministic in (models, seed)."""
    return Simulation(arch, spd, cfg0, horizon, seed, **options).run()
