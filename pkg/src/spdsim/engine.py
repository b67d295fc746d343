"""Event calendar, generator processes and container servers."""

from __future__ import annotations

import heapq
from collections import deque

# Same-instant ordering: measurements first, then policy decisions, then work.
PRIO_MONITOR = 0
PRIO_POLICY = 1
PRIO_WORK = 2


class Engine:
    """Future event list ordered by (time, priority, sequence)."""

    def __init__(self):
        self.now = 0.0
        self._heap = []
        self._seq = 0
        self.events = 0

    def schedule(self, t: float, prio: int, fn, *args):
        self._seq += 1
        heapq.heappush(self._heap, (t, prio, self._seq, fn, args))

    def run(self, until: float):
        heap = self._heap
        pop = heapq.heappop
        while heap and heap[0][0] <= until:
            t, _, _, fn, args = pop(heap)
            self.now = t
            self.events += 1
            fn(*args)
        self.now = until


class Process:
    """Drives a generator that yields commands to the engine.

    Commands: ``("delay", dt)``, ``("work", server, amount)`` and
    ``("wait",)`` (parked until someone calls :meth:`wake`).
    """

    __slots__ = ("engine", "gen", "done")

    def __init__(self, engine, gen):
        self.engine = engine
        self.gen = gen
        self.done = False

    def start(self):
        self.engine.schedule(self.engine.now, PRIO_WORK, self.resume)

    def wake(self):
        self.engine.schedule(self.engine.now, PRIO_WORK, self.resume)

    def resume(self):
        gen = self.gen
        while True:
            try:
                cmd = gen.send(None)
            except StopIteration:
                self.done = True
                return
            kind = cmd[0]
            if kind == "work":
                if cmd[2] > 0:
                    cmd[1].submit(cmd[2], self)
                    return
            elif kind == "delay":
                if cmd[1] > 0:
                    self.engine.schedule(self.engine.now + cmd[1], PRIO_WORK, self.resume)
                    return
            else:
                return


class Server:
    """A container's CPU: processor sharing via virtual time, or FCFS."""

    def __init__(self, engine, rate: float, discipline: str = "ps"):
        self.engine = engine
        self.rate = rate
        self.fcfs = discipline == "fcfs"
        self.n = 0
        self._jobs = []  # ps: heap of (virtual finish, seq, process)
        self._queue = deque()  # fcfs: (amount, process)
        self._v = 0.0
        self._t = 0.0
        self._seq = 0
        self._token = 0
        self.busy = 0.0  # accumulated busy seconds up to self._t
        self.released_at = None

    def busy_until(self, now: float) -> float:
        """Accumulated busy time at ``now``."""
        return self.busy + (now - self._t if self.n else 0.0)

    def _advance(self, now):
        if self.n:
            dt = now - self._t
            self.busy += dt
            if not self.fcfs:
                self._v += dt * self.rate / self.n
        self._t = now

    def submit(self, amount, proc):
        now = self.engine.now
        self._advance(now)
        self.n += 1
        if self.fcfs:
            self._queue.append((amount, proc))
            if self.n == 1:
                self._start_head(now)
            return
        self._seq += 1
        heapq.heappush(self._jobs, (self._v + amount, self._seq, proc))
        self._reschedule(now)

    def _reschedule(self, now):
        self._token += 1
        if self._jobs:
            dt = max(0.0, self._jobs[0][0] - self._v) * self.n / self.rate
            self.engine.schedule(now + dt, PRIO_WORK, self._complete, self._token)

    def _complete(self, token):
        if token != self._token:
            return
        now = self.engine.now
        self._advance(now)
        jobs = self._jobs
        vf, _, proc = heapq.heappop(jobs)
        if vf > self._v:
            self._v = vf  # absorb rounding in the completion time
        finished = [proc]
        eps = 1e-12 * max(1.0, abs(self._v))
        while jobs and jobs[0][0] <= self._v + eps:
            finished.append(heapq.heappop(jobs)[2])
        self.n -= len(finished)
        self._reschedule(now)
        for p in finished:
            p.resume()

    def _start_head(self, now):
        amount, _ = self._queue[0]
        self.engine.schedule(now + amount / self.rate, PRIO_WORK, self._fcfs_done)

    def _fcfs_done(self):
        now = self.engine.now
        self._advance(now)
        _, proc = self._queue.popleft()
        self.n -= 1
        if self._queue:
            self._start_head(now)
        proc.resume()
