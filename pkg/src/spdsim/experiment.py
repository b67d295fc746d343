"""Experiment specs, replicated runs and their on-disk outputs."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

from .analysis import confidence_interval
from .arch import Constant, Exponential
from .arch_text import read_architecture
from .diagnostics import ConfigError, DiagnosticError, SimulationError
from .metrics import compute_metrics
from .runtime import identify_slingshot
from .sim import run_simulation
from .spd import validate_spd
from .spd_text import read_spd

SUMMARY_METRICS = ("mean_rt", "p95_rt", "throughput", "utilization", "mean_containers",
                   "adaptations", "first_enactment")
BUILTIN_PREFIX = "rmuc:"


def resolve_path(path: str) -> str:
    """Map ``rmuc:<file>`` to the bundled example, leave other paths alone."""
    if isinstance(path, str) and path.startswith(BUILTIN_PREFIX):
        return str(resources.files("spdsim") / "rmuc" / path[len(BUILTIN_PREFIX):])
    return path


def builtin_workloads() -> dict:
    with open(resolve_path("rmuc:workloads.json"), encoding="utf-8") as fh:
        return json.load(fh)


@dataclass
class Workload:
    label: str
    population: int
    think_time: Optional[float] = None  # mean seconds, exponential; None keeps the model's

    @classmethod
    def parse(cls, value) -> "Workload":
        if isinstance(value, str):
            table = builtin_workloads()
            if value not in table:
                raise ConfigError(f"unknown workload '{value}' (known: {', '.join(table)})")
            return cls(value, **table[value])
        if isinstance(value, dict):
            try:
                return cls(value.get("label", f"N{value['population']}"),
                           int(value["population"]), value.get("think_time"))
            except KeyError as e:
                raise ConfigError(f"workload lacks {e}") from None
        raise ConfigError(f"workload must be a name or an object, got {value!r}")


@dataclass
class ExperimentSpec:
    architecture: str
    spd: Optional[str] = None  # None is the static "none" run
    horizon: float = 300.0
    warmup: float = 0.0
    replications: int = 5
    base_seed: int = 1
    workload: Optional[Workload] = None
    max_replicas_per_container: int = 1
    output_dir: str = "out"
    label: Optional[str] = None
    policy_period: float = 15.0

    def __post_init__(self):
        if not isinstance(self.replications, int) or self.replications < 1:
            raise ConfigError(f"replications must be a positive integer, got "
                              f"{self.replications!r}")
        if not self.horizon > 0:
            raise ConfigError(f"horizon must be positive, got {self.horizon}")
        if not 0 <= self.warmup < self.horizon:
            raise ConfigError(f"warmup {self.warmup} must lie in [0, horizon)")
        if not isinstance(self.max_replicas_per_container, int) or \
                self.max_replicas_per_container < 1:
            raise ConfigError("max_replicas_per_container must be a positive integer")
        if isinstance(self.workload, (str, dict)):
            self.workload = Workload.parse(self.workload)

    @property
    def policy_label(self) -> str:
        if self.label:
            return self.label
        if not self.spd:
            return "none"
        return Path(self.spd.removeprefix(BUILTIN_PREFIX)).stem

    @classmethod
    def from_json(cls, path, **overrides) -> "ExperimentSpec":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: experiment spec must be a JSON object")
        data.update({k: v for k, v in overrides.items() if v is not None})
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"{path}: unknown fields {', '.join(sorted(unknown))}")
        if "architecture" not in data:
            raise ConfigError(f"{path}: 'architecture' is required")
        return cls(**data)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["workload"] = None if self.workload is None else vars(self.workload)
        return d


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    results: list  # SimulationResult per replication (None if aborted)
    summaries: list  # MetricSummary per replication (None if aborted)
    failures: list = field(default_factory=list)  # (replication, message)


def load_models(spec: ExperimentSpec):
    """Read and validate the models, then apply the workload override."""
    arch = read_architecture(resolve_path(spec.architecture))
    spd = read_spd(resolve_path(spec.spd)) if spec.spd else None
    if spd is not None:
        diags = validate_spd(spd, arch)
        if diags:
            raise DiagnosticError(diags)
    wl = spec.workload
    if wl is not None:
        think = arch.usage.think_time if wl.think_time is None else (
            Exponential(float(wl.think_time)) if wl.think_time > 0 else Constant(0.0))
        arch = replace(arch, usage=replace(arch.usage, population=wl.population,
                                           think_time=think))
    return arch, spd


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    arch, spd = load_models(spec)
    cfg0 = identify_slingshot(arch, spd, spec.max_replicas_per_container)
    results, summaries, failures = [], [], []
    for i in range(spec.replications):
        try:
            r = run_simulation(arch, spd, cfg0, spec.horizon, spec.base_seed + i,
                               policy_period=spec.policy_period)
        except SimulationError as e:
            results.append(None)
            summaries.append(None)
            failures.append((i, str(e)))
            continue
        results.append(r)
        summaries.append(compute_metrics(r, spec.warmup))
    return ExperimentResult(spec, results, summaries, failures)


# --------------------------------------------------------------------------
# Output files


def _f(x) -> str:
    return repr(float(x))


def _writer(path):
    fh = open(path, "w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def summary_dict(exp: ExperimentResult) -> dict:
    spec = exp.spec
    ok = [s for s in exp.summaries if s is not None]
    metrics = {}
    for name in SUMMARY_METRICS:
        values = [getattr(s, name) for s in ok]
        values = [float(v) for v in values if v is not None]
        if not values:
            metrics[name] = {"defined": False, "n": 0}
            continue
        est = confidence_interval(values)
        entry = {"defined": True, "n": est.n, "mean": est.mean}
        if spec.replications > 1 and est.half_width is not None:
            entry.update(stddev=est.stddev, ci_half_width=est.half_width,
                         ci_low=est.low, ci_high=est.high)
        metrics[name] = entry
    per_rep = []
    for i, s in enumerate(exp.summaries):
        row = {"replication": i, "seed": spec.base_seed + i, "ok": s is not None}
        if s is not None:
            row.update({k: getattr(s, k) for k in SUMMARY_METRICS})
            row["mean_elements"] = s.mean_elements
            row["completed"] = s.completed
        per_rep.append(row)
    return {
        "label": spec.policy_label,
        "workload": None if spec.workload is None else vars(spec.workload),
        "spec": spec.to_dict(),
        "metrics": metrics,
        "kappa_inputs": {k: metrics[k].get("mean") for k in
                         ("mean_rt", "p95_rt", "throughput", "mean_containers")},
        "adaptations": [s.adaptations for s in ok],
        "replications": per_rep,
        "partial": bool(exp.failures),
        "failures": [{"replication": i, "error": msg} for i, msg in exp.failures],
    }


def write_outputs(exp: ExperimentResult, out_dir=None) -> Path:
    out = Path(out_dir or exp.spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    fh, w = _writer(out / "responsetimes.csv")
    with fh:
        w.writerow(["replication", "operation", "completion_time_s", "duration_s"])
        for i, r in enumerate(exp.results):
            if r is None:
                continue
            rows = [(t, op, d) for op, samples in r.response_times.items() for t, d in samples]
            rows.sort(key=lambda x: (x[0], x[1]))
            for t, op, d in rows:
                w.writerow([i, op, _f(t), _f(d)])
    fh, w = _writer(out / "timeline.csv")
    with fh:
        w.writerow(["replication", "target_group", "time_s", "size"])
        for i, r in enumerate(exp.results):
            if r is None:
                continue
            for g, steps in r.size_timeline.items():
                for t, size in steps:
                    w.writerow([i, g, _f(t), size])
    fh, w = _writer(out / "trace.csv")
    with fh:
        w.writerow(["replication", "time_s", "policy", "size_before", "size_after", "outcome"])
        for i, r in enumerate(exp.results):
            if r is None:
                continue
            for rec in r.adaptation_trace:
                w.writerow([i, _f(rec.time), rec.policy, rec.size_before, rec.size_after,
                            rec.outcome_label])
    with open(out / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary_dict(exp), fh, indent=2, sort_keys=False)
        fh.write("\n")
    return out


def read_summary(run_dir) -> dict:
    path = os.path.join(run_dir, "summary.json")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
