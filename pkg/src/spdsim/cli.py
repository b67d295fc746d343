"""Command line: validate, run, compare, render-dot.

Exit codes: 0 success, 1 semantic problem (invalid model, metric mismatch),
2 input/output problem (missing or unreadable file).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .analysis import (DEFAULT_KAPPA_METRICS, LOWER_IS_BETTER, mape, pairwise_comparison_score,
                       pearson, read_ground_truth, relative_absolute_error, speedup)
from .arch_text import load_architecture
from .diagnostics import AnalysisError, ConfigError, DiagnosticError
from .experiment import (ExperimentSpec, read_summary, resolve_path, run_experiment,
                         write_outputs)
from .spd import validate_spd
from .spd_text import export_notation_dot, parse_spd

EXIT_OK, EXIT_SEMANTIC, EXIT_IO = 0, 1, 2
SPEEDUP_METRICS = ("mean_rt", "p95_rt", "throughput")


class _IOFailure(Exception):
    pass


def _read(path: str) -> str:
    try:
        with open(resolve_path(path), encoding="utf-8") as fh:
            return fh.read()
    except (OSError, UnicodeDecodeError) as e:
        raise _IOFailure(f"{path}: {e}") from None


def _emit_diagnostics(diags, fmt):
    if fmt == "json":
        json.dump([d.to_dict() for d in diags], sys.stderr, indent=2)
        sys.stderr.write("\n")
    elif fmt == "csv":
        w = csv.writer(sys.stderr, lineterminator="\n")
        w.writerow(["file", "line", "column", "severity", "code", "message"])
        for d in diags:
            w.writerow([d.span.file, d.span.line, d.span.column, d.severity.value, d.code,
                        d.message])
    else:
        for d in diags:
            print(d, file=sys.stderr)


# --------------------------------------------------------------------------
# validate


def cmd_validate(args) -> int:
    diags, arch, spds = [], None, []
    try:
        for path in args.paths:
            text = _read(path)
            try:
                if path.endswith(".arch"):
                    arch = load_architecture(text, path)
                else:
                    spds.append(parse_spd(text, path))
            except DiagnosticError as e:
                diags.extend(e.diagnostics)
    except _IOFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    if arch is not None:
        for spd in spds:
            diags.extend(validate_spd(spd, arch))
    _emit_diagnostics(diags, args.format)
    return EXIT_SEMANTIC if any(d.severity.value == "error" for d in diags) else EXIT_OK


# --------------------------------------------------------------------------
# run


def _spec_from_args(args) -> ExperimentSpec:
    overrides = {
        "architecture": args.arch, "spd": args.spd, "horizon": args.horizon,
        "warmup": args.warmup, "replications": args.replications, "base_seed": args.seed,
        "max_replicas_per_container": args.max_replicas, "output_dir": args.out,
        "label": args.label,
    }
    if args.workload is not None:
        overrides["workload"] = args.workload
    if args.population is not None:
        overrides["workload"] = {"label": args.workload or f"N{args.population}",
                                 "population": args.population, "think_time": args.think}
    if args.spec:
        return ExperimentSpec.from_json(args.spec, **overrides)
    if args.arch is None:
        raise ConfigError("give an experiment spec file or --arch")
    return ExperimentSpec(**{k: v for k, v in overrides.items() if v is not None})


def cmd_run(args) -> int:
    try:
        spec = _spec_from_args(args)
        if args.no_spd:
            spec.spd = None
        for p in (spec.architecture, spec.spd):
            if p:
                _read(p)
        exp = run_experiment(spec)
    except _IOFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except DiagnosticError as e:
        _emit_diagnostics(e.diagnostics, "text")
        return EXIT_SEMANTIC
    except (ConfigError, ValueError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SEMANTIC
    out = write_outputs(exp)
    ok = sum(s is not None for s in exp.summaries)
    print(f"{spec.policy_label}: {ok}/{spec.replications} replications -> {out}")
    for i, msg in exp.failures:
        print(f"replication {i} aborted: {msg}", file=sys.stderr)
    return EXIT_SEMANTIC if exp.failures else EXIT_OK


# --------------------------------------------------------------------------
# compare


def _workload_label(summary) -> str:
    wl = summary.get("workload")
    return wl["label"] if wl else "default"


def _means(summary) -> dict:
    return {k: v.get("mean") for k, v in summary["metrics"].items()}


def compare_runs(summaries, baseline, ground_truth=None, metrics=DEFAULT_KAPPA_METRICS):
    """Rows of comparison.csv plus optional accuracy rows and aggregate figures.

    ``summaries`` is a list of (run dir, summary dict); ``baseline`` a run dir
    or a policy label, matched per workload.
    """
    by_workload = {}
    for d, s in summaries:
        by_workload.setdefault(_workload_label(s), []).append((d, s))
    rows, accuracy, pairs = [], [], []
    for wl, runs in by_workload.items():
        base = [s for d, s in runs if d == baseline or s["label"] == baseline]
        if not base:
            raise AnalysisError(f"no baseline '{baseline}' for workload '{wl}'")
        base_means = _means(base[0])
        mean_maps = [_means(s) for _, s in runs]
        for m in mean_maps:
            for k in metrics:
                if m.get(k) is None:
                    raise AnalysisError(f"metric '{k}' missing or undefined in a run")
        kappas = pairwise_comparison_score(mean_maps, {k: LOWER_IS_BETTER[k] for k in metrics}) \
            if len(runs) >= 2 else [50.0] * len(runs)
        for (d, s), m, kappa in zip(runs, mean_maps, kappas):
            row = {"run": str(d), "policy": s["label"], "workload": wl}
            row.update({k: m.get(k) for k in metrics})
            for k in SPEEDUP_METRICS:
                row[f"speedup_{k}"] = speedup(base_means[k], m[k], k)
            row["kappa"] = kappa
            rows.append(row)
            if ground_truth is None:
                continue
            for k in SPEEDUP_METRICS:
                gt = ground_truth.get((s["label"], wl, k))
                if gt is not None:
                    accuracy.append({"policy": s["label"], "workload": wl, "metric": k,
                                     "ground_truth": gt, "predicted": m[k],
                                     "rae": relative_absolute_error(gt, m[k])})
                gt_base = ground_truth.get((base[0]["label"], wl, k))
                if gt is not None and gt_base is not None and s is not base[0]:
                    pairs.append((speedup(gt_base, gt, k), row[f"speedup_{k}"]))
    aggregate = None
    if ground_truth is not None:
        aggregate = {"cells": len(accuracy),
                     "mape": mape((a["ground_truth"], a["predicted"]) for a in accuracy)
                     if accuracy else None,
                     "speedup_pairs": len(pairs), "pearson_r": None, "pearson_p": None}
        if len(pairs) >= 3:
            try:
                r, p = pearson([g for g, _ in pairs], [q for _, q in pairs])
                aggregate.update(pearson_r=r, pearson_p=p)
            except AnalysisError:
                pass
    return rows, accuracy, aggregate


def _write_rows(path, rows, header):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in
                        (row[h] for h in header)])


def cmd_compare(args) -> int:
    try:
        summaries = [(d, read_summary(d)) for d in args.runs]
        gt = read_ground_truth(args.ground_truth) if args.ground_truth else None
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (AnalysisError, json.JSONDecodeError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SEMANTIC
    if len(summaries) < 2:
        print("error: compare needs at least two run directories", file=sys.stderr)
        return EXIT_SEMANTIC
    try:
        rows, accuracy, aggregate = compare_runs(summaries, args.baseline, gt)
    except (AnalysisError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SEMANTIC
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = ["run", "policy", "workload", *DEFAULT_KAPPA_METRICS,
              *(f"speedup_{k}" for k in SPEEDUP_METRICS), "kappa"]
    _write_rows(out / "comparison.csv", rows, header)
    if gt is not None:
        _write_rows(out / "accuracy.csv", accuracy,
                    ["policy", "workload", "metric", "ground_truth", "predicted", "rae"])
        with open(out / "comparison.json", "w", encoding="utf-8") as fh:
            json.dump(aggregate, fh, indent=2)
            fh.write("\n")
    if args.format == "json":
        json.dump({"rows": rows, "accuracy": aggregate}, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["policy", "workload", "speedup_mean_rt", "kappa"])
        for r in rows:
            w.writerow([r["policy"], r["workload"], f"{r['speedup_mean_rt']:.3f}",
                        f"{r['kappa']:.1f}"])
    return EXIT_OK


# --------------------------------------------------------------------------
# render-dot


def cmd_render_dot(args) -> int:
    try:
        text = _read(args.spd)
    except _IOFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    try:
        spd = parse_spd(text, args.spd)
    except DiagnosticError as e:
        _emit_diagnostics(e.diagnostics, "text")
        return EXIT_SEMANTIC
    sys.stdout.write(export_notation_dot(spd))
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spdsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check .arch and .spd files")
    v.add_argument("paths", nargs="+")
    v.add_argument("--format", choices=("text", "json", "csv"), default="text")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("run", help="simulate an experiment with replications")
    r.add_argument("spec", nargs="?", help="experiment spec (JSON)")
    r.add_argument("--arch", help="architecture file (rmuc:rmuc.arch for the bundled one)")
    r.add_argument("--spd", help="scaling policy definition; omit for a static run")
    r.add_argument("--no-spd", action="store_true", help="ignore the SPD named in the experiment file")
    r.add_argument("--horizon", type=float)
    r.add_argument("--warmup", type=float)
    r.add_argument("--replications", type=int)
    r.add_argument("--seed", type=int, help="base seed; replication i uses seed + i")
    r.add_argument("--workload", help="bundled workload level, e.g. High")
    r.add_argument("--population", type=int)
    r.add_argument("--think", type=float, help="mean think time in seconds")
    r.add_argument("--max-replicas", type=int, help="replicas per container (top-down)")
    r.add_argument("--label")
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="speedups and kappa across runs, optional accuracy")
    c.add_argument("runs", nargs="+", help="run output directories")
    c.add_argument("--baseline", required=True, help="run directory or policy label")
    c.add_argument("--ground-truth", help="CSV: policy,workload,metric,value,unit")
    c.add_argument("--format", choices=("csv", "json"), default="csv")
    c.add_argument("--out", default="comparison")
    c.set_defaults(func=cmd_compare)

    d = sub.add_parser("render-dot", help="print the SPD in the visual notation as DOT")
    d.add_argument("spd")
    d.set_defaults(func=cmd_render_dot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
