import csv
import json

import pytest

from spdsim.cli import main

from conftest import RUNNING_EXAMPLE

BROKEN_SPD = 'spd "x" {\n  policy "p" { target "a" trigger banana }\n}\n'


def run(argv):
    return main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def example_file(tmp_path):
    p = tmp_path / "example.spd"
    p.write_text(RUNNING_EXAMPLE)
    return p


def test_validate_ok(capsys):
    assert run(["validate", "rmuc:rmuc.arch", "rmuc:d-metrics-ql5-rt1.spd"]) == 0
    assert capsys.readouterr().err == ""


@pytest.mark.parametrize("fmt", ["text", "json", "csv"])
def test_validate_reports_errors(tmp_path, capsys, fmt):
    bad = tmp_path / "bad.spd"
    bad.write_text(BROKEN_SPD)
    assert run(["validate", bad, "--format", fmt]) == 1
    err = capsys.readouterr().err
    if fmt == "json":
        (d,) = json.loads(err)
        assert d["code"] == "SYNTAX_ERROR" and d["line"] == 2
    elif fmt == "csv":
        rows = list(csv.reader(err.splitlines()))
        assert rows[0] == ["file", "line", "column", "severity", "code", "message"]
        assert rows[1][4] == "SYNTAX_ERROR"
    else:
        assert "bad.spd:2:" in err and "SYNTAX_ERROR" in err


def test_validate_cross_references(tmp_path, capsys):
    spd = tmp_path / "wrong.spd"
    spd.write_text(RUNNING_EXAMPLE.replace('"rmuc-node"', '"ghost-node"'))
    assert run(["validate", "rmuc:rmuc.arch", spd]) == 1
    assert "UNRESOLVED_CONTAINER" in capsys.readouterr().err


def test_validate_missing_file(tmp_path, capsys):
    assert run(["validate", tmp_path / "nope.spd"]) == 2


def test_render_dot(example_file, capsys):
    assert run(["render-dot", example_file]) == 0
    out = capsys.readouterr().out
    assert out.startswith('digraph "RMUC"') and "applies to" in out


def test_render_dot_errors(tmp_path):
    bad = tmp_path / "bad.spd"
    bad.write_text(BROKEN_SPD)
    assert run(["render-dot", bad]) == 1
    assert run(["render-dot", tmp_path / "missing.spd"]) == 2


def _run_policy(out, spd=None, workload="High", seed=1, horizon=120):
    argv = ["run", "--arch", "rmuc:rmuc.arch", "--horizon", horizon, "--warmup", 20,
            "--replications", 2, "--seed", seed, "--workload", workload, "--out", out]
    if spd:
        argv += ["--spd", spd]
    return run(argv)


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    assert _run_policy(out, "rmuc:nodebased-40.spd") == 0
    assert read_csv(out / "responsetimes.csv")[0] == ["replication", "operation",
                                                      "completion_time_s", "duration_s"]
    assert read_csv(out / "timeline.csv")[0] == ["replication", "target_group", "time_s", "size"]
    trace = read_csv(out / "trace.csv")
    assert trace[0] == ["replication", "time_s", "policy", "size_before", "size_after",
                        "outcome"]
    assert len(trace) > 1
    summary = json.loads((out / "summary.json").read_text())
    assert summary["label"] == "nodebased-40"
    assert summary["metrics"]["mean_rt"]["n"] == 2
    assert "ci_half_width" in summary["metrics"]["mean_rt"]
    assert "nodebased-40: 2/2" in capsys.readouterr().out


def test_run_outputs_are_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run_policy(a, "rmuc:d-hpa-def.spd") == 0
    assert _run_policy(b, "rmuc:d-hpa-def.spd") == 0
    for name in ("responsetimes.csv", "timeline.csv", "trace.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_run_from_spec_file(tmp_path):
    spec = tmp_path / "exp.json"
    out = tmp_path / "out"
    spec.write_text(json.dumps({"architecture": "rmuc:rmuc.arch", "horizon": 60,
                                "replications": 1, "output_dir": str(out),
                                "workload": {"label": "tiny", "population": 3,
                                             "think_time": 5.0}}))
    assert run(["run", spec]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["label"] == "none" and summary["workload"]["population"] == 3
    assert "ci_half_width" not in summary["metrics"]["mean_rt"]


@pytest.mark.parametrize("extra,code", [(["--warmup", "500"], 1), (["--replications", "0"], 1),
                                        (["--workload", "Gigantic"], 1),
                                        (["--spd", "missing.spd"], 2)])
def test_run_rejects_bad_input(tmp_path, extra, code):
    argv = ["run", "--arch", "rmuc:rmuc.arch", "--horizon", "60", "--out", tmp_path / "o"]
    assert run(argv + extra) == code


def test_run_rejects_invalid_spd(tmp_path, capsys):
    spd = tmp_path / "wrong.spd"
    spd.write_text(RUNNING_EXAMPLE.replace('"rmuc-node"', '"ghost-node"'))
    assert run(["run", "--arch", "rmuc:rmuc.arch", "--spd", spd, "--out", tmp_path / "o"]) == 1
    assert "UNRESOLVED_CONTAINER" in capsys.readouterr().err


def test_compare_with_ground_truth(tmp_path, capsys):
    runs = {}
    for label, spd in (("none", None), ("max", "rmuc:max.spd"),
                       ("nodebased-40", "rmuc:nodebased-40.spd"),
                       ("d-hpa-def", "rmuc:d-hpa-def.spd")):
        runs[label] = tmp_path / label
        assert _run_policy(runs[label], spd) == 0
    gt = tmp_path / "gt.csv"
    rows = [("none", "High", "mean_rt", 0.25), ("max", "High", "mean_rt", 0.09),
            ("nodebased-40", "High", "mean_rt", 0.12), ("d-hpa-def", "High", "mean_rt", 0.15)]
    gt.write_text("policy,workload,metric,value,unit\n" +
                  "".join(f"{p},{w},{m},{v},s\n" for p, w, m, v in rows))
    out = tmp_path / "cmp"
    capsys.readouterr()
    assert run(["compare", *runs.values(), "--baseline", "none", "--ground-truth", gt,
                "--out", out]) == 0
    table = read_csv(out / "comparison.csv")
    assert table[0] == ["run", "policy", "workload", "mean_rt", "p95_rt", "throughput",
                        "mean_containers", "speedup_mean_rt", "speedup_p95_rt",
                        "speedup_throughput", "kappa"]
    by_policy = {r[1]: r for r in table[1:]}
    assert float(by_policy["none"][7]) == 1.0
    assert sum(float(r[10]) for r in table[1:]) == pytest.approx(50.0 * 4)
    acc = read_csv(out / "accuracy.csv")
    assert len(acc) == 5
    agg = json.loads((out / "comparison.json").read_text())
    assert agg["cells"] == 4 and agg["speedup_pairs"] == 3
    assert agg["pearson_r"] is not None and -1 <= agg["pearson_r"] <= 1
    assert "speedup_mean_rt" in capsys.readouterr().out


def test_compare_errors(tmp_path):
    a = tmp_path / "a"
    assert _run_policy(a) == 0
    assert run(["compare", a, "--baseline", "none", "--out", tmp_path / "c"]) == 1
    assert run(["compare", a, tmp_path / "missing", "--baseline", "none"]) == 2
    b = tmp_path / "b"
    assert _run_policy(b, "rmuc:max.spd") == 0
    assert run(["compare", a, b, "--baseline", "ghost", "--out", tmp_path / "c"]) == 1
