import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spdsim import DiagnosticError, export_notation_dot, parse_spd, render_spd
from spdsim.spd import (AbsoluteAdjustment, CooldownConstraint, CpuUtilization,
                        ElasticInfrastructure, ExpectedCount, ExpectedPercentage, ExpectedTime,
                        RelationalOperator, RelativeAdjustment, ScalingPolicy, SimpleFireOnValue,
                        SpdModel, StepAdjustment)
from spdsim.spd_text import TARGET_TRACKING_COOLDOWN


def diag_codes(text):
    with pytest.raises(DiagnosticError) as e:
        parse_spd(text, "in.spd")
    return [d.code for d in e.value.diagnostics], e.value.diagnostics


def test_running_example_parses(running_example):
    spd = running_example
    assert spd.name == "RMUC"
    (ei,) = spd.target_groups
    assert ei.unit_container == "rmuc-node"
    (p,) = spd.policies
    assert p.target == "Elastic RMUC" and p.active
    assert p.trigger.stimulus.window == 60
    assert p.trigger.operator is RelationalOperator.GREATER_THAN
    assert p.adjustment == StepAdjustment(1)
    assert isinstance(p.constraints[0], CooldownConstraint) and p.constraints[0].duration == 180


def test_policy_pair_expands_to_two_policies(rmuc_spd):
    spd = rmuc_spd("d-metrics-ql5-rt0.5")
    names = [p.name for p in spd.policies]
    assert names == ["DProc queue out", "DProc queue in",
                     "DComm response time out", "DComm response time in"]
    qout, qin, rout, rin = spd.policies
    assert qout.trigger.expected == ExpectedCount(6)
    assert qin.trigger.expected == ExpectedCount(4)
    assert rout.trigger.expected == ExpectedTime(0.55)
    assert rin.trigger.expected == ExpectedTime(0.45)
    assert rin.adjustment == StepAdjustment(-1)
    assert qout.constraints[0].duration == TARGET_TRACKING_COOLDOWN


def test_modeled_cooldown_replaces_default(rmuc_spd):
    spd = rmuc_spd("d-metrics-ql5-rt1-cd60")
    assert {c.duration for p in spd.policies for c in p.constraints} == {60}


def test_syntax_error_has_position():
    text = 'spd "x" {\n  policy "p" {\n    target "a"\n    trigger banana\n  }\n}\n'
    codes, diags = diag_codes(text)
    assert codes[0] == "SYNTAX_ERROR"
    assert (diags[0].span.file, diags[0].span.line) == ("in.spd", 4)
    assert diags[0].span.column > 1


def test_lex_error_reported():
    codes, _ = diag_codes('spd "x" { $ }')
    assert "LEX_ERROR" in codes


def test_empty_input():
    codes, _ = diag_codes("   # nothing here\n")
    assert codes == ["EMPTY_SPD"]


def test_unresolved_target():
    codes, _ = diag_codes("""
spd "x" {
  target elastic-infrastructure "ei" { unit container "n" }
  policy "p" { target "nope" trigger fire-on-value elements > 2 adjust step +1 }
}""")
    assert "UNRESOLVED_TARGET" in codes


def test_incompatible_expected_value():
    codes, _ = diag_codes("""
spd "x" {
  target elastic-infrastructure "ei" { unit container "n" }
  policy "p" { target "ei" trigger fire-on-value cpu-utilization > 2s adjust step +1 }
}""")
    assert "INCOMPATIBLE_EXPECTED" in codes


def test_missing_field():
    codes, _ = diag_codes("""
spd "x" {
  target elastic-infrastructure "ei" { unit container "n" }
  policy "p" { target "ei" adjust step +1 }
}""")
    assert codes == ["MISSING_FIELD"]


def test_duplicate_names():
    codes, _ = diag_codes("""
spd "x" {
  target elastic-infrastructure "ei" { unit container "n" }
  target elastic-infrastructure "ei" { unit container "m" }
  policy "p" { target "ei" trigger fire-on-value elements > 2 adjust step +1 }
}""")
    assert "DUPLICATE_NAME" in codes


def test_invalid_interval_constraint():
    codes, _ = diag_codes("""
spd "x" {
  target elastic-infrastructure "ei" { unit container "n" }
  policy "p" { target "ei" trigger fire-on-value elements > 2 adjust step +1
               constraint interval from 10s until 5s }
}""")
    assert "INVALID_CONSTRAINT" in codes


# -- round trip

def test_round_trip_of_bundled_policies(rmuc_spd):
    for name in ("nodebased-40-E", "d-hpa-def", "d-metrics-ql5-rt0.5-cd60", "max"):
        spd = rmuc_spd(name)
        assert parse_spd(render_spd(spd)) == spd


ALL_KINDS = """
spd "Ünïcode \\"quoted\\" ✓" {
  target elastic-infrastructure "nœuds" { unit container "node" constraint size min 2 max 9 }
  target elastic-infrastructure "other" { unit container "node" }
  policy "abs" inactive {
    target "nœuds"
    trigger fire-on-value simulation-time >= 600
    adjust absolute 3
    constraint interval from 1min until 120min
  }
  policy "rel-out" {
    target "nœuds"
    trigger fire-on-value response-time "op" window 45s percentile 99 > 250ms
    adjust relative +50% min +2
    constraint cooldown 90s
  }
  policy "rel-in" {
    target "other"
    trigger fire-on-trend queue-length window 20s decreasing over 4
    adjust relative -30% min -1
  }
  policy "step" {
    target "other"
    trigger fire-on-value elements == 3
    adjust step -2
  }
}
"""


def test_round_trip_covers_every_kind():
    spd = parse_spd(ALL_KINDS)
    kinds = {type(p.adjustment) for p in spd.policies}
    assert kinds == {AbsoluteAdjustment, RelativeAdjustment, StepAdjustment}
    assert not spd.policies[0].active
    assert parse_spd(render_spd(spd)) == spd
    assert render_spd(parse_spd(render_spd(spd))) == render_spd(spd)


names = st.text(st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=12)


@settings(max_examples=60, deadline=None)
@given(names, names, st.integers(-20, 20).filter(bool), st.integers(1, 600))
def test_round_trip_arbitrary_names(spd_name, group, step, cooldown):
    spd = SpdModel(spd_name, (ScalingPolicy(
        "p", group, SimpleFireOnValue(CpuUtilization(), RelationalOperator.GREATER_THAN,
                                      ExpectedPercentage(50)),
        StepAdjustment(step), (CooldownConstraint(float(cooldown)),)),),
        (ElasticInfrastructure(group, "n"),))
    assert parse_spd(render_spd(spd)) == spd


# -- visual notation

def test_dot_of_running_example(running_example):
    dot = export_notation_dot(running_example)
    nodes = re.findall(r"^\s+(\w+) \[label=", dot, re.M)
    edges = re.findall(r"^\s+(\w+) -> (\w+)", dot, re.M)
    constraint_nodes = [n for n in nodes if n.startswith("c")]
    # the size constraint is attached to the target, the cooldown to the policy
    assert len([n for n in nodes if not n.startswith("c")]) == 4
    assert edges == [("p0", "t0")]
    assert re.search(r'\[label="CD=3min", shape=octagon\]', dot) or \
        re.search(r'\[label="CD=180s", shape=octagon\]', dot)
    assert len(constraint_nodes) == 2
    assert "shape=circle, style=dashed" in dot
    assert "shape=square" in dot and "shape=triangle" in dot


def test_dot_cooldown_label_and_absence():
    with_cd = parse_spd("""
spd "x" {
  target elastic-infrastructure "ei" { unit container "n" }
  policy "p" { target "ei" trigger fire-on-value cpu-utilization > 40% adjust step +1
               constraint cooldown 60s }
}""")
    dot = export_notation_dot(with_cd)
    assert dot.count("shape=octagon") == 1
    assert 'label="CD=60s"' in dot or 'label="CD=1min"' in dot
    without = parse_spd("""
spd "x" {
  target elastic-infrastructure "ei" { unit container "n" }
  policy "p" { target "ei" trigger fire-on-value cpu-utilization > 40% adjust step +1 }
}""")
    assert "octagon" not in export_notation_dot(without)


def test_dot_is_deterministic(rmuc_spd):
    spd = rmuc_spd("d-hpa-def")
    assert export_notation_dot(spd) == export_notation_dot(rmuc_spd("d-hpa-def"))
