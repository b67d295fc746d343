import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from spdsim import ValidationError, apply_adjustment, parse_spd, validate_spd
from spdsim.spd import (AbsoluteAdjustment, CpuUtilization, ElasticInfrastructure,
                        ExpectedPercentage, RelationalOperator, RelativeAdjustment,
                        ScalingPolicy, ServiceGroup, SimpleFireOnValue, SpdModel, StepAdjustment,
                        check_spd)


def codes(diags):
    return {d.code for d in diags}


# -- applyAdjustment examples

def test_absolute_goal_replaces_size():
    assert apply_adjustment(AbsoluteAdjustment(5), 10) == 5


def test_step_is_clamped_at_one():
    assert apply_adjustment(StepAdjustment(-5), 1) == 1


def test_relative_growth_rounds_up():
    assert apply_adjustment(RelativeAdjustment(25, 1), 10) == 13


def test_relative_shrink_rounds_down():
    assert apply_adjustment(RelativeAdjustment(-25, -1), 10) == 8


@pytest.mark.parametrize("adj", [AbsoluteAdjustment(0), RelativeAdjustment(25, -1),
                                 RelativeAdjustment(-25, 1), RelativeAdjustment(0, 1),
                                 StepAdjustment(0)])
def test_malformed_adjustments_raise(adj):
    with pytest.raises(ValidationError) as e:
        apply_adjustment(adj, 3)
    assert e.value.code == "INVALID_ADJUSTMENT"


def test_size_below_one_raises():
    with pytest.raises(ValidationError) as e:
        apply_adjustment(StepAdjustment(1), 0)
    assert e.value.code == "INVALID_SIZE"


# -- oracle grid and properties

def adjustment_grid():
    for n in range(1, 51):
        for s in range(-10, 11):
            if s:
                yield StepAdjustment(s), n, oracles.step(n, s)
        for p in range(-200, 201, 25):
            if not p:
                continue
            for m in range(-5, 6):
                if m and (m > 0) == (p > 0):
                    yield RelativeAdjustment(p, m), n, oracles.relative(n, p, m)
        for goal in (1, 7, 50):
            yield AbsoluteAdjustment(goal), n, oracles.absolute(n, goal)


def test_oracle_grid_agrees_exactly():
    cases = list(adjustment_grid())
    assert len(cases) >= 4000
    bad = [(a, n, want) for a, n, want in cases if apply_adjustment(a, n) != want]
    assert bad == []


valid_relative = st.integers(1, 400).flatmap(
    lambda p: st.tuples(st.sampled_from([p, -p]), st.integers(1, 20))).map(
    lambda t: RelativeAdjustment(t[0], t[1] if t[0] > 0 else -t[1]))
any_adjustment = st.one_of(
    st.integers(1, 100).map(AbsoluteAdjustment),
    st.integers(-50, 50).filter(bool).map(StepAdjustment),
    valid_relative)


@given(any_adjustment, st.integers(1, 10_000))
def test_result_is_at_least_one(adj, n):
    assert apply_adjustment(adj, n) >= 1


@given(st.integers(1, 100), st.integers(1, 10_000))
def test_positive_step_translates(s, n):
    assert apply_adjustment(StepAdjustment(s), n) == n + s


@given(st.integers(1, 400), st.integers(1, 20), st.integers(1, 5000))
def test_relative_growth_is_monotone_and_strict(p, m, n):
    adj = RelativeAdjustment(p, m)
    here, nxt = apply_adjustment(adj, n), apply_adjustment(adj, n + 1)
    assert here > n
    assert nxt >= here


# -- validation

def _policy(name, target):
    trig = SimpleFireOnValue(CpuUtilization(), RelationalOperator.GREATER_THAN,
                             ExpectedPercentage(40))
    return ScalingPolicy(name, target, trig, StepAdjustment(1))


def test_running_example_is_valid(running_example, rmuc_arch):
    assert validate_spd(running_example, rmuc_arch) == []


def test_mixed_target_kinds_are_rejected():
    spd = SpdModel("mixed", (_policy("a", "ei"), _policy("b", "sg")),
                   (ElasticInfrastructure("ei", "rmuc-node"),
                    ServiceGroup("sg", "DeviceCommunication", "ei")))
    assert "MIXED_TARGET_KINDS" in codes(check_spd(spd))


def test_spd_without_policies_is_rejected():
    spd = SpdModel("empty", (), (ElasticInfrastructure("ei", "rmuc-node"),))
    assert codes(check_spd(spd)) == {"EMPTY_SPD"}


def test_equal_to_uses_absolute_tolerance():
    eq = RelationalOperator.EQUAL_TO
    assert eq.holds(0.5, 0.5 + 5e-10)
    assert not eq.holds(0.5, 0.5 + 1e-8)


ARCH_REFS = """
spd "refs" {{
  target elastic-infrastructure "ei" {{ unit container "{container}" }}
  target service-group "sg" {{ unit assembly "{assembly}" hosted-on "ei" }}
  target competing-consumers "cc" {{ unit consumer "DataProcessing" queue "{queue}" hosted-on "ei" }}
  policy "p" {{
    target "sg"
    trigger fire-on-value response-time "{op}" window 30s avg > 1s
    adjust step +1
  }}
}}
"""


@pytest.mark.parametrize("field,value,code", [
    ("container", "nowhere", "UNRESOLVED_CONTAINER"),
    ("assembly", "Ghost", "UNRESOLVED_ASSEMBLY"),
    ("assembly", "Database", "HOST_MISMATCH"),
    ("queue", "missing", "UNRESOLVED_QUEUE"),
    ("op", "noSuchOp", "UNRESOLVED_OPERATION"),
])
def test_architecture_references_resolve(rmuc_arch, field, value, code):
    params = {"container": "rmuc-node", "assembly": "DeviceCommunication",
              "queue": "measurements", "op": "sendData"}
    assert validate_spd(parse_spd(ARCH_REFS.format(**params)), rmuc_arch) == []
    params[field] = value
    assert code in codes(validate_spd(parse_spd(ARCH_REFS.format(**params)), rmuc_arch))


def test_shipped_policies_validate(rmuc_arch, rmuc_spd):
    names = ["nodebased-40", "nodebased-60", "nodebased-40-E", "nodebased-60-E", "d-hpa-def",
             "d-hpa-def-60", "d-metrics-ql5-rt0.5", "d-metrics-ql5-rt1",
             "d-metrics-ql5-rt0.5-cd60", "d-metrics-ql5-rt1-cd60", "max"]
    for name in names:
        spd = rmuc_spd(name)
        assert validate_spd(spd, rmuc_arch) == [], name
    semantics = {n: rmuc_spd(n).semantics for n in names}
    assert {semantics[n] for n in names[:4]} == {"bottom-up"}
    assert {semantics[n] for n in names[4:10]} == {"top-down"}


def test_constraint_metadata():
    from spdsim.spd import CooldownConstraint, IntervalConstraint, TargetGroupSizeConstraint
    kinds = [(c.type, c.behavior) for c in
             (CooldownConstraint(1), IntervalConstraint(0, 1), TargetGroupSizeConstraint())]
    assert kinds == [("temporal", "prohibiting"), ("temporal", "prohibiting"),
                     ("state", "altering")]

