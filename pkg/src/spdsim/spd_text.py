"""Parsing and rendering of the textual SPD syntax, plus a Graphviz export.

Example::

    spd "RMUC" {
      target elastic-infrastructure "Elastic RMUC" {
        unit container "rmuc-node"
        constraint size min 1 max 4
      }
      policy "Scale Out RMUC" active {
        target "Elastic RMUC"
        trigger fire-on-value cpu-utilization window 60s avg > 40%
        adjust step +1
        constraint cooldown 180s
      }
    }

A ``policy-pair`` block is shorthand for a target-tracking scale-out/scale-in
pair and is expanded while parsing::

    policy-pair "DComm RT" {
      target "DComm"
      target-tracking response-time "sendData" window 60s avg 500ms tolerance 10%
    }
"""

from __future__ import annotations

import math

from .diagnostics import DiagnosticError, has_errors
from .lexer import ParseAbort, TokenParser, quote
from .spd import (DEFAULT_TREND_WINDOWS, DEFAULT_WINDOW, AbsoluteAdjustment,
                  CompetingConsumersGroup, CooldownConstraint, CpuUtilization,
                  ElasticInfrastructure, ExpectedCount, ExpectedPercentage, ExpectedTime,
                  IntervalConstraint, NumberOfElements, OperationResponseTime, QueueLength,
                  RelationalOperator, RelativeAdjustment, ScalingPolicy, ServiceGroup,
                  SimpleFireOnTrend, SimpleFireOnValue, SimulationTime, SpdModel,
                  StepAdjustment, TargetGroupSizeConstraint, TrendPattern, check_spd)

#: Cooldown given to both halves of a target-tracking pair unless one is modeled.
TARGET_TRACKING_COOLDOWN = 180.0

_RELOPS = {op.symbol: op for op in RelationalOperator}
_TARGET_KINDS = ("elastic-infrastructure", "service-group", "competing-consumers")


class _SpdParser(TokenParser):

    def parse(self) -> SpdModel:
        if self.lex_failed:
            raise ParseAbort()
        if self.tok.kind == "eof":
            self.error("EMPTY_SPD", "input contains no SPD definition")
            raise ParseAbort()
        start = self.expect("spd")
        name = self.expect_string("the SPD name")
        self.expect("{")
        targets, policies = [], []
        while not self.accept("}"):
            if self.at("target"):
                targets.append(self.target_group())
            elif self.at("policy"):
                policies.append(self.policy())
            elif self.at("policy-pair"):
                policies.extend(self.policy_pair())
            else:
                self.fail("expected 'target', 'policy', 'policy-pair' or '}'")
        if self.tok.kind != "eof":
            self.fail("expected end of input")
        return SpdModel(name, tuple(policies), tuple(targets), span=self.span(start))

    # -- target groups

    def target_group(self):
        start = self.advance()
        kind = self.expect(*_TARGET_KINDS).text
        name = self.expect_string("the target group name")
        self.expect("{")
        fields = {}
        constraints = []
        while not self.accept("}"):
            if self.at("constraint"):
                constraints.append(self.constraint())
            elif self.at("unit"):
                self.once(fields, "unit")
                self.advance()
                wanted = {"elastic-infrastructure": "container", "service-group": "assembly",
                          "competing-consumers": "consumer"}[kind]
                self.expect(wanted)
                fields["unit"] = self.expect_string()
            elif self.at("load-balancer") and kind == "service-group":
                self.once(fields, "load-balancer")
                self.advance()
                fields["load-balancer"] = self.expect_string()
            elif self.at("queue") and kind == "competing-consumers":
                self.once(fields, "queue")
                self.advance()
                fields["queue"] = self.expect_string()
            elif self.at("hosted-on") and kind != "elastic-infrastructure":
                self.once(fields, "hosted-on")
                self.advance()
                fields["hosted-on"] = self.expect_string()
            else:
                self.fail(f"unexpected entry in {kind} block")
        required = {"elastic-infrastructure": ("unit",),
                    "service-group": ("unit", "hosted-on"),
                    "competing-consumers": ("unit", "queue", "hosted-on")}[kind]
        for key in required:
            if key not in fields:
                self.error("MISSING_FIELD", f"{kind} '{name}' lacks '{key}'", start)
                raise ParseAbort()
        span = self.span(start)
        constraints = tuple(constraints)
        if kind == "elastic-infrastructure":
            return ElasticInfrastructure(name, fields["unit"], constraints, span)
        if kind == "service-group":
            return ServiceGroup(name, fields["unit"], fields["hosted-on"],
                                fields.get("load-balancer"), constraints, span)
        return CompetingConsumersGroup(name, fields["unit"], fields["queue"],
                                       fields["hosted-on"], constraints, span)

    def once(self, fields, key):
        if key in fields:
            self.fail(f"duplicate '{key}'")

    # -- policies

    def policy(self):
        start = self.advance()
        name = self.expect_string("the policy name")
        active = True
        if self.accept("inactive"):
            active = False
        else:
            self.accept("active")
        self.expect("{")
        fields = {}
        constraints = []
        while not self.accept("}"):
            if self.at("constraint"):
                constraints.append(self.constraint())
            elif self.at("target"):
                self.once(fields, "target")
                self.advance()
                fields["target"] = self.expect_string("the target group name")
            elif self.at("trigger"):
                self.once(fields, "trigger")
                self.advance()
                fields["trigger"] = self.trigger()
            elif self.at("adjust"):
                self.once(fields, "adjust")
                self.advance()
                fields["adjust"] = self.adjustment()
            else:
                self.fail("expected 'target', 'trigger', 'adjust', 'constraint' or '}'")
        for key in ("target", "trigger", "adjust"):
            if key not in fields:
                self.error("MISSING_FIELD", f"policy '{name}' lacks '{key}'", start)
                raise ParseAbort()
        return ScalingPolicy(name, fields["target"], fields["trigger"], fields["adjust"],
                             tuple(constraints), active, self.span(start))

    def policy_pair(self):
        start = self.advance()
        name = self.expect_string("the policy pair name")
        active = not self.accept("inactive")
        if active:
            self.accept("active")
        self.expect("{")
        target = stim = expected = None
        tolerance = 10
        step = 1
        constraints = []
        while not self.accept("}"):
            if self.at("constraint"):
                constraints.append(self.constraint())
            elif self.accept("target"):
                target = self.expect_string("the target group name")
            elif self.accept("target-tracking"):
                stim = self.stimulus()
                expected = self.expected_value()
                if self.accept("tolerance"):
                    tol = self.expect_number("a tolerance", units=("%",))
                    tolerance = tol.value
            elif self.accept("step"):
                step = self.expect_int("a positive step")
                if step < 1:
                    self.fail("expected a positive step")
            else:
                self.fail("expected 'target', 'target-tracking', 'step', 'constraint' or '}'")
        if target is None or stim is None:
            self.error("MISSING_FIELD", f"policy pair '{name}' needs 'target' and "
                       "'target-tracking'", start)
            raise ParseAbort()
        if not any(isinstance(c, CooldownConstraint) for c in constraints):
            constraints.append(CooldownConstraint(TARGET_TRACKING_COOLDOWN, self.span(start)))
        upper, lower = _tracking_band(expected, tolerance)
        span = self.span(start)
        out = ScalingPolicy(f"{name} out", target,
                            SimpleFireOnValue(stim, RelationalOperator.GREATER_THAN, upper),
                            StepAdjustment(step), tuple(constraints), active, span)
        inward = ScalingPolicy(f"{name} in", target,
                               SimpleFireOnValue(stim, RelationalOperator.LESS_THAN, lower),
                               StepAdjustment(-step), tuple(constraints), active, span)
        return [out, inward]

    # -- triggers

    def trigger(self):
        if self.accept("fire-on-value"):
            stim = self.stimulus()
            if not (self.tok.kind == "op" and self.tok.text in _RELOPS):
                self.fail("expected a relational operator")
            op = _RELOPS[self.advance().text]
            return SimpleFireOnValue(stim, op, self.expected_value())
        if self.accept("fire-on-trend"):
            stim = self.stimulus()
            trend = TrendPattern(self.expect("increasing", "decreasing").text)
            count = DEFAULT_TREND_WINDOWS
            if self.accept("over"):
                count = self.expect_int("a window count")
            return SimpleFireOnTrend(stim, trend, count)
        self.fail("expected 'fire-on-value' or 'fire-on-trend'")

    def stimulus(self):
        kw = self.expect_ident("a stimulus")
        if kw.text in ("elements", "simulation-time"):
            return NumberOfElements() if kw.text == "elements" else SimulationTime()
        if kw.text not in ("cpu-utilization", "queue-length", "response-time"):
            self.fail("expected a stimulus", kw)
        operation = None
        if kw.text == "response-time" and self.tok.kind == "string":
            operation = self.advance().value
        window = DEFAULT_WINDOW
        if self.accept("window"):
            window = self.expect_duration("a window length")
        percentile = None
        if self.accept("avg"):
            pass
        elif kw.text == "response-time" and self.accept("percentile"):
            percentile = self.expect_number("a percentile").value
        if kw.text == "cpu-utilization":
            return CpuUtilization(window)
        if kw.text == "queue-length":
            return QueueLength(window)
        return OperationResponseTime(window, operation, percentile)

    def expected_value(self):
        tok = self.tok
        num = self.expect_number("an expected value", units=("%", "s", "ms", "min", ""))
        if num.unit == "%":
            return ExpectedPercentage(num.value)
        if num.unit:
            return ExpectedTime(num.seconds)
        if not num.is_integer or num.signed:
            self.fail("expected a non-negative integer count", tok)
        return ExpectedCount(num.value)

    # -- adjustments and constraints

    def adjustment(self):
        kw = self.expect("step", "relative", "absolute").text
        if kw == "step":
            return StepAdjustment(self.expect_int("a step value", signed_ok=True))
        if kw == "absolute":
            return AbsoluteAdjustment(self.expect_int("a goal value"))
        tok = self.tok
        pct = self.expect_number("a percentage growth", units=("%",))
        if not pct.is_integer:
            self.fail("expected an integer percentage", tok)
        self.expect("min")
        return RelativeAdjustment(pct.value, self.expect_int("a minimum adjustment",
                                                             signed_ok=True))

    def constraint(self):
        start = self.advance()
        span = self.span(start)
        kw = self.expect("cooldown", "interval", "size").text
        if kw == "cooldown":
            return CooldownConstraint(self.expect_duration("a cooldown"), span)
        if kw == "interval":
            self.expect("from")
            lo = self.expect_duration("a start time")
            self.expect("until")
            return IntervalConstraint(lo, self.expect_duration("an end time"), span)
        lo, hi = 1, None
        if self.accept("min"):
            lo = self.expect_int("a minimum size")
        if self.accept("max"):
            hi = self.expect_int("a maximum size")
        return TargetGroupSizeConstraint(lo, hi, span)


def _tracking_band(expected, tolerance):
    frac = tolerance / 100.0
    if isinstance(expected, ExpectedCount):
        return (ExpectedCount(math.ceil(expected.value * (1 + frac) - 1e-9)),
                ExpectedCount(max(0, math.floor(expected.value * (1 - frac) + 1e-9))))
    if isinstance(expected, ExpectedTime):
        return (ExpectedTime(round(expected.seconds * (1 + frac), 12)),
                ExpectedTime(round(expected.seconds * (1 - frac), 12)))
    return (ExpectedPercentage(round(expected.value * (1 + frac), 12)),
            ExpectedPercentage(round(expected.value * (1 - frac), 12)))


def parse_spd(text: str, file: str = "<string>") -> SpdModel:
    """Parse SPD text into a model.

    Raises DiagnosticError carrying positioned diagnostics when the text is
    malformed or the model it describes is invalid.
    """
    parser = _SpdParser(text, file)
    try:
        model = parser.parse()
    except ParseAbort:
        raise DiagnosticError(parser.diagnostics) from None
    diags = parser.diagnostics + check_spd(model)
    if has_errors(diags):
        raise DiagnosticError(diags)
    return model


def read_spd(path) -> SpdModel:
    with open(path, encoding="utf-8") as fh:
        return parse_spd(fh.read(), str(path))


# --------------------------------------------------------------------------
# Rendering


def _num(v) -> str:
    if isinstance(v, float) and v.is_integer():
        v = int(v)
    return repr(v) if isinstance(v, float) else str(v)


def _dur(seconds: float) -> str:
    return _num(seconds) + "s"


def _signed(v: int) -> str:
    return f"+{v}" if v > 0 else str(v)


def _render_stimulus(stim) -> str:
    if isinstance(stim, (NumberOfElements, SimulationTime)):
        return stim.keyword
    parts = [stim.keyword]
    if isinstance(stim, OperationResponseTime) and stim.operation is not None:
        parts.append(quote(stim.operation))
    parts += ["window", _dur(stim.window)]
    if isinstance(stim, OperationResponseTime) and stim.percentile is not None:
        parts += ["percentile", _num(stim.percentile)]
    else:
        parts.append("avg")
    return " ".join(parts)


def _render_expected(expected) -> str:
    if isinstance(expected, ExpectedPercentage):
        return _num(expected.value) + "%"
    if isinstance(expected, ExpectedTime):
        return _dur(expected.seconds)
    return str(expected.value)


def _render_trigger(trigger) -> str:
    if isinstance(trigger, SimpleFireOnValue):
        return (f"fire-on-value {_render_stimulus(trigger.stimulus)} "
                f"{trigger.operator.symbol} {_render_expected(trigger.expected)}")
    return (f"fire-on-trend {_render_stimulus(trigger.stimulus)} {trigger.trend.value} "
            f"over {trigger.window_count}")


def _render_adjustment(adj) -> str:
    if isinstance(adj, StepAdjustment):
        return f"step {_signed(adj.step_value)}"
    if isinstance(adj, AbsoluteAdjustment):
        return f"absolute {adj.goal_value}"
    return f"relative {_signed(adj.percentage_growth)}% min {_signed(adj.min_adjustment)}"


def _render_constraint(c) -> str:
    if isinstance(c, CooldownConstraint):
        return f"constraint cooldown {_dur(c.duration)}"
    if isinstance(c, IntervalConstraint):
        return f"constraint interval from {_dur(c.active_from)} until {_dur(c.active_until)}"
    text = f"constraint size min {c.min_elements}"
    if c.max_elements is not None:
        text += f" max {c.max_elements}"
    return text


def render_spd(spd: SpdModel) -> str:
    out = [f"spd {quote(spd.name)} {{"]
    for tg in spd.target_groups:
        out.append(f"  target {tg.kind} {quote(tg.name)} {{")
        if isinstance(tg, ElasticInfrastructure):
            out.append(f"    unit container {quote(tg.unit_container)}")
        elif isinstance(tg, ServiceGroup):
            out.append(f"    unit assembly {quote(tg.unit_assembly)}")
            if tg.load_balancer is not None:
                out.append(f"    load-balancer {quote(tg.load_balancer)}")
            out.append(f"    hosted-on {quote(tg.hosting_infrastructure)}")
        else:
            out.append(f"    unit consumer {quote(tg.unit_consumer)}")
            out.append(f"    queue {quote(tg.queue)}")
            out.append(f"    hosted-on {quote(tg.hosting_infrastructure)}")
        out += [f"    {_render_constraint(c)}" for c in tg.constraints]
        out.append("  }")
    for p in spd.policies:
        out.append(f"  policy {quote(p.name)} {'active' if p.active else 'inactive'} {{")
        out.append(f"    target {quote(p.target)}")
        out.append(f"    trigger {_render_trigger(p.trigger)}")
        out.append(f"    adjust {_render_adjustment(p.adjustment)}")
        out += [f"    {_render_constraint(c)}" for c in p.constraints]
        out.append("  }")
    out.append("}")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# Graphviz notation

_STIM_LABEL = {
    CpuUtilization: "cpuUtil",
    QueueLength: "queueLength",
    OperationResponseTime: "rt",
    NumberOfElements: "elements",
    SimulationTime: "simTime",
}


def _label_time(seconds: float) -> str:
    if seconds < 1:
        return _num(round(seconds * 1000, 9)) + "ms"
    return _dur(seconds)


def stimulus_label(stim) -> str:
    label = _STIM_LABEL[type(stim)]
    if isinstance(stim, OperationResponseTime):
        if stim.operation is not None:
            label += f"({stim.operation})"
        if stim.percentile is not None:
            label = f"p{_num(stim.percentile)} {label}"
    window = getattr(stim, "window", None)
    if window is not None and window != DEFAULT_WINDOW:
        label += f"[{_label_time(window)}]"
    return label


def trigger_label(trigger) -> str:
    stim = stimulus_label(trigger.stimulus)
    if isinstance(trigger, SimpleFireOnTrend):
        return f"{stim} {trigger.trend.value} x{trigger.window_count}"
    exp = trigger.expected
    if isinstance(exp, ExpectedPercentage):
        value = _num(exp.value) + "%"
    elif isinstance(exp, ExpectedTime):
        value = _label_time(exp.seconds)
    else:
        value = str(exp.value)
    return f"{stim} {trigger.operator.symbol} {value}"


def adjustment_label(adj) -> str:
    if isinstance(adj, StepAdjustment):
        return _signed(adj.step_value)
    if isinstance(adj, AbsoluteAdjustment):
        return f"={adj.goal_value}"
    return f"{_signed(adj.percentage_growth)}% min {_signed(adj.min_adjustment)}"


def constraint_label(c) -> str:
    if isinstance(c, CooldownConstraint):
        return f"CD={_label_time(c.duration)}"
    if isinstance(c, IntervalConstraint):
        return f"[{_dur(c.active_from)},{_dur(c.active_until)}]"
    if c.max_elements is None:
        return f"min={c.min_elements}"
    return f"size={c.min_elements}..{c.max_elements}"


def _dot_str(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def export_notation_dot(spd: SpdModel) -> str:
    """Graphviz rendering of the SPD visual notation.

    Node ids are ``t<i>`` for targets, ``p<i>``/``tr<i>``/``adj<i>`` for
    policies with their trigger and adjustment and ``c<i>`` for constraints
    (target constraints first, then policy constraints, in declaration
    order). Containment is conveyed by clusters; the only edges are the
    policy-to-target "applies to" arrows.
    """
    lines = [f"digraph {_dot_str(spd.name)} {{", "  rankdir=LR;",
             '  node [fontname="Helvetica"];']
    constraint_ids = iter(range(10 ** 9))
    target_ids = {}
    for i, tg in enumerate(spd.target_groups):
        target_ids[tg.name] = f"t{i}"
        lines.append(f"  subgraph cluster_t{i} {{")
        lines.append("    style=invis;")
        lines.append(f"    t{i} [label={_dot_str(tg.name)}, shape=circle, style=dashed];")
        for c in tg.constraints:
            lines.append(f"    c{next(constraint_ids)} [label={_dot_str(constraint_label(c))}, "
                         "shape=octagon];")
        lines.append("  }")
    edges = []
    for i, p in enumerate(spd.policies):
        lines.append(f"  subgraph cluster_p{i} {{")
        lines.append("    style=invis;")
        for c in p.constraints:
            lines.append(f"    c{next(constraint_ids)} [label={_dot_str(constraint_label(c))}, "
                         "shape=octagon];")
        lines.append(f"    tr{i} [label={_dot_str(trigger_label(p.trigger))}, shape=square];")
        style = "" if p.active else ", style=dotted"
        lines.append(f"    p{i} [label={_dot_str(p.name)}, shape=box{style}];")
        lines.append(f"    adj{i} [label={_dot_str(adjustment_label(p.adjustment))}, "
                     "shape=triangle];")
        lines.append("  }")
        if p.target in target_ids:
            edges.append(f'  p{i} -> {target_ids[p.target]} [label="applies to"];')
    lines += edges
    lines.append("}")
    return "\n".join(lines) + "\n"
