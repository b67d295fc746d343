"""Reader for ``.arch`` architecture files.

::

    architecture "Demo" {
      container "node" rate 1000 scheduling ps
      component "Worker" {
        operation "run" {
          cpu exp(50)
          call "store" "put"
        }
      }
      component "Store" { operation "put" { cpu 10 } }
      assembly "worker" component "Worker" { wire "store" -> "db" }
      assembly "db" component "Store"
      allocate "worker" -> "node"
      allocate "db" -> "node"
      usage {
        population 10
        think exp(10s)
        scenario { 1.0 call "worker" "run" }
      }
    }
"""

from __future__ import annotations

from .arch import (ArchitectureModel, Assembly, AsyncSend, Branch, BrokerQueue, Component,
                   Constant, Exponential, ExternalCall, InternalAction, ResourceContainerSpec,
                   SystemCall, Uniform, UsageModel, validate_architecture)
from .diagnostics import DiagnosticError, has_errors
from .lexer import ParseAbort, TokenParser

_TIME_UNITS = ("", "s", "ms", "min")


class _ArchParser(TokenParser):

    def parse(self) -> ArchitectureModel:
        if self.lex_failed:
            raise ParseAbort()
        if self.tok.kind == "eof":
            self.error("EMPTY_ARCHITECTURE", "input contains no architecture definition")
            raise ParseAbort()
        start = self.expect("architecture")
        name = self.expect_string("the architecture name")
        self.expect("{")
        components, assemblies, containers, allocation, queues = [], [], [], [], []
        usage = None
        while not self.accept("}"):
            if self.at("container"):
                containers.append(self.container())
            elif self.at("component"):
                components.append(self.component())
            elif self.at("assembly"):
                assemblies.append(self.assembly())
            elif self.accept("allocate"):
                asm = self.expect_string("an assembly name")
                self.expect("->")
                allocation.append((asm, self.expect_string("a container name")))
            elif self.at("queue"):
                queues.append(self.queue())
            elif self.at("usage"):
                if usage is not None:
                    self.fail("duplicate 'usage'")
                usage = self.usage()
            else:
                self.fail("expected 'container', 'component', 'assembly', 'allocate', "
                          "'queue', 'usage' or '}'")
        if self.tok.kind != "eof":
            self.fail("expected end of input")
        return ArchitectureModel(name, tuple(components), tuple(assemblies), tuple(containers),
                                 tuple(allocation), usage, tuple(queues), self.span(start))

    def container(self):
        start = self.advance()
        name = self.expect_string("a container name")
        self.expect("rate")
        rate = self.expect_number("a processing rate").value
        scheduling = "ps"
        if self.accept("scheduling"):
            scheduling = self.expect("ps", "fcfs").text
        return ResourceContainerSpec(name, rate, scheduling, self.span(start))

    def queue(self):
        start = self.advance()
        name = self.expect_string("a queue name")
        self.expect("consumer")
        consumer = self.expect_string("the consuming assembly")
        self.expect("operation")
        op = self.expect_string("the consumer operation")
        return BrokerQueue(name, consumer, op, self.span(start))

    def component(self):
        start = self.advance()
        name = self.expect_string("a component name")
        self.expect("{")
        ops = {}
        while not self.accept("}"):
            tok = self.expect("operation")
            op = self.expect_string("an operation name")
            if op in ops:
                self.error("DUPLICATE_NAME", f"operation '{op}' declared twice in '{name}'", tok)
            ops[op] = self.actions()
        return Component(name, ops, self.span(start))

    def actions(self):
        self.expect("{")
        actions = []
        while not self.accept("}"):
            start = self.tok
            if self.accept("cpu"):
                actions.append(InternalAction(self.expression(), "cpu", self.span(start)))
            elif self.accept("call"):
                role = self.expect_string("a required role")
                op = self.expect_string("an operation name")
                actions.append(ExternalCall(role, op, self.span(start)))
            elif self.accept("send"):
                actions.append(AsyncSend(self.expect_string("a queue name"), self.span(start)))
            elif self.accept("branch"):
                self.expect("{")
                cases = []
                while not self.accept("}"):
                    prob = self.expect_number("a branch probability").value
                    cases.append((prob, self.actions()))
                actions.append(Branch(tuple(cases), self.span(start)))
            else:
                self.fail("expected 'cpu', 'call', 'send', 'branch' or '}'")
        return tuple(actions)

    def expression(self, units=("",)):
        if self.tok.kind == "number":
            return Constant(self._value(units))
        kw = self.expect("const", "exp", "uniform").text
        self.expect("(")
        first = self._value(units)
        if kw == "uniform":
            self.expect(",")
            second = self._value(units)
            self.expect(")")
            return Uniform(first, second)
        self.expect(")")
        return Constant(first) if kw == "const" else Exponential(first)

    def _value(self, units):
        num = self.expect_number("a number", units=units)
        return num.seconds if num.unit else num.value

    def assembly(self):
        start = self.advance()
        name = self.expect_string("an assembly name")
        self.expect("component")
        comp = self.expect_string("a component name")
        wiring = {}
        if self.accept("{"):
            while not self.accept("}"):
                self.expect("wire")
                role = self.expect_string("a role name")
                self.expect("->")
                wiring[role] = self.expect_string("an assembly name")
        return Assembly(name, comp, wiring, self.span(start))

    def usage(self):
        start = self.advance()
        self.expect("{")
        population = think = None
        scenario = []
        while not self.accept("}"):
            if self.accept("population"):
                population = self.expect_int("a population")
            elif self.accept("think"):
                think = self.expression(_TIME_UNITS)
            elif self.accept("scenario"):
                self.expect("{")
                while not self.accept("}"):
                    prob = self.expect_number("a scenario probability").value
                    self.expect("call")
                    asm = self.expect_string("an assembly name")
                    op = self.expect_string("an operation name")
                    scenario.append((prob, SystemCall(asm, op)))
            else:
                self.fail("expected 'population', 'think', 'scenario' or '}'")
        if population is None or think is None:
            self.error("MISSING_FIELD", "usage needs 'population' and 'think'", start)
            raise ParseAbort()
        return UsageModel(population, think, tuple(scenario), self.span(start))


def load_architecture(text: str, file: str = "<string>") -> ArchitectureModel:
    """Parse and validate architecture text.

    Raises DiagnosticError when the text is malformed or the model it
    describes fails :func:`validate_architecture`.
    """
    parser = _ArchParser(text, file)
    try:
        model = parser.parse()
    except ParseAbort:
        raise DiagnosticError(parser.diagnostics) from None
    diags = parser.diagnostics + validate_architecture(model)
    if has_errors(diags):
        raise DiagnosticError(diags)
    return model


def read_architecture(path) -> ArchitectureModel:
    with open(path, encoding="utf-8") as fh:
        return load_architecture(fh.read(), str(path))
