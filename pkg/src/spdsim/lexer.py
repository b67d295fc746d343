"""Tokenizer and recursive-descent helpers shared by the ``.spd`` and ``.arch`` readers.

Both languages use keyword blocks::

    keyword "quoted name" { ... }

with ``#`` line comments, numbers carrying optional unit suffixes
(``60s``, ``2min``, ``500ms``, ``40%``) and a handful of operators.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .diagnostics import Diagnostic, SourceSpan

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n\f\v]+)
  | (?P<comment>\#[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<number>[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?(?:ms|min|s|%)?(?![A-Za-z0-9_]))
  | (?P<op>->|>=|<=|==|[{}(),><])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_\-]*)
""", re.VERBOSE)

_UNIT_SCALE = {"ms": 0.001, "s": 1.0, "min": 60.0}


@dataclass(frozen=True)
class Token:
    kind: str  # string | number | op | ident | eof
    text: str
    line: int
    column: int

    @property
    def value(self):
        if self.kind == "string":
            return _unescape(self.text[1:-1])
        return self.text


@dataclass(frozen=True)
class Number:
    """A numeric literal split into magnitude and unit suffix."""

    value: float
    unit: str  # "", "s", "ms", "min", "%"
    text: str
    is_integer: bool
    signed: bool

    @property
    def seconds(self) -> float:
        return self.value * _UNIT_SCALE[self.unit]


def parse_number(text: str) -> Number:
    m = re.fullmatch(r"([+-]?[0-9.eE+-]+?)(ms|min|s|%)?", text)
    body, unit = m.group(1), m.group(2) or ""
    is_int = re.fullmatch(r"[+-]?\d+", body) is not None
    value = int(body) if is_int else float(body)
    return Number(value, unit, text, is_int, body[0] in "+-")


def _unescape(body: str) -> str:
    return re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t"}.get(m.group(1), m.group(1)), body)


def quote(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") \
        .replace("\t", "\\t") + '"'


class LexError(Exception):
    def __init__(self, diagnostic):
        self.diagnostic = diagnostic


def tokenize(text: str, file: str = "<string>") -> list:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            col = pos - line_start + 1
            raise LexError(Diagnostic(
                "LEX_ERROR", f"unexpected character {text[pos]!r}",
                SourceSpan(file, line, col, 1)))
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class ParseAbort(Exception):
    pass


class TokenParser:
    """Cursor over a token list with diagnostics bookkeeping."""

    def __init__(self, text: str, file: str = "<string>"):
        self.file = file
        self.diagnostics = []
        try:
            self.tokens = tokenize(text, file)
        except LexError as e:
            self.diagnostics.append(e.diagnostic)
            self.tokens = [Token("eof", "", 1, 1)]
            self.lex_failed = True
        else:
            self.lex_failed = False
        self.pos = 0

    # -- cursor

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def span(self, tok: Optional[Token] = None) -> SourceSpan:
        tok = tok or self.tok
        return SourceSpan(self.file, tok.line, tok.column, len(tok.text))

    def at(self, *texts) -> bool:
        return self.tok.kind in ("ident", "op") and self.tok.text in texts

    def accept(self, *texts) -> Optional[Token]:
        if self.at(*texts):
            return self.advance()
        return None

    # -- errors

    def error(self, code: str, message: str, tok: Optional[Token] = None, span=None):
        self.diagnostics.append(Diagnostic(code, message, span or self.span(tok)))

    def fail(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        self.error("SYNTAX_ERROR", f"{message}, found {found}", tok)
        raise ParseAbort()

    # -- expectations

    def expect(self, *texts) -> Token:
        if self.at(*texts):
            return self.advance()
        self.fail("expected " + " or ".join(repr(t) for t in texts))

    def expect_string(self, what: str = "a quoted name") -> str:
        if self.tok.kind != "string":
            self.fail(f"expected {what}")
        return self.advance().value

    def expect_ident(self, what: str = "a keyword") -> Token:
        if self.tok.kind != "ident":
            self.fail(f"expected {what}")
        return self.advance()

    def expect_number(self, what: str = "a number", units=("",)) -> Number:
        if self.tok.kind != "number":
            self.fail(f"expected {what}")
        tok = self.tok
        num = parse_number(tok.text)
        if num.unit not in units:
            allowed = ", ".join(repr(u) if u else "no unit" for u in units)
            self.fail(f"expected {what} with {allowed}", tok)
        self.advance()
        return num

    def expect_int(self, what: str = "an integer", signed_ok: bool = False) -> int:
        tok = self.tok
        num = self.expect_number(what)
        if not num.is_integer or (num.signed and not signed_ok):
            self.fail(f"expected {what}", tok)
        return num.value

    def expect_duration(self, what: str = "a duration") -> float:
        return self.expect_number(what, units=("s", "ms", "min")).seconds
