"""Recursive-descent parser for the formula language.

Grammar::

    formula    := quantified | iff
    quantified := ("exists" | "forall") IDENT ["in" IDENT] "." formula
    iff        := impl ("<->" impl)*            left-associative
    impl       := or ("->" impl)?               right-associative
    or         := and ("|" and)*
    and        := unary ("&" unary)*
    unary      := "!" unary | quantified | atom
    atom       := "(" formula ")" | IDENT "(" IDENT ("," IDENT)* ")"
                | IDENT "=" IDENT | "true" | "false"

``exists y in B. f`` abbreviates ``exists y. (B(y) & f)`` and
``forall y in B. f`` abbreviates ``forall y. (B(y) -> f)``.  A quantifier in
operand position extends as far right as possible.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .syntax import (
    FALSE,
    TRUE,
    And,
    Atom,
    Eq,
    Exists,
    Forall,
    Formula,
    Iff,
    Implies,
    Not,
    Or,
)

KEYWORDS = {"exists", "forall", "true", "false", "in"}

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\n]+)|(?P<op><->|->|[!&|(),.=])|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
)


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Token:
    kind: str  # "op", "ident", "keyword", "eof"
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        if kind == "ws":
            for i, ch in enumerate(value):
                if ch == "\n":
                    line += 1
                    line_start = pos + i + 1
        else:
            if kind == "ident" and value in KEYWORDS:
                kind = "keyword"
            tokens.append(Token(kind, value, line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise FormulaSyntaxError(f"{message}, found {found}", tok.line, tok.column)

    def accept(self, text: str) -> bool:
        if self.tok.kind in ("op", "keyword") and self.tok.text == text:
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            self.error(f"expected {text!r}")

    def ident(self) -> str:
        if self.tok.kind != "ident":
            self.error("expected an identifier")
        name = self.tok.text
        self.pos += 1
        return name

    def parse(self) -> Formula:
        f = self.formula()
        if self.tok.kind != "eof":
            self.error("unexpected token")
        return f

    def formula(self) -> Formula:
        if self.tok.kind == "keyword" and self.tok.text in ("exists", "forall"):
            return self.quantified()
        return self.iff()

    def quantified(self) -> Formula:
        q = self.tok.text
        self.pos += 1
        var = self.ident()
        bound = self.ident() if self.accept("in") else None
        self.expect(".")
        body = self.formula()
        if q == "exists":
            if bound is not None:
                body = And(Atom(bound, (var,)), body)
            return Exists(var, body)
        if bound is not None:
            body = Implies(Atom(bound, (var,)), body)
        return Forall(var, body)

    def iff(self) -> Formula:
        left = self.impl()
        while self.accept("<->"):
            left = Iff(left, self.impl())
        return left

    def impl(self) -> Formula:
        left = self.disjunction()
        if self.accept("->"):
            return Implies(left, self.impl())
        return left

    def disjunction(self) -> Formula:
        parts = [self.conjunction()]
        while self.accept("|"):
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Or(*parts)

    def conjunction(self) -> Formula:
        parts = [self.unary()]
        while self.accept("&"):
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(*parts)

    def unary(self) -> Formula:
        if self.accept("!"):
            return Not(self.unary())
        if self.tok.kind == "keyword" and self.tok.text in ("exists", "forall"):
            return self.quantified()
        return self.atom()

    def atom(self) -> Formula:
        tok = self.tok
        if self.accept("("):
            f = self.formula()
            self.expect(")")
            return f
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return FALSE
        if tok.kind != "ident":
            self.error("expected a formula")
        name = self.ident()
        if self.accept("("):
            args = [self.ident()]
            while self.accept(","):
                args.append(self.ident())
            self.expect(")")
            return Atom(name, args)
        if self.accept("="):
            return Eq(name, self.ident())
        self.error(f"expected '(' or '=' after {name!r}")


def parse_formula(text: str) -> Formula:
    """Parse formula text; raises FormulaSyntaxError with line and column."""
    return _Parser(text).parse()
