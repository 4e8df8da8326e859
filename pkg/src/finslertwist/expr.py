"""Small expression language for metric coefficients and twist functions.

Grammar: numbers (decimal or scientific), identifiers /[a-z][a-z0-9]*/,
binary + - * / ^, unary minus, parentheses and single-argument calls
sqrt/exp/ln/sin/cos.  ``^`` binds tightest, then unary minus, then * /,
then + -; equal-precedence binaries associate left.  The exponent of
``^`` must be an integer literal (optionally negated), which keeps every
expression smooth wherever it is defined.

Evaluation is generic over the scalar: plain floats and jets give
identical semantics (and bitwise identical value coefficients).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

from . import jets

FUNCTIONS = ("sqrt", "exp", "ln", "sin", "cos")


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int


_NOSPAN = SourceSpan(0, 0)


@dataclass(frozen=True)
class Const:
    value: float
    span: SourceSpan = field(default=_NOSPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    name: str
    span: SourceSpan = field(default=_NOSPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Unary:
    op: str  # neg | sqrt | exp | ln | sin | cos
    operand: "ExprAst"
    span: SourceSpan = field(default=_NOSPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Binary:
    op: str  # add | sub | mul | div | pow
    left: "ExprAst"
    right: "ExprAst"
    span: SourceSpan = field(default=_NOSPAN, compare=False, repr=False)


ExprAst = Union[Const, Var, Unary, Binary]


class ExprError(ValueError):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{message} at {span.start}..{span.end}")
        self.message = message
        self.span = span


class ExprSyntaxError(ExprError):
    pass


class UnknownVariableError(ExprError):
    def __init__(self, name: str, span: SourceSpan):
        super().__init__(f"unknown variable '{name}'", span)
        self.name = name


class EvalDomainError(ExprError):
    pass


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[a-z][a-z0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number | ident | op | end
    text: str
    span: SourceSpan


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            bad = len(text) - len(stripped)
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", SourceSpan(bad, bad + 1))
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(kind), SourceSpan(m.start(kind), m.end(kind))))
        pos = m.end()
    tokens.append(_Token("end", "", SourceSpan(len(text), len(text))))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], allowed_vars: Iterable[str]):
        self.tokens = tokens
        self.pos = 0
        self.allowed = frozenset(allowed_vars)

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, text: str) -> _Token:
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            raise ExprSyntaxError(f"expected '{text}'", tok.span)
        return self.advance()

    def parse(self) -> ExprAst:
        ast = self.expression()
        tail = self.peek()
        if tail.kind != "end":
            raise ExprSyntaxError(f"unexpected trailing input {tail.text!r}", tail.span)
        return ast

    def expression(self) -> ExprAst:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance()
            rhs = self.term()
            node = Binary("add" if op.text == "+" else "sub", node, rhs, _merge(node, rhs))
        return node

    def term(self) -> ExprAst:
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance()
            rhs = self.unary()
            node = Binary("mul" if op.text == "*" else "div", node, rhs, _merge(node, rhs))
        return node

    def unary(self) -> ExprAst:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            operand = self.unary()
            return Unary("neg", operand, SourceSpan(tok.span.start, operand.span.end))
        return self.power()

    def power(self) -> ExprAst:
        node = self.atom()
        while self.peek().kind == "op" and self.peek().text == "^":
            self.advance()
            exponent = self.int_literal()
            node = Binary("pow", node, exponent, _merge(node, exponent))
        return node

    def int_literal(self) -> Const:
        tok = self.peek()
        sign = 1
        start = tok.span.start
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            sign = -1
            tok = self.peek()
        if tok.kind != "number":
            raise ExprSyntaxError("expected integer exponent", tok.span)
        if not tok.text.isdigit():
            raise ExprSyntaxError(f"non-integer pow exponent {tok.text!r}", tok.span)
        self.advance()
        return Const(float(sign * int(tok.text)), SourceSpan(start, tok.span.end))

    def atom(self) -> ExprAst:
        tok = self.advance()
        if tok.kind == "number":
            return Const(float(tok.text), tok.span)
        if tok.kind == "ident":
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "(":
                if tok.text not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function '{tok.text}'", tok.span)
                self.advance()
                arg = self.expression()
                close = self.expect_op(")")
                return Unary(tok.text, arg, SourceSpan(tok.span.start, close.span.end))
            if tok.text not in self.allowed:
                raise UnknownVariableError(tok.text, tok.span)
            return Var(tok.text, tok.span)
        if tok.kind == "op" and tok.text == "(":
            inner = self.expression()
            self.expect_op(")")
            return inner
        raise ExprSyntaxError(f"unexpected token {tok.text!r}" if tok.text else "unexpected end of input", tok.span)


def _merge(left: ExprAst, right: ExprAst) -> SourceSpan:
    return SourceSpan(left.span.start, right.span.end)


def parse(text: str, allowed_vars: Iterable[str]) -> ExprAst:
    """Parse ``text`` into an AST, rejecting variables outside ``allowed_vars``."""
    if not text.strip():
        raise ExprSyntaxError("empty expression", SourceSpan(0, len(text)))
    return _Parser(_tokenize(text), allowed_vars).parse()


_UNARY_FUNCS = {
    "sqrt": jets.sqrt,
    "exp": jets.exp,
    "ln": jets.ln,
    "sin": jets.sin,
    "cos": jets.cos,
}


def evaluate(ast: ExprAst, bindings: Mapping[str, object]):
    """Evaluate over any scalar algebra providing + - * / and the call set."""
    if isinstance(ast, Const):
        return ast.value
    if isinstance(ast, Var):
        try:
            return bindings[ast.name]
        except KeyError:
            raise UnknownVariableError(ast.name, ast.span) from None
    if isinstance(ast, Unary):
        val = evaluate(ast.operand, bindings)
        if ast.op == "neg":
            return -val
        try:
            return _UNARY_FUNCS[ast.op](val)
        except (ValueError, OverflowError) as exc:
            raise EvalDomainError(str(exc), ast.span) from None
    if isinstance(ast, Binary):
        lhs = evaluate(ast.left, bindings)
        if ast.op == "pow":
            if not isinstance(ast.right, Const) or ast.right.value != int(ast.right.value):
                raise EvalDomainError("pow exponent must be an integer literal", ast.span)
            try:
                return jets.pow_int(lhs, int(ast.right.value))
            except (ValueError, ZeroDivisionError, OverflowError) as exc:
                raise EvalDomainError(str(exc), ast.span) from None
        rhs = evaluate(ast.right, bindings)
        try:
            if ast.op == "add":
                return lhs + rhs
            if ast.op == "sub":
                return lhs - rhs
            if ast.op == "mul":
                return lhs * rhs
            if ast.op == "div":
                return lhs / rhs
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise EvalDomainError(str(exc), ast.span) from None
    raise TypeError(f"not an expression node: {ast!r}")


_PRECEDENCE = {"add": 1, "sub": 1, "mul": 2, "div": 2, "pow": 4}


def to_text(ast: ExprAst) -> str:
    """Pretty-print with minimal parentheses; reparses to an equal AST."""
    return _print(ast, 0)


def _print(ast: ExprAst, parent_prec: int) -> str:
    if isinstance(ast, Const):
        if ast.value < 0:
            return _wrap(f"-{_fmt_number(-ast.value)}", 3, parent_prec)
        return _fmt_number(ast.value)
    if isinstance(ast, Var):
        return ast.name
    if isinstance(ast, Unary):
        if ast.op == "neg":
            return _wrap(f"-{_print(ast.operand, 3)}", 3, parent_prec)
        return f"{ast.op}({_print(ast.operand, 0)})"
    prec = _PRECEDENCE[ast.op]
    if ast.op == "pow":
        exponent = int(ast.right.value)
        base = _print(ast.left, prec + 1)
        return _wrap(f"{base}^{exponent}", prec, parent_prec)
    sym = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[ast.op]
    left = _print(ast.left, prec)
    right = _print(ast.right, prec + 1)  # left-associative: parenthesize equal-prec right
    return _wrap(f"{left}{sym}{right}", prec, parent_prec)


def _wrap(text: str, prec: int, parent_prec: int) -> str:
    return f"({text})" if prec < parent_prec else text


def _fmt_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)
