"""Text format for expressions: a recursive-descent parser and a printer.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | power
    power  := atom ('^' factor)?
    atom   := number | 'x' | ident primes? '(' expr ')' | ident primes? | '(' expr ')'

Numbers are exact (integers, or decimals converted exactly). Identifiers bound
in ``constants`` become rational constants; the builtins take one argument;
any other identifier is an uninterpreted function of ``x`` whose trailing
primes count formal derivatives. Juxtaposition is not multiplication.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .errors import ForgeError
from .expr import (
    BUILTINS,
    VARIABLE,
    Add,
    Const,
    Expr,
    Func,
    Mul,
    Pow,
    Quotient,
    Sym,
    Var,
    X,
    add,
    as_expr,
    div,
    func,
    mul,
    neg,
    power,
    sub,
)

MAX_DEPTH = 200


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError("span start exceeds end")


class ParseDiagnostic(ForgeError, ValueError):
    """A parse failure with the byte span it concerns."""

    def __init__(self, message: str, span: SourceSpan, expected: str | None = None):
        super().__init__(message)
        self.message = message
        self.span = span
        self.expected = expected

    def __str__(self) -> str:
        hint = f" (expected {self.expected})" if self.expected else ""
        return f"{self.message} at {self.span.start}..{self.span.end}{hint}"


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "op", "end"
    text: str
    span: SourceSpan


_OPS = b"+-*/^()'"


def tokenize(data: bytes) -> list[Token]:
    out: list[Token] = []
    i, n = 0, len(data)
    while i < n:
        c = data[i]
        if c in b" \t\r\n":
            i += 1
            continue
        if 48 <= c <= 57 or c == 46:  # digit or '.'
            j = i
            while j < n and 48 <= data[j] <= 57:
                j += 1
            if j < n and data[j] == 46:
                j += 1
                while j < n and 48 <= data[j] <= 57:
                    j += 1
            text = data[i:j].decode("ascii")
            if text == ".":
                raise ParseDiagnostic("unknown token '.'", SourceSpan(i, j))
            out.append(Token("num", text, SourceSpan(i, j)))
            i = j
            continue
        if c == 95 or 65 <= c <= 90 or 97 <= c <= 122:
            j = i
            while j < n and (data[j] == 95 or 48 <= data[j] <= 57 or 65 <= data[j] <= 90 or 97 <= data[j] <= 122):
                j += 1
            out.append(Token("ident", data[i:j].decode("ascii"), SourceSpan(i, j)))
            i = j
            continue
        if c in _OPS:
            out.append(Token("op", chr(c), SourceSpan(i, i + 1)))
            i += 1
            continue
        shown = chr(c) if 32 <= c < 127 else f"\\x{c:02x}"
        raise ParseDiagnostic(f"unknown token {shown!r}", SourceSpan(i, i + 1))
    out.append(Token("end", "", SourceSpan(n, n)))
    return out


class _Parser:
    def __init__(self, tokens: list[Token], constants: Mapping[str, Fraction]):
        self.toks = tokens
        self.pos = 0
        self.constants = constants
        self.depth = 0
        self.open_parens: list[Token] = []

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def advance(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def fail(self, message: str, expected: str | None = None, tok: Token | None = None):
        tok = tok or self.tok
        raise ParseDiagnostic(message, tok.span, expected)

    def enter(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            self.fail("expression nested too deeply")

    def open(self) -> Token:
        t = self.advance()
        self.open_parens.append(t)
        return t

    def expect_close(self, opener: Token):
        if self.at(")"):
            self.advance()
            self.open_parens.pop()
            return
        if self.tok.kind == "end":
            self.fail("unbalanced parenthesis", "')'")
        self.fail(f"unexpected {self.tok.text!r}", "')'")

    def expr(self) -> Expr:
        self.enter()
        left = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            right = self.term()
            left = add(left, right) if op == "+" else sub(left, right)
        self.depth -= 1
        return left

    def term(self) -> Expr:
        left = self.factor()
        while self.at("*") or self.at("/"):
            op = self.advance()
            right = self.factor()
            if op.text == "*":
                left = mul(left, right)
            else:
                try:
                    left = div(left, right)
                except ZeroDivisionError:
                    self.fail("division by zero", tok=op)
        return left

    def factor(self) -> Expr:
        self.enter()
        if self.at("-"):
            self.advance()
            out = neg(self.factor())
        else:
            out = self.power()
        self.depth -= 1
        return out

    def power(self) -> Expr:
        base = self.atom()
        if self.at("^"):
            op = self.advance()
            exponent = self.factor()
            try:
                return power(base, exponent)
            except ZeroDivisionError:
                self.fail("zero raised to a negative power", tok=op)
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Const(Fraction(t.text))
        if t.kind == "ident":
            return self.ident()
        if self.at("("):
            self.open()
            inner = self.expr()
            self.expect_close(t)
            return inner
        if t.kind == "end":
            if self.open_parens:
                self.fail("unbalanced parenthesis", "an operand")
            self.fail("unexpected end of input", "an operand")
        self.fail(f"unexpected {t.text!r}", "an operand")

    def ident(self) -> Expr:
        t = self.advance()
        name = t.text
        primes = 0
        while self.at("'"):
            self.advance()
            primes += 1
        if name == VARIABLE:
            if primes:
                self.fail("the variable cannot carry primes", tok=t)
            return X
        if name in BUILTINS:
            if primes:
                self.fail("builtin functions cannot carry primes", tok=t)
            if not self.at("("):
                self.fail(f"builtin {name!r} needs an argument", "'('")
            opener = self.open()
            arg = self.expr()
            self.expect_close(opener)
            return func(name, arg)
        if name in self.constants:
            if primes or self.at("("):
                self.fail(f"{name!r} is a declared constant, not a function", tok=t)
            return Const(self.constants[name])
        arg: Expr = X
        if self.at("("):
            opener = self.open()
            arg = self.expr()
            self.expect_close(opener)
        return Sym(name, primes, arg)


def _coerce_constants(constants: Mapping[str, object] | None) -> dict[str, Fraction]:
    out: dict[str, Fraction] = {}
    for k, v in (constants or {}).items():
        if isinstance(v, float):
            v = str(v)
        out[k] = Fraction(v)  # type: ignore[arg-type]
    return out


def parse_expr(text: str | bytes, constants: Mapping[str, object] | None = None) -> Expr:
    """Parse ``text`` into a normalized :class:`Expr`.

    Raises :class:`ParseDiagnostic` on any malformed input; never raises
    anything else for string or byte input.
    """
    if isinstance(text, str):
        data = text.encode("utf-8")
    else:
        data = bytes(text)
        try:
            data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseDiagnostic("input is not valid UTF-8", SourceSpan(exc.start, exc.end)) from None
    toks = tokenize(data)
    if toks[0].kind == "end":
        raise ParseDiagnostic("empty input", SourceSpan(0, len(data)), "an expression")
    p = _Parser(toks, _coerce_constants(constants))
    try:
        e = p.expr()
    except RecursionError:
        raise ParseDiagnostic("expression nested too deeply", p.tok.span) from None
    if p.tok.kind != "end":
        if p.at(")"):
            p.fail("unbalanced parenthesis")
        p.fail(f"unexpected {p.tok.text!r}", "an operator")
    return e


# ---------------------------------------------------------------------------
# printing

_SUM, _PROD, _UNARY, _POW, _ATOM = range(5)


def _fmt_const(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _prec(e: Expr) -> int:
    if isinstance(e, Add):
        return _SUM
    if isinstance(e, Const):
        if e.value < 0:
            return _UNARY
        return _ATOM if e.value.denominator == 1 else _PROD
    if isinstance(e, (Mul, Quotient)):
        if isinstance(e, Mul) and e.operands[0] == Const(-1):
            return _UNARY
        return _PROD
    if isinstance(e, Pow):
        return _POW
    return _ATOM


def _wrap(e: Expr, min_prec: int) -> str:
    s = print_expr(e)
    return f"({s})" if _prec(e) < min_prec else s


def print_expr(e: Expr) -> str:
    """Render ``e`` in the parser's syntax with minimal parentheses."""
    if isinstance(e, Const):
        return _fmt_const(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Sym):
        return f"{e.name}{chr(39) * e.order}({print_expr(e.arg)})"
    if isinstance(e, Func):
        return f"{e.name}({print_expr(e.arg)})"
    if isinstance(e, Pow):
        base = _wrap(e.base, _ATOM)
        k = e.exponent
        exp_s = _fmt_const(k) if k.denominator == 1 and k >= 0 else f"({_fmt_const(k)})"
        return f"{base}^{exp_s}"
    if isinstance(e, Mul):
        ops = list(e.operands)
        lead = ""
        if isinstance(ops[0], Const) and ops[0].value == -1:
            lead = "-"
            ops = ops[1:]
        parts = []
        for i, o in enumerate(ops):
            if i == 0 and isinstance(o, Const):
                parts.append(_fmt_const(o.value))
            else:
                parts.append(_wrap(o, _UNARY + 1 if i else _UNARY))
        body = "*".join(parts)
        if lead and len(ops) == 1:
            return "-" + _wrap(ops[0], _POW)
        return lead + body
    if isinstance(e, Quotient):
        num = _wrap(e.num, _PROD)
        den = _wrap(e.den, _POW)
        return f"{num}/{den}"
    if isinstance(e, Add):
        out = print_expr(e.operands[0])
        for o in e.operands[1:]:
            s = print_expr(o)
            if s.startswith("-"):
                out += s
            else:
                out += "+" + s
        return out
    raise TypeError(f"unknown node {type(e).__name__}")


__all__ = ["ParseDiagnostic", "SourceSpan", "Token", "parse_expr", "print_expr", "tokenize", "as_expr"]
