from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exprgen import expressions
from forge.expr import Add, Const, Pow, Quotient, Sym, X, cosh, mul, sinh, sym
from forge.parse import MAX_DEPTH, ParseDiagnostic, parse_expr, print_expr


def test_quotient_shape():
    e = parse_expr("-2/(x+1)^2")
    assert isinstance(e, Quotient)
    assert e.num == Const(-2)
    assert isinstance(e.den, Pow) and e.den.exponent == 2 and isinstance(e.den.base, Add)


def test_declared_constants():
    e = parse_expr("c0*sinh(k*x) + c1*cosh(k*x)", {"c0": 0, "c1": 1, "k": "1/2"})
    assert e == cosh(mul(Const(Fraction(1, 2)), X))


def test_unbalanced_parenthesis_span_at_end():
    with pytest.raises(ParseDiagnostic) as info:
        parse_expr("sin(")
    assert info.value.message == "unbalanced parenthesis"
    assert info.value.span.start == info.value.span.end == 4


@pytest.mark.parametrize("text", ["", "   ", "x +", "2 $ x", "(x", "x)", "sin x", "1/0", "x'", "sin'(x)", "k(x)"])
def test_malformed_inputs_give_diagnostics(text):
    with pytest.raises(ParseDiagnostic):
        parse_expr(text, {"k": 2})


def test_invalid_utf8():
    with pytest.raises(ParseDiagnostic):
        parse_expr(b"x+\xff")


def test_deep_nesting_is_a_diagnostic():
    with pytest.raises(ParseDiagnostic):
        parse_expr("(" * (MAX_DEPTH + 5) + "x" + ")" * (MAX_DEPTH + 5))


def test_primes_and_arguments():
    assert parse_expr("h''(x)") == Sym("h", 2, X)
    assert parse_expr("h") == sym("h")
    assert parse_expr("f(2*x)") == Sym("f", 0, mul(Const(2), X))


def test_exact_decimals():
    assert parse_expr("0.25") == Const(Fraction(1, 4))


def test_symbolic_exponent():
    assert parse_expr("x^x") == parse_expr("exp(x*ln(x))")


@pytest.mark.parametrize(
    "text,printed",
    [("2*x", "2*x"), ("-1/(x+1)", "-1/(x+1)"), ("h'(x)/h(x)", "h'(x)/h(x)"), ("x*exp(-x^2/4)", "x*exp(-1/4*x^2)")],
)
def test_printing(text, printed):
    assert print_expr(parse_expr(text)) == printed


@settings(max_examples=200, deadline=None)
@given(expressions)
def test_round_trip(e):
    assert parse_expr(print_expr(e)) == e


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=40))
def test_arbitrary_bytes_never_crash(data):
    try:
        parse_expr(data)
    except ParseDiagnostic:
        pass


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet="x0123456789+-*/^()' .sinhcoexpl", max_size=30))
def test_grammar_like_text_never_crashes(text):
    try:
        parse_expr(text)
    except ParseDiagnostic:
        pass
