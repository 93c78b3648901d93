from fractions import Fraction

import pytest

from forge.evaluation import is_zero
from forge.expr import (
    ONE,
    ZERO,
    Add,
    Const,
    Func,
    Pow,
    Quotient,
    Sym,
    X,
    add,
    cosh,
    differentiate,
    div,
    exp,
    expand,
    leibniz,
    ln,
    mul,
    polynomial,
    power,
    replace_functions,
    simplify,
    sinh,
    sub,
    subs_symbols,
    subs_var,
    sym,
    symbols,
)
from forge.parse import parse_expr as P


def test_power_rule():
    assert differentiate(power(X, 2)) == mul(Const(2), X)


def test_log_derivative_of_uninterpreted():
    h = sym("h")
    assert differentiate(ln(h)) == Quotient(Sym("h", 1, X), Sym("h", 0, X))


def test_chain_rule_with_constant_factor():
    k = Const(3)
    assert differentiate(sinh(mul(k, X))) == mul(k, cosh(mul(k, X)))


def test_higher_derivative():
    assert differentiate(power(X, 4), 3) == mul(Const(24), X)
    assert differentiate(X, 0) == X


def test_simplify_examples():
    assert simplify(add(mul(ONE, X), ZERO)) == X
    xb = add(X, Const(1))
    assert simplify(mul(xb, power(xb, -1))) == ONE
    c = cosh(mul(Const(2), X))
    assert simplify(mul(Const(2), Const(Fraction(1, 2)), c)) == c


def test_like_terms_collect():
    assert add(X, X, mul(Const(-2), X)) == ZERO
    assert add(sym("f"), sym("f")) == mul(Const(2), sym("f"))


def test_exponential_products_merge():
    assert mul(exp(X), exp(mul(Const(-1), X))) == ONE


def test_rational_roots_fold():
    assert power(Const(4), Fraction(1, 2)) == Const(2)
    assert isinstance(power(Const(2), Fraction(1, 2)), Pow)


def test_floats_rejected():
    with pytest.raises(TypeError):
        Const(0.5)


def test_nodes_are_immutable():
    e = add(X, ONE)
    with pytest.raises(AttributeError):
        e.operands = ()


def test_structural_equality_and_hash():
    a, b = P("x^2 + sin(x)"), P("sin(x) + x^2")
    assert a == b and hash(a) == hash(b)


def test_non_constant_exponent_rewrites_through_log():
    e = power(X, X)
    assert isinstance(e, Func) and e.name == "exp"
    assert is_zero(sub(differentiate(e), mul(e, add(ln(X), ONE)))).zero


def test_subs_var_and_symbols():
    assert subs_var(power(X, 2), Const(3)) == Const(9)
    e = add(sym("f", 2), sym("f"))
    assert subs_symbols(e, {"f": power(X, 3)}) == add(mul(Const(6), X), power(X, 3))


def test_symbols_reports_max_order():
    assert symbols(P("f''(x) + f(x)*g'(x)")) == {"f": 2, "g": 1}


def test_replace_functions():
    e = add(sinh(X), cosh(X))
    assert replace_functions(e, {"sinh": "sin", "cosh": "cos"}) == P("sin(x) + cos(x)")


def test_polynomial_and_leibniz():
    assert polynomial([1, 0, 2]) == P("2*x^2 + 1")
    f = sym("f")
    assert leibniz(2, f) == [sym("f", 2), mul(Const(2), sym("f", 1)), f]


def test_expand_distributes():
    e = expand(mul(add(X, ONE), add(X, Const(-1))))
    assert e == add(power(X, 2), Const(-1))
    assert isinstance(expand(power(add(X, ONE), 2)), Add)


def test_division_by_zero_constant():
    with pytest.raises(ZeroDivisionError):
        div(X, ZERO)


def test_differentiation_matches_numeric_identity():
    e = P("exp(sin(x))*ln(x^2 + 1)/(x + 3)^(1/2)")
    d = differentiate(e)
    # compare against a central difference at a sample point
    from forge.evaluation import EvalContext, evaluate

    x0, h = Fraction(3, 2), Fraction(1, 10**8)
    approx = (evaluate(e, EvalContext(x=x0 + h)) - evaluate(e, EvalContext(x=x0 - h))) / (2 * float(h))
    assert abs(float(evaluate(d, EvalContext(x=x0))) - float(approx)) < 1e-6
