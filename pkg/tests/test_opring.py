import random

from exprgen import random_operator
from forge.evaluation import DEFAULT_ZERO_TEST as ZT
from forge.expr import ONE, ZERO, X, Const, add, differentiate, mul, neg, power, sym
from forge.opring import D, IDENTITY, DiffOp, compose_leibniz, first_order, multiplication, op_apply, op_equal, op_mul
from forge.parse import parse_expr as P


def test_addition_examples():
    assert (D + (-D)).order is None
    V = sym("V")
    L1 = DiffOp([ZERO, ZERO, ONE]) + multiplication(V)
    assert L1 == DiffOp([V, ZERO, ONE])
    assert L1 + DiffOp() == L1


def test_d_after_multiplication_by_x():
    assert op_mul(D, multiplication(X)) == DiffOp([ONE, X])
    assert op_equal(op_mul(D, multiplication(X)), DiffOp([ONE, X])).zero


def test_first_order_product():
    s = sym("s")
    prod = op_mul(first_order(s), first_order(neg(s)))
    expected = DiffOp([neg(add(differentiate(s), mul(s, s))), ZERO, ONE])
    assert op_equal(prod, expected).zero


def test_identity_is_neutral():
    rng = random.Random(3)
    for _ in range(5):
        A = random_operator(rng)
        assert op_equal(op_mul(A, IDENTITY), A).zero
        assert op_equal(op_mul(IDENTITY, A), A).zero


def test_apply_examples():
    assert op_apply(DiffOp([ZERO, ZERO, ONE]), P("x+1")) == ZERO
    assert op_apply(DiffOp([P("-2/x^2"), ZERO, ONE]), P("x^2")) == ZERO


def test_equal_reports_power():
    L = DiffOp([ZERO, ZERO, ONE])
    v = op_equal(L, L + multiplication(ONE))
    assert not v.zero and v.power == 0


def test_normalization_trims_vanishing_leading_terms():
    A = DiffOp([X, P("sinh(x)^2 - cosh(x)^2 + 1")])
    assert A.order == 0


def test_composition_agrees_with_sequential_application():
    rng = random.Random(4)
    u = P("exp(x)*sin(x)")
    for _ in range(10):
        A, B = random_operator(rng), random_operator(rng)
        lhs = op_apply(op_mul(A, B), u)
        rhs = op_apply(A, op_apply(B, u))
        assert ZT(lhs - rhs).zero


def test_compose_leibniz_matches_op_mul():
    f = sym("f")
    for k in range(5):
        direct = compose_leibniz(k, f)
        Dk = DiffOp([ZERO] * k + [ONE])
        assert op_equal(direct, op_mul(Dk, multiplication(f))).zero


def test_json_round_trip_and_str():
    A = DiffOp([P("-2/x^2"), P("2/x"), ONE])
    assert DiffOp.from_json(A.to_json()) == A
    assert str(A) == "D^2 + (2/x)*D + -2/x^2"
    assert str(DiffOp()) == "0"


def test_operators_are_immutable():
    import pytest

    with pytest.raises(AttributeError):
        D.coeffs = ()
