"""The ring of linear differential operators ``sum(a_i D^i)`` over expressions.

Multiplication is composition, driven by ``D f = f' + f D``; in general
``D^k f = sum_j C(k, j) f^(j) D^(k-j)``.
"""

from __future__ import annotations

from math import comb
from typing import Iterable, Sequence

from .evaluation import DEFAULT_ZERO_TEST, Status, Verdict, ZeroTest
from .expr import ONE, ZERO, Const, Expr, add, as_expr, differentiate, leibniz, mul, neg, sub
from .parse import parse_expr, print_expr


class DiffOp:
    """Dense coefficient list; ``coeffs[i]`` multiplies ``D^i``.

    Trailing coefficients that pass the zero test are trimmed on
    construction, so the leading coefficient is never identically zero.
    The zero operator has no coefficients and order ``None``.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = (), zero_test: ZeroTest | None = None, normalize: bool = True):
        cs = [as_expr(c) for c in coeffs]
        if normalize:
            zt = zero_test or DEFAULT_ZERO_TEST
            while cs and (cs[-1] == ZERO or (not isinstance(cs[-1], Const) and zt(cs[-1]).zero)):
                cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, name, value):
        raise AttributeError("DiffOp is immutable")

    @classmethod
    def d(cls) -> "DiffOp":
        return cls([ZERO, ONE])

    @classmethod
    def scalar(cls, f) -> "DiffOp":
        return cls([f])

    @property
    def order(self) -> int | None:
        return len(self.coeffs) - 1 if self.coeffs else None

    def coeff(self, i: int) -> Expr:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else ZERO

    @property
    def leading(self) -> Expr:
        return self.coeffs[-1] if self.coeffs else ZERO

    def __add__(self, other):
        return op_add(self, _as_op(other))

    def __radd__(self, other):
        return op_add(_as_op(other), self)

    def __sub__(self, other):
        return op_add(self, -_as_op(other))

    def __rsub__(self, other):
        return op_add(_as_op(other), -self)

    def __neg__(self):
        return DiffOp([neg(c) for c in self.coeffs], normalize=False)

    def __mul__(self, other):
        return op_mul(self, _as_op(other))

    def __rmul__(self, other):
        return op_mul(_as_op(other), self)

    def __call__(self, u) -> Expr:
        return op_apply(self, u)

    def __eq__(self, other):
        # structural; use op_equal for semantic comparison
        return isinstance(other, DiffOp) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"DiffOp({[print_expr(c) for c in self.coeffs]})"

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for i in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[i]
            if c == ZERO:
                continue
            d = "" if i == 0 else ("D" if i == 1 else f"D^{i}")
            if not d:
                body = print_expr(c)
                parts.append(f"({body})" if len(parts) and ("+" in body[1:] or "-" in body[1:]) else body)
            elif c == ONE:
                parts.append(d)
            else:
                parts.append(f"({print_expr(c)})*{d}")
        return " + ".join(parts)

    def to_json(self) -> dict:
        return {"coeffs": [print_expr(c) for c in self.coeffs]}

    @classmethod
    def from_json(cls, data: dict, constants=None, zero_test: ZeroTest | None = None) -> "DiffOp":
        return cls([parse_expr(s, constants) for s in data["coeffs"]], zero_test=zero_test)


def _as_op(v) -> DiffOp:
    return v if isinstance(v, DiffOp) else DiffOp([as_expr(v)])


D = DiffOp.d()
IDENTITY = DiffOp([ONE])


def op_add(a: DiffOp, b: DiffOp, zero_test: ZeroTest | None = None) -> DiffOp:
    n = max(len(a.coeffs), len(b.coeffs))
    return DiffOp([add(a.coeff(i), b.coeff(i)) for i in range(n)], zero_test=zero_test)


def op_mul(a: DiffOp, b: DiffOp, zero_test: ZeroTest | None = None) -> DiffOp:
    """Composition ``a o b``."""
    if not a.coeffs or not b.coeffs:
        return DiffOp()
    terms: list[list[Expr]] = [[] for _ in range(len(a.coeffs) + len(b.coeffs) - 1)]
    # derivatives of each b_j are shared across all powers of D in a
    derivs: list[list[Expr]] = []
    for bj in b.coeffs:
        ds = [bj]
        for _ in range(len(a.coeffs) - 1):
            ds.append(differentiate(ds[-1]))
        derivs.append(ds)
    for i, ai in enumerate(a.coeffs):
        if ai == ZERO:
            continue
        for j in range(len(b.coeffs)):
            for l in range(i + 1):
                d = derivs[j][l]
                if d == ZERO:
                    continue
                terms[i - l + j].append(mul(Const(comb(i, l)), ai, d))
    return DiffOp([add(*t) for t in terms], zero_test=zero_test)


def op_apply(a: DiffOp, u) -> Expr:
    """``sum(a_i * u^(i))``."""
    u = as_expr(u)
    out = []
    d = u
    for i, c in enumerate(a.coeffs):
        if i:
            d = differentiate(d)
        out.append(mul(c, d))
    return add(*out)


def op_equal(a: DiffOp, b: DiffOp, zero_test: ZeroTest | None = None) -> Verdict:
    """Zero-test every coefficient of ``a - b``; the first failure is reported with its power."""
    zt = zero_test or DEFAULT_ZERO_TEST
    n = max(len(a.coeffs), len(b.coeffs))
    for i in range(n):
        v = zt(sub(a.coeff(i), b.coeff(i)))
        if not v.zero:
            return Verdict(v.status, witness=v.witness, value=v.value, power=i, samples=v.samples)
    return Verdict(Status.ZERO)


def multiplication(f) -> DiffOp:
    """The order-zero operator 'multiply by f'."""
    return DiffOp([as_expr(f)])


def first_order(s, lead=ONE) -> DiffOp:
    """``lead * D + s``."""
    return DiffOp([as_expr(s), as_expr(lead)])


def compose_leibniz(k: int, f) -> DiffOp:
    """``D^k o f`` expanded directly by the binomial rule."""
    return DiffOp(leibniz(k, as_expr(f)), normalize=False)


def from_coeffs(coeffs: Sequence[str], constants=None) -> DiffOp:
    return DiffOp([parse_expr(c, constants) for c in coeffs])
