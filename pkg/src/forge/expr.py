"""Immutable expression trees in one real variable ``x``.

Expressions are built through the smart constructors (:func:`add`,
:func:`mul`, :func:`div`, :func:`power`, :func:`func`, :func:`sym`), which
keep every tree in a light normal form:

* sums are flattened, like terms are collected with rational coefficients
  and the constant term is placed last;
* products are flattened into ``coefficient * factor^exponent`` form, equal
  bases merge their exponents, ``exp`` factors merge into a single ``exp``
  and factors with negative exponents move into a :class:`Quotient`
  denominator;
* a rational coefficient times a single sum is distributed.

The node classes themselves do no normalization, so raw trees can still be
assembled by hand and passed through :func:`simplify`.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb
from typing import Callable, Iterable, Mapping, Union

BUILTINS = ("exp", "ln", "sin", "cos", "sinh", "cosh", "tanh")
VARIABLE = "x"

# Constant powers whose exact value would exceed this many bits stay unevaluated.
_MAX_FOLD_BITS = 20_000

Number = Union[int, Fraction]


class Expr:
    """Base class for expression nodes.

    Equality and hashing are structural; both rely on a cached nested-tuple
    key, which also provides the canonical operand ordering.
    """

    __slots__ = ("_key", "_hash")
    rank = -1

    def _make_key(self) -> tuple:
        raise NotImplementedError

    @property
    def key(self) -> tuple:
        try:
            return self._key
        except AttributeError:
            k = self._make_key()
            object.__setattr__(self, "_key", k)
            return k

    def __hash__(self) -> int:
        try:
            return self._hash
        except AttributeError:
            h = hash(self.key)
            object.__setattr__(self, "_hash", h)
            return h

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Expr):
            return NotImplemented
        return hash(self) == hash(other) and self.key == other.key

    def __ne__(self, other: object) -> bool:
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __setattr__(self, name, value):
        raise AttributeError("Expr nodes are immutable")

    def __lt__(self, other: "Expr") -> bool:
        return self.key < other.key

    # arithmetic sugar; all of it goes through the normalizing constructors
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, other):
        return power(self, other)

    def __neg__(self):
        return neg(self)

    def __str__(self) -> str:
        from .parse import print_expr

        return print_expr(self)

    @property
    def children(self) -> tuple["Expr", ...]:
        return ()


def _init(obj, **fields):
    for name, value in fields.items():
        object.__setattr__(obj, name, value)


class Const(Expr):
    __slots__ = ("value",)
    rank = 0

    def __init__(self, value: Number | str):
        if isinstance(value, float) or isinstance(value, bool):
            raise TypeError("Const stores exact rationals only")
        _init(self, value=Fraction(value))

    def _make_key(self):
        return (self.rank, self.value)

    def __repr__(self):
        return f"Const({self.value})"


class Var(Expr):
    __slots__ = ("name",)
    rank = 1

    def __init__(self, name: str = VARIABLE):
        _init(self, name=name)

    def _make_key(self):
        return (self.rank, self.name)

    def __repr__(self):
        return f"Var({self.name!r})"


class Sym(Expr):
    """Uninterpreted function ``name`` differentiated ``order`` times, applied to ``arg``."""

    __slots__ = ("name", "order", "arg")
    rank = 2

    def __init__(self, name: str, order: int, arg: Expr):
        if order < 0:
            raise ValueError("derivative order must be nonnegative")
        _init(self, name=name, order=int(order), arg=arg)

    def _make_key(self):
        return (self.rank, self.name, self.order, self.arg.key)

    @property
    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Sym({self.name!r}, {self.order}, {self.arg!r})"


class Func(Expr):
    __slots__ = ("name", "arg")
    rank = 3

    def __init__(self, name: str, arg: Expr):
        if name not in BUILTINS:
            raise ValueError(f"unknown builtin {name!r}")
        _init(self, name=name, arg=arg)

    def _make_key(self):
        return (self.rank, self.name, self.arg.key)

    @property
    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Func({self.name!r}, {self.arg!r})"


class Pow(Expr):
    __slots__ = ("base", "exponent")
    rank = 4

    def __init__(self, base: Expr, exponent: Number):
        _init(self, base=base, exponent=Fraction(exponent))

    def _make_key(self):
        return (self.rank, self.base.key, self.exponent)

    @property
    def children(self):
        return (self.base,)

    def __repr__(self):
        return f"Pow({self.base!r}, {self.exponent})"


class Mul(Expr):
    __slots__ = ("operands",)
    rank = 5

    def __init__(self, operands: Iterable[Expr]):
        _init(self, operands=tuple(operands))

    def _make_key(self):
        return (self.rank, tuple(o.key for o in self.operands))

    @property
    def children(self):
        return self.operands

    def __repr__(self):
        return f"Mul({', '.join(map(repr, self.operands))})"


class Quotient(Expr):
    __slots__ = ("num", "den")
    rank = 6

    def __init__(self, num: Expr, den: Expr):
        _init(self, num=num, den=den)

    def _make_key(self):
        return (self.rank, self.num.key, self.den.key)

    @property
    def children(self):
        return (self.num, self.den)

    def __repr__(self):
        return f"Quotient({self.num!r}, {self.den!r})"


class Add(Expr):
    __slots__ = ("operands",)
    rank = 7

    def __init__(self, operands: Iterable[Expr]):
        _init(self, operands=tuple(operands))

    def _make_key(self):
        return (self.rank, tuple(o.key for o in self.operands))

    @property
    def children(self):
        return self.operands

    def __repr__(self):
        return f"Add({', '.join(map(repr, self.operands))})"


ZERO = Const(0)
ONE = Const(1)
X = Var(VARIABLE)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return Const(value)
    if isinstance(value, str):
        return Const(Fraction(value))
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


def const(value: Number | str) -> Const:
    return Const(value)


def var() -> Var:
    return X


def sym(name: str, order: int = 0, arg: Expr = X) -> Sym:
    return Sym(name, order, arg)


# ---------------------------------------------------------------------------
# products


def _fits(value: Fraction, n: int) -> bool:
    bits = max(value.numerator.bit_length(), value.denominator.bit_length())
    return bits * abs(n) <= _MAX_FOLD_BITS


def _int_root(n: int, q: int) -> int | None:
    if n < 0:
        return None
    r = round(n ** (1.0 / q)) if n < 2**1000 else None
    if r is None:
        return None
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**q == n:
            return cand
    return None


def _rational_root(value: Fraction, q: int) -> Fraction | None:
    """Exact real ``q``-th root of ``value`` or None."""
    sign = 1
    if value < 0:
        if q % 2 == 0:
            return None
        sign, value = -1, -value
    num = _int_root(value.numerator, q)
    den = _int_root(value.denominator, q)
    if num is None or den is None:
        return None
    return sign * Fraction(num, den)


class _Gather:
    """Accumulate a product as coefficient * prod(base^exponent) * exp(sum)."""

    def __init__(self):
        self.coeff = Fraction(1)
        self.powers: dict[Expr, Fraction] = {}
        self.exp_args: list[Expr] = []

    def push(self, f: Expr, e: Fraction) -> None:
        if e == 0:
            return
        integral = e.denominator == 1
        if isinstance(f, Const):
            if f.value == 0:
                if e < 0:
                    raise ZeroDivisionError("division by zero")
                self.coeff = Fraction(0)
            elif integral and _fits(f.value, int(e)):
                self.coeff *= f.value ** int(e)
            else:
                self._bump(f, e)
        elif isinstance(f, Mul) and integral:
            for g in f.operands:
                self.push(g, e)
        elif isinstance(f, Quotient) and integral:
            self.push(f.num, e)
            self.push(f.den, -e)
        elif isinstance(f, Pow) and integral:
            # (b^a)^n = b^(an) for integer n; (x^2)^(1/2) = |x| stays opaque
            self.push(f.base, f.exponent * e)
        elif isinstance(f, Func) and f.name == "exp":
            self.exp_args.append(mul(Const(e), f.arg) if e != 1 else f.arg)
        else:
            self._bump(f, e)

    def _bump(self, base: Expr, e: Fraction) -> None:
        self.powers[base] = self.powers.get(base, Fraction(0)) + e

    def settle(self) -> None:
        # an opaque base whose exponent became integral can now be expanded
        while True:
            redo = [
                (b, e)
                for b, e in self.powers.items()
                if e.denominator == 1
                and e != 0
                and (isinstance(b, (Mul, Quotient)) or isinstance(b, Pow))
            ]
            if not redo:
                return
            for b, e in redo:
                del self.powers[b]
                self.push(b, e)

    def build(self) -> Expr:
        self.settle()
        if self.coeff == 0:
            return ZERO
        coeff = self.coeff
        num: list[Expr] = []
        den: list[Expr] = []
        for base, e in self.powers.items():
            if e == 0:
                continue
            if isinstance(base, Const):
                if e.denominator == 1 and _fits(base.value, int(e)):
                    coeff *= base.value ** int(e)
                    continue
                root = _rational_root(base.value, e.denominator)
                if root is not None and _fits(root, e.numerator):
                    coeff *= root**e.numerator
                    continue
            target = num if e > 0 else den
            target.append(base if abs(e) == 1 else Pow(base, abs(e)))
        if self.exp_args:
            arg = add(*self.exp_args)
            f = func("exp", arg)
            if isinstance(f, Const):
                coeff *= f.value
            else:
                num.append(f)
        num.sort(key=lambda t: t.key)
        den.sort(key=lambda t: t.key)
        numerator = _numerator(coeff, num)
        if not den:
            return numerator
        denominator = den[0] if len(den) == 1 else Mul(den)
        return Quotient(numerator, denominator)


def _numerator(coeff: Fraction, factors: list[Expr]) -> Expr:
    if not factors:
        return Const(coeff)
    if coeff == 1:
        return factors[0] if len(factors) == 1 else Mul(factors)
    if len(factors) == 1 and isinstance(factors[0], Add):
        return add(*(mul(Const(coeff), t) for t in factors[0].operands))
    return Mul([Const(coeff), *factors])


def _product(pairs: Iterable[tuple[Expr, Fraction]]) -> Expr:
    g = _Gather()
    for f, e in pairs:
        g.push(f, Fraction(e))
    return g.build()


def mul(*factors) -> Expr:
    return _product((as_expr(f), Fraction(1)) for f in factors)


def div(num, den) -> Expr:
    return _product([(as_expr(num), Fraction(1)), (as_expr(den), Fraction(-1))])


def neg(e) -> Expr:
    return mul(Const(-1), e)


def power(base, exponent) -> Expr:
    """``base ** exponent``; a non-numeric exponent becomes ``exp(exponent * ln(base))``."""
    base = as_expr(base)
    if isinstance(exponent, Expr):
        if not isinstance(exponent, Const):
            return func("exp", mul(exponent, func("ln", base)))
        exponent = exponent.value
    if isinstance(exponent, float):
        raise TypeError("exponents must be exact rationals")
    return _product([(base, Fraction(exponent))])


# ---------------------------------------------------------------------------
# sums


def split_coeff(t: Expr) -> tuple[Fraction, Expr]:
    """Split a normalized term into (rational coefficient, remaining core)."""
    if isinstance(t, Const):
        return t.value, ONE
    if isinstance(t, Mul) and isinstance(t.operands[0], Const):
        rest = t.operands[1:]
        return t.operands[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    if isinstance(t, Quotient):
        c, core = split_coeff(t.num)
        if c != 1:
            return c, Quotient(core, t.den)
    return Fraction(1), t


def add(*terms) -> Expr:
    collected: dict[Expr, Fraction] = {}
    constant = Fraction(0)
    stack = [as_expr(t) for t in reversed(terms)]
    while stack:
        t = stack.pop()
        if isinstance(t, Add):
            stack.extend(reversed(t.operands))
        elif isinstance(t, Const):
            constant += t.value
        else:
            c, core = split_coeff(t)
            collected[core] = collected.get(core, Fraction(0)) + c
    out: list[Expr] = []
    for core, c in collected.items():
        if c == 0:
            continue
        term = core if c == 1 else mul(Const(c), core)
        if isinstance(term, Add):
            # can only arise from a coefficient distributed over a bare sum
            for sub_t in term.operands:
                if isinstance(sub_t, Const):
                    constant += sub_t.value
                else:
                    out.append(sub_t)
        elif isinstance(term, Const):
            constant += term.value
        else:
            out.append(term)
    out.sort(key=lambda t: t.key)
    if constant != 0:
        out.append(Const(constant))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Add(out)


def sub(a, b) -> Expr:
    return add(a, neg(b))


# ---------------------------------------------------------------------------
# builtin functions

_AT_ZERO = {"exp": 1, "sin": 0, "cos": 1, "sinh": 0, "cosh": 1, "tanh": 0}


def func(name: str, arg) -> Expr:
    arg = as_expr(arg)
    if name not in BUILTINS:
        raise ValueError(f"unknown builtin {name!r}")
    if isinstance(arg, Const) and arg.value == 0 and name in _AT_ZERO:
        return Const(_AT_ZERO[name])
    if name == "ln":
        if arg == ONE:
            return ZERO
        if isinstance(arg, Func) and arg.name == "exp":
            return arg.arg
    return Func(name, arg)


def exp(a) -> Expr:
    return func("exp", a)


def ln(a) -> Expr:
    return func("ln", a)


def sin(a) -> Expr:
    return func("sin", a)


def cos(a) -> Expr:
    return func("cos", a)


def sinh(a) -> Expr:
    return func("sinh", a)


def cosh(a) -> Expr:
    return func("cosh", a)


def tanh(a) -> Expr:
    return func("tanh", a)


# ---------------------------------------------------------------------------
# traversal


def rebuild(e: Expr, leaf: Callable[[Expr], Expr | None], memo: dict | None = None) -> Expr:
    """Bottom-up rebuild through the smart constructors.

    ``leaf`` may return a replacement for any node (checked before recursing);
    returning None keeps descending.
    """
    if memo is None:
        memo = {}
    try:
        return memo[e]
    except KeyError:
        pass
    out = leaf(e)
    if out is None:
        if isinstance(e, (Const, Var)):
            out = e
        elif isinstance(e, Add):
            out = add(*(rebuild(o, leaf, memo) for o in e.operands))
        elif isinstance(e, Mul):
            out = mul(*(rebuild(o, leaf, memo) for o in e.operands))
        elif isinstance(e, Quotient):
            out = div(rebuild(e.num, leaf, memo), rebuild(e.den, leaf, memo))
        elif isinstance(e, Pow):
            out = power(rebuild(e.base, leaf, memo), e.exponent)
        elif isinstance(e, Func):
            out = func(e.name, rebuild(e.arg, leaf, memo))
        elif isinstance(e, Sym):
            out = Sym(e.name, e.order, rebuild(e.arg, leaf, memo))
        else:
            raise TypeError(f"unknown node {type(e).__name__}")
    memo[e] = out
    return out


def simplify(e: Expr) -> Expr:
    """Re-normalize ``e`` bottom-up.

    Only sound rewrites are applied: rational constant folding, flattening,
    like-term collection, merging of powers of equal bases and cancellation
    of equal factors across a quotient.
    """
    return rebuild(e, lambda _: None)


def walk(e: Expr) -> Iterable[Expr]:
    """Yield every distinct node of ``e`` once."""
    seen: set[int] = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        yield n
        stack.extend(n.children)


def symbols(e: Expr) -> dict[str, int]:
    """Map each uninterpreted symbol in ``e`` to its highest derivative order."""
    out: dict[str, int] = {}
    for n in walk(e):
        if isinstance(n, Sym):
            out[n.name] = max(out.get(n.name, 0), n.order)
    return out


def is_constant(e: Expr) -> bool:
    return all(not isinstance(n, (Var, Sym)) for n in walk(e))


# ---------------------------------------------------------------------------
# calculus


def _factors(e: Expr) -> list[tuple[Expr, Fraction]]:
    if isinstance(e, Mul):
        return [(o, Fraction(1)) for o in e.operands]
    if isinstance(e, Quotient):
        return _factors(e.num) + [(f, -k) for f, k in _factors(e.den)]
    if isinstance(e, Pow):
        return [(e.base, e.exponent)]
    return [(e, Fraction(1))]


def _d_func(name: str, arg: Expr) -> Expr:
    if name == "exp":
        return func("exp", arg)
    if name == "ln":
        return div(ONE, arg)
    if name == "sin":
        return func("cos", arg)
    if name == "cos":
        return neg(func("sin", arg))
    if name == "sinh":
        return func("cosh", arg)
    if name == "cosh":
        return func("sinh", arg)
    if name == "tanh":
        return sub(ONE, power(func("tanh", arg), 2))
    raise ValueError(name)


def differentiate(e: Expr, times: int = 1) -> Expr:
    """Total derivative d/dx, applied ``times`` times."""
    for _ in range(times):
        e = _diff(e, {})
    return e


def _diff(e: Expr, memo: dict) -> Expr:
    try:
        return memo[e]
    except KeyError:
        pass
    if isinstance(e, Const):
        out = ZERO
    elif isinstance(e, Var):
        out = ONE if e.name == VARIABLE else ZERO
    elif isinstance(e, Add):
        out = add(*(_diff(o, memo) for o in e.operands))
    elif isinstance(e, (Mul, Quotient, Pow)):
        fs = _factors(e)
        terms = []
        for i, (f, k) in enumerate(fs):
            df = _diff(f, memo)
            if df == ZERO:
                continue
            pairs = [p for j, p in enumerate(fs) if j != i]
            pairs += [(f, k - 1), (df, Fraction(1)), (Const(k), Fraction(1))]
            terms.append(_product(pairs))
        out = add(*terms)
    elif isinstance(e, Func):
        out = mul(_d_func(e.name, e.arg), _diff(e.arg, memo))
    elif isinstance(e, Sym):
        out = mul(Sym(e.name, e.order + 1, e.arg), _diff(e.arg, memo))
    else:
        raise TypeError(f"unknown node {type(e).__name__}")
    memo[e] = out
    return out


def subs_var(e: Expr, value: Expr) -> Expr:
    """Substitute ``value`` for the variable ``x`` throughout ``e``."""
    value = as_expr(value)
    return rebuild(e, lambda n: value if isinstance(n, Var) and n.name == VARIABLE else None)


def subs_symbols(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace uninterpreted symbols by concrete expressions.

    ``Sym(f, k, arg)`` becomes the ``k``-th derivative of ``mapping[f]``
    composed with ``arg``.
    """
    derivs: dict[tuple[str, int], Expr] = {}

    def nth(name: str, k: int) -> Expr:
        if (name, k) not in derivs:
            derivs[(name, k)] = as_expr(mapping[name]) if k == 0 else differentiate(nth(name, k - 1))
        return derivs[(name, k)]

    memo: dict = {}

    def leaf(n: Expr):
        if isinstance(n, Sym) and n.name in mapping:
            d = nth(n.name, n.order)
            if n.arg == X:
                return d
            return subs_var(d, rebuild(n.arg, leaf, memo))
        return None

    return rebuild(e, leaf, memo)


def replace_functions(e: Expr, mapping: Mapping[str, str]) -> Expr:
    """Rename builtin function applications, e.g. ``{"sinh": "sin"}``."""
    memo: dict = {}

    def leaf(n: Expr):
        if isinstance(n, Func) and n.name in mapping:
            return func(mapping[n.name], rebuild(n.arg, leaf, memo))
        return None

    return rebuild(e, leaf, memo)


def polynomial(coeffs: Iterable[Number]) -> Expr:
    """Expression for ``sum(c_i * x**i)``."""
    return add(*(mul(Const(c), power(X, i)) for i, c in enumerate(coeffs)))


def leibniz(k: int, f: Expr) -> list[Expr]:
    """Coefficients of the composition ``D^k o f``, indexed by power of D."""
    out = [ZERO] * (k + 1)
    d = f
    for j in range(k + 1):
        out[k - j] = mul(Const(comb(k, j)), d)
        if j < k:
            d = differentiate(d)
    return out


_EXPAND_LIMIT = 256


def _terms(e: Expr) -> tuple[Expr, ...]:
    return e.operands if isinstance(e, Add) else (e,)


def expand(e: Expr) -> Expr:
    """Distribute products over sums (and small integer powers of sums).

    Quotients are split term-wise over an expanded numerator; denominators
    are left alone. Products that would exceed a fixed term budget stay
    factored.
    """
    memo: dict = {}

    def leaf(n: Expr):
        if isinstance(n, Mul):
            parts = [_terms(rebuild(o, leaf, memo)) for o in n.operands]
            size = 1
            for p in parts:
                size *= len(p)
            if size > _EXPAND_LIMIT:
                return None
            acc: list[Expr] = [ONE]
            for p in parts:
                acc = [mul(a, b) for a in acc for b in p]
            return add(*acc)
        if isinstance(n, Pow) and isinstance(n.base, Add) and n.exponent.denominator == 1 and 1 < n.exponent <= 4:
            base = _terms(rebuild(n.base, leaf, memo))
            if len(base) ** int(n.exponent) > _EXPAND_LIMIT:
                return None
            acc = [ONE]
            for _ in range(int(n.exponent)):
                acc = [mul(a, b) for a in acc for b in base]
            return add(*acc)
        if isinstance(n, Quotient):
            num = rebuild(n.num, leaf, memo)
            return add(*(div(t, n.den) for t in _terms(num)))
        return None

    return rebuild(e, leaf, memo)
