"""Numeric evaluation of expressions and the probabilistic zero test.

Two evaluators share the same semantics:

* :func:`evaluate` works point-wise in arbitrary precision (mpmath) and is
  what :func:`is_zero` uses;
* :func:`evaluate_array` is vectorized over a numpy array in double
  precision and backs the grid oracles in :mod:`forge.verify`.

Uninterpreted symbols are instantiated by concrete polynomials with exact
rational coefficients.
"""

from __future__ import annotations

import math
import os
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Mapping, Sequence

import mpmath
import numpy as np

from .errors import DomainError, UnboundSymbol
from .expr import Add, Const, Expr, Func, Mul, Pow, Quotient, Sym, Var, symbols

DEFAULT_SEED = 0xC0FFEE
DEFAULT_DOMAIN = (1.0, 2.0)
DEFAULT_PRECISION = 30
MIN_POLY_DEGREE = 4
RETRY_CAP = 8


def default_precision() -> int:
    env = os.environ.get("FORGE_PRECISION")
    return int(env) if env else DEFAULT_PRECISION


def _poly_derivative(coeffs: Sequence[Fraction], k: int) -> list[Fraction]:
    out = list(coeffs)
    for _ in range(k):
        out = [i * c for i, c in enumerate(out)][1:]
    return out


@dataclass(frozen=True)
class EvalContext:
    """Point and symbol bindings for a single evaluation.

    ``bindings`` maps each uninterpreted symbol to polynomial coefficients,
    lowest degree first.
    """

    x: object
    bindings: Mapping[str, tuple[Fraction, ...]] = field(default_factory=dict)
    precision: int = DEFAULT_PRECISION


class _MpEvaluator:
    def __init__(self, ctx: EvalContext):
        self.ctx = ctx
        self.x = mpmath.mpf(ctx.x) if not isinstance(ctx.x, Fraction) else mpmath.mpf(ctx.x.numerator) / ctx.x.denominator
        self.memo: dict[Expr, object] = {}
        self.scale = mpmath.mpf(0)
        self.poly_cache: dict[tuple[str, int], list] = {}

    def poly(self, name: str, k: int):
        key = (name, k)
        if key not in self.poly_cache:
            try:
                coeffs = self.ctx.bindings[name]
            except KeyError:
                raise UnboundSymbol(name) from None
            self.poly_cache[key] = [mpmath.mpf(c.numerator) / c.denominator for c in _poly_derivative(coeffs, k)]
        return self.poly_cache[key]

    def bump(self, v) -> None:
        a = abs(v)
        if a > self.scale:
            self.scale = a

    def ev(self, e: Expr):
        try:
            return self.memo[e]
        except KeyError:
            pass
        v = self._ev(e)
        self.bump(v)
        self.memo[e] = v
        return v

    def _ev(self, e: Expr):
        mpf = mpmath.mpf
        if isinstance(e, Const):
            return mpf(e.value.numerator) / e.value.denominator
        if isinstance(e, Var):
            return self.x
        if isinstance(e, Add):
            total = mpf(0)
            for o in e.operands:
                total += self.ev(o)
            return total
        if isinstance(e, Mul):
            total = mpf(1)
            for o in e.operands:
                total *= self.ev(o)
            return total
        if isinstance(e, Quotient):
            d = self.ev(e.den)
            if d == 0:
                raise DomainError("division by zero")
            return self.ev(e.num) / d
        if isinstance(e, Pow):
            return _mp_pow(self.ev(e.base), e.exponent)
        if isinstance(e, Func):
            a = self.ev(e.arg)
            if e.name == "ln":
                if a <= 0:
                    raise DomainError("logarithm of a nonpositive value")
                return mpmath.log(a)
            return getattr(mpmath, e.name)(a)
        if isinstance(e, Sym):
            a = self.ev(e.arg)
            total = mpf(0)
            for c in reversed(self.poly(e.name, e.order)):
                total = total * a + c
            return total
        raise TypeError(f"unknown node {type(e).__name__}")


def _mp_pow(b, k: Fraction):
    if k.denominator == 1:
        if b == 0 and k < 0:
            raise DomainError("division by zero")
        return b ** int(k)
    if b < 0:
        if k.denominator % 2 == 0:
            raise DomainError("even root of a negative value")
        r = (-b) ** (mpmath.mpf(k.numerator) / k.denominator)
        return -r if k.numerator % 2 else r
    if b == 0 and k < 0:
        raise DomainError("division by zero")
    return b ** (mpmath.mpf(k.numerator) / k.denominator)


def evaluate(e: Expr, ctx: EvalContext):
    """Value of ``e`` at ``ctx.x`` as an mpmath float at ``ctx.precision`` digits."""
    with mpmath.workdps(ctx.precision):
        return _MpEvaluator(ctx).ev(e)


def _evaluate_with_scale(e: Expr, ctx: EvalContext):
    ev = _MpEvaluator(ctx)
    v = ev.ev(e)
    return v, ev.scale


# ---------------------------------------------------------------------------
# vectorized double precision

_NP_FUNCS = {"exp": np.exp, "sin": np.sin, "cos": np.cos, "sinh": np.sinh, "cosh": np.cosh, "tanh": np.tanh}


def evaluate_array(e: Expr, xs, bindings: Mapping[str, Sequence[Fraction]] | None = None) -> np.ndarray:
    """Evaluate ``e`` at every point of ``xs``; points outside the domain give nan/inf."""
    xs = np.asarray(xs, dtype=float)
    bindings = bindings or {}
    memo: dict[Expr, np.ndarray] = {}

    def ev(n: Expr) -> np.ndarray:
        if n in memo:
            return memo[n]
        if isinstance(n, Const):
            v = np.full_like(xs, float(n.value))
        elif isinstance(n, Var):
            v = xs
        elif isinstance(n, Add):
            v = np.zeros_like(xs)
            for o in n.operands:
                v = v + ev(o)
        elif isinstance(n, Mul):
            v = np.ones_like(xs)
            for o in n.operands:
                v = v * ev(o)
        elif isinstance(n, Quotient):
            v = ev(n.num) / ev(n.den)
        elif isinstance(n, Pow):
            b = ev(n.base)
            k = n.exponent
            if k.denominator == 1:
                v = b ** float(k)
            elif k.denominator % 2 == 1:
                v = np.sign(b) ** k.numerator * np.abs(b) ** float(k)
            else:
                v = np.where(b >= 0, np.abs(b) ** float(k), np.nan)
        elif isinstance(n, Func):
            a = ev(n.arg)
            if n.name == "ln":
                v = np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), np.nan)
            else:
                v = _NP_FUNCS[n.name](a)
        elif isinstance(n, Sym):
            if n.name not in bindings:
                raise UnboundSymbol(n.name)
            cs = [float(c) for c in _poly_derivative(list(bindings[n.name]), n.order)]
            v = np.polynomial.polynomial.polyval(ev(n.arg), cs) if cs else np.zeros_like(xs)
        else:
            raise TypeError(f"unknown node {type(n).__name__}")
        memo[n] = v
        return v

    with np.errstate(all="ignore"):
        return np.asarray(ev(e), dtype=float)


# ---------------------------------------------------------------------------
# zero test


class Status(str, Enum):
    ZERO = "zero"
    NONZERO = "nonzero"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Verdict:
    """Outcome of a zero test.

    ``witness`` is a sample point where the expression was seen to be
    nonzero, ``value`` the value found there; ``power`` is set by operator
    comparisons to the offending power of D.
    """

    status: Status
    witness: float | None = None
    value: float | None = None
    power: int | None = None
    samples: int = 0

    @property
    def zero(self) -> bool:
        return self.status is Status.ZERO

    def label(self) -> str:
        return self.status.value

    def to_json(self) -> dict:
        out: dict = {"status": self.status.value}
        if self.witness is not None:
            out["witness"] = _round_sig(self.witness)
        if self.value is not None:
            out["value"] = _round_sig(self.value)
        if self.power is not None:
            out["power"] = self.power
        return out


def _round_sig(v: float, digits: int = 12) -> float:
    return float(f"{v:.{digits}g}")


def random_binding(rng: random.Random, degree: int) -> tuple[Fraction, ...]:
    return tuple(Fraction(rng.randint(-1000, 1000), 1000) for _ in range(degree + 1))


@dataclass(frozen=True)
class ZeroTest:
    """Settings for :func:`is_zero`; calling the object runs the test."""

    domain: tuple[float, float] = DEFAULT_DOMAIN
    trials: int = 8
    atol: float = 1e-12
    rtol: float = 1e-12
    seed: int = DEFAULT_SEED
    precision: int | None = None

    def __post_init__(self):
        a, b = self.domain
        if not a < b:
            raise ValueError(f"empty domain {self.domain}")
        if self.trials < 1:
            raise ValueError("trials must be positive")

    def __call__(self, e: Expr) -> Verdict:
        return is_zero(
            e,
            domain=self.domain,
            trials=self.trials,
            tolerance=(self.atol, self.rtol),
            seed=self.seed,
            precision=self.precision,
        )

    def with_domain(self, domain: tuple[float, float]) -> "ZeroTest":
        return replace(self, domain=(float(domain[0]), float(domain[1])))


DEFAULT_ZERO_TEST = ZeroTest()


def is_zero(
    e: Expr,
    domain: tuple[float, float] = DEFAULT_DOMAIN,
    trials: int = 8,
    tolerance: tuple[float, float] = (1e-12, 1e-12),
    seed: int | random.Random = DEFAULT_SEED,
    precision: int | None = None,
) -> Verdict:
    """Decide probabilistically whether ``e`` vanishes identically on ``domain``.

    Each trial draws a point uniformly from ``domain`` and a fresh random
    polynomial for every uninterpreted symbol. A trial counts as zero when
    ``|value| <= atol + rtol * scale``, where ``scale`` is the largest
    magnitude of any subexpression at that point. Points raising
    :class:`DomainError` are redrawn up to ``RETRY_CAP`` times.
    """
    if isinstance(e, Const):
        if e.value == 0:
            return Verdict(Status.ZERO)
        return Verdict(Status.NONZERO, witness=float(domain[0]), value=float(e.value))
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    precision = precision or default_precision()
    atol, rtol = tolerance
    lo, hi = float(domain[0]), float(domain[1])
    degrees = {name: max(MIN_POLY_DEGREE, order) for name, order in symbols(e).items()}
    ok = 0
    with mpmath.workdps(precision):
        for _ in range(trials):
            for _attempt in range(RETRY_CAP):
                x = rng.uniform(lo, hi)
                bindings = {name: random_binding(rng, d) for name, d in sorted(degrees.items())}
                ctx = EvalContext(x=x, bindings=bindings, precision=precision)
                try:
                    value, scale = _evaluate_with_scale(e, ctx)
                except (DomainError, ZeroDivisionError, OverflowError, ValueError):
                    continue
                if not mpmath.isfinite(value):
                    continue
                if abs(value) > atol + rtol * scale:
                    return Verdict(Status.NONZERO, witness=x, value=float(value), samples=ok + 1)
                ok += 1
                break
    if ok < math.ceil(trials / 2):
        return Verdict(Status.INCONCLUSIVE, samples=ok)
    return Verdict(Status.ZERO, samples=ok)
