"""First-order intertwiners ``T = D + s`` with ``M T = T L``, and what follows from them.

Sign convention: an eigenfunction ``h`` of ``L`` with spectral parameter
``lam`` satisfies ``(L + lam) h = 0``, i.e. ``a_n h^(n) + ... + (a_0 + lam) h
= 0``. Under it the Riccati reduction reads ``R(s) = lam`` with
``s = -h'/h``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NotAKernelElement, NotAnEigenfunction, NotDivisible, UnsupportedOrder, ZeroCrossing
from .evaluation import DEFAULT_ZERO_TEST, Verdict, ZeroTest, evaluate_array
from .expr import ONE, ZERO, Const, Expr, Sym, X, add, as_expr, differentiate, div, expand, mul, neg, simplify, sub, symbols
from .opring import D, DiffOp, first_order, multiplication, op_apply, op_equal, op_mul
from .parse import print_expr


def _zt(zero_test: ZeroTest | None) -> ZeroTest:
    return zero_test or DEFAULT_ZERO_TEST


def _rational(lam) -> Fraction:
    if isinstance(lam, float):
        raise TypeError("spectral parameters are exact rationals")
    return Fraction(lam)


def log_derivative(h: Expr) -> Expr:
    """``h'/h``."""
    return simplify(div(differentiate(h), h))


def spectral_residual(L: DiffOp, h: Expr, lam) -> Expr:
    """``(L + lam) h``; vanishes iff ``h`` is an eigenfunction for ``lam``."""
    return add(op_apply(L, h), mul(Const(_rational(lam)), h))


def check_nonvanishing(h: Expr, domain: tuple[float, float], points: int = 401) -> None:
    """Raise :class:`ZeroCrossing` if ``h`` vanishes or is undefined on a grid over ``domain``.

    Expressions with uninterpreted symbols are not checked.
    """
    if symbols(h):
        return
    xs = np.linspace(domain[0], domain[1], points)
    vals = evaluate_array(h, xs)
    bad = ~np.isfinite(vals) | (np.abs(vals) < 1e-12)
    if bad.any():
        raise ZeroCrossing(f"{print_expr(h)} vanishes or is undefined on {domain}", float(xs[np.argmax(bad)]))
    flips = np.nonzero(np.diff(np.sign(vals)))[0]
    if flips.size:
        raise ZeroCrossing(f"{print_expr(h)} changes sign on {domain}", float(xs[flips[0]]))


def _fresh_name(base: str, *taken: Expr) -> str:
    used: set[str] = set()
    for e in taken:
        used |= set(symbols(e))
    name = base
    while name in used:
        name += "_"
    return name


# ---------------------------------------------------------------------------
# coefficient matching


def match_coefficients(L: DiffOp, s: Expr, zero_test: ZeroTest | None = None) -> tuple[DiffOp, Expr]:
    """Solve ``M (D + s) = (D + s) L`` for ``M`` of the same order as ``L``.

    Coefficients of ``D^(n+1) .. D^1`` are equated top-down: at each step the
    known part of ``M`` is composed with ``T`` and the next unknown
    coefficient is read off the difference. What is left in ``D^0`` is
    returned as the constraint ``c_0 - (a_0' + s a_0)``, which vanishes iff
    the pair genuinely intertwines.
    """
    n = L.order
    if n is None or n < 1:
        raise UnsupportedOrder("L must have order at least 1")
    s = as_expr(s)
    T = first_order(s)
    target = op_mul(T, L, zero_test=zero_test)
    b: list[Expr] = [ZERO] * (n + 1)
    for p in range(n + 1, 0, -1):
        partial = DiffOp(b, normalize=False)
        known = op_mul(partial, T, zero_test=zero_test) if any(c != ZERO for c in b) else DiffOp()
        b[p - 1] = expand(sub(target.coeff(p), known.coeff(p)))
    M = DiffOp(b, zero_test=zero_test)
    c0 = op_mul(DiffOp(b, normalize=False), T, zero_test=zero_test).coeff(0)
    constraint = expand(sub(c0, target.coeff(0)))
    return M, constraint


def derive_s_ode(L: DiffOp, zero_test: ZeroTest | None = None) -> tuple[Expr, str]:
    """The ODE on ``s`` (left uninterpreted) making ``D + s`` an intertwiner of ``L``.

    Returns the constraint expression and the symbol name used for ``s``.
    """
    name = _fresh_name("s", *L.coeffs)
    _, constraint = match_coefficients(L, Sym(name, 0, X), zero_test)
    return constraint, name


def riccati_reduce(L: DiffOp, s: Expr | None = None, lam=0) -> Expr:
    """``R(s) - lam`` where ``R(s) = lam`` is the first integral of the s-equation.

    Orders 2 and 3 only. Built by writing ``h^(i)/h`` in terms of
    ``s = -h'/h`` (``P_0 = 1``, ``P_(i+1) = P_i' - s P_i``), so that
    ``h (R(s) - lam) = -(L + lam) h``.
    """
    n = L.order
    if n not in (2, 3):
        raise UnsupportedOrder(f"Riccati reduction is implemented for orders 2 and 3, got {n}")
    if s is None:
        s = Sym(_fresh_name("s", *L.coeffs), 0, X)
    ratios = [ONE]
    for _ in range(n):
        ratios.append(expand(sub(differentiate(ratios[-1]), mul(s, ratios[-1]))))
    R = neg(add(*(mul(a, r) for a, r in zip(L.coeffs, ratios))))
    return expand(sub(R, Const(_rational(lam))))


# ---------------------------------------------------------------------------
# intertwiners from eigenfunctions


@dataclass(frozen=True)
class IntertwiningResult:
    L: DiffOp
    M: DiffOp
    T: DiffOp
    T_conj: DiffOp | None
    s: Expr
    h: Expr
    lam: Fraction
    residual_certificate: Verdict
    conj_certificate: Verdict | None = None

    @property
    def accepted(self) -> bool:
        return self.residual_certificate.zero and (self.conj_certificate is None or self.conj_certificate.zero)

    def to_json(self) -> dict:
        out = {
            "L": self.L.to_json(),
            "M": self.M.to_json(),
            "T": self.T.to_json(),
            "s": print_expr(self.s),
            "h": print_expr(self.h),
            "lambda": str(self.lam),
            "residual_certificate": self.residual_certificate.to_json(),
        }
        if self.T_conj is not None:
            out["T_conj"] = self.T_conj.to_json()
        if self.conj_certificate is not None:
            out["conj_certificate"] = self.conj_certificate.to_json()
        return out


def _require_eigen(L: DiffOp, h: Expr, lam: Fraction, zt: ZeroTest, exc=NotAnEigenfunction) -> None:
    v = zt(spectral_residual(L, h, lam))
    if not v.zero:
        raise exc(f"(L + {lam}) h does not vanish for h = {print_expr(h)} ({v.label()})", v.witness)


def lift_from_eigenfunction(L: DiffOp, h, lam=0, zero_test: ZeroTest | None = None) -> IntertwiningResult:
    """Intertwiner ``T = D - h'/h`` and partner ``M`` for an eigenfunction ``h``."""
    zt = _zt(zero_test)
    h = as_expr(h)
    lam = _rational(lam)
    _require_eigen(L, h, lam, zt)
    check_nonvanishing(h, zt.domain)
    s = simplify(neg(log_derivative(h)))
    T = first_order(s)
    M, _ = match_coefficients(L, s, zt)
    cert = op_equal(op_mul(M, T, zt), op_mul(T, L, zt), zt)
    T_conj = conj_cert = None
    if L.order == 2:
        T_conj = _conjugate(L, s)
        conj_cert = op_equal(op_mul(L, T_conj, zt), op_mul(T_conj, M, zt), zt)
    return IntertwiningResult(L, M, T, T_conj, s, h, lam, cert, conj_cert)


def _conjugate(L: DiffOp, s: Expr) -> DiffOp:
    F, G = L.coeff(2), L.coeff(1)
    return DiffOp([simplify(sub(G, mul(s, F))), F])


def conjugate_intertwiner(result: IntertwiningResult, zero_test: ZeroTest | None = None) -> DiffOp:
    """``T^c = F D + (G - s F)``, which intertwines ``M`` back to ``L``."""
    if result.L.order != 2:
        raise UnsupportedOrder("the conjugate intertwiner is defined for second-order L")
    return _conjugate(result.L, result.s)


def conjugate_identities(result: IntertwiningResult, zero_test: ZeroTest | None = None) -> dict[str, Verdict]:
    """Verdicts for ``L T^c = T^c M``, ``T^c T = L + lam`` and ``T T^c = M + lam``."""
    zt = _zt(zero_test)
    Tc = conjugate_intertwiner(result)
    shift = multiplication(Const(result.lam))
    return {
        "L*Tc == Tc*M": op_equal(op_mul(result.L, Tc, zt), op_mul(Tc, result.M, zt), zt),
        "Tc*T == L + lambda": op_equal(op_mul(Tc, result.T, zt), result.L + shift, zt),
        "T*Tc == M + lambda": op_equal(op_mul(result.T, Tc, zt), result.M + shift, zt),
    }


def factorize(L: DiffOp, h, zero_test: ZeroTest | None = None) -> tuple[DiffOp, DiffOp]:
    """Split ``L = F D^2 + G D + H`` as ``L2 L1`` with ``L1 = D + s``, ``s = -h'/h``, ``L h = 0``."""
    zt = _zt(zero_test)
    if L.order != 2:
        raise UnsupportedOrder("factorize expects a second-order operator")
    h = as_expr(h)
    _require_eigen(L, h, Fraction(0), zt, exc=NotAKernelElement)
    check_nonvanishing(h, zt.domain)
    s = simplify(neg(log_derivative(h)))
    L1 = first_order(s)
    L2 = _conjugate(L, s)
    return L1, L2


# ---------------------------------------------------------------------------
# the Darboux solution map u -> u' - (h'/h) u


def gauge_conjugate(L: DiffOp, g, zero_test: ZeroTest | None = None) -> DiffOp:
    """``g^-1 o L o g``, the operator acting on ``v`` after substituting ``u = g v``."""
    g = as_expr(g)
    zt = _zt(zero_test)
    check_nonvanishing(g, zt.domain)
    inner = op_mul(L, multiplication(g), zt)
    return DiffOp([simplify(div(c, g)) for c in inner.coeffs], zero_test=zt)


def right_divide_by_D(A: DiffOp, zero_test: ZeroTest | None = None) -> DiffOp:
    """``Q`` with ``Q o D = A``; requires the zeroth coefficient of ``A`` to vanish."""
    zt = _zt(zero_test)
    if not A.coeffs:
        return DiffOp()
    v = zt(A.coeff(0))
    if not v.zero:
        raise NotDivisible(f"zeroth coefficient {print_expr(A.coeff(0))} is not zero", v.witness)
    # Q o D = sum q_i D^(i+1): a pure shift, no Leibniz terms on the right
    return DiffOp(A.coeffs[1:], zero_test=zt)


@dataclass(frozen=True)
class DarbouxResult:
    """Operator annihilating ``w = u' - (h'/h) u`` for every ``u`` with ``L u = 0``."""

    L: DiffOp
    h: Expr
    lam: Fraction
    W_op: DiffOp
    gauge_N: DiffOp
    q_op: DiffOp
    constant_certificate: Verdict

    def transform(self, u) -> Expr:
        u = as_expr(u)
        return simplify(sub(differentiate(u), mul(log_derivative(self.h), u)))

    def to_json(self) -> dict:
        return {
            "L": self.L.to_json(),
            "h": print_expr(self.h),
            "lambda": str(self.lam),
            "W_op": self.W_op.to_json(),
            "gauge_N": self.gauge_N.to_json(),
            "q_op": self.q_op.to_json(),
            "constant_certificate": self.constant_certificate.to_json(),
        }


def darboux_transform(L: DiffOp, h, lam=0, zero_test: ZeroTest | None = None) -> DarbouxResult:
    """Build the order-preserving equation for ``w = u' - (h'/h) u``.

    With ``u = h v`` the equation becomes ``N v = 0``, ``N = h^-1 L h``, whose
    zeroth coefficient is the constant ``-lam``. Hence ``D N`` is right
    divisible by ``D``: ``D N = Q D``, and ``q = v'`` satisfies ``Q q = 0``.
    Since ``w = h q`` the result is ``W = h Q h^-1``.
    """
    zt = _zt(zero_test)
    h = as_expr(h)
    lam = _rational(lam)
    _require_eigen(L, h, lam, zt)
    N = gauge_conjugate(L, h, zt)
    const_cert = zt(add(N.coeff(0), Const(lam)))
    Q = right_divide_by_D(op_mul(D, N, zt), zt)
    W = gauge_conjugate(Q, simplify(div(ONE, h)), zt)
    return DarbouxResult(L, h, lam, W, N, Q, const_cert)
