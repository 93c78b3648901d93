"""Darboux steps for the Klein-Gordon operator ``D_t^2 - D_x^2 - V(x)``.

An eigenfunction ``h`` with ``h'' + (V + lam) h = 0`` gives the intertwiner
``T = D_x - h'/h`` between ``D_x^2 + V`` and ``D_x^2 + W``, ``W = V + 2 (ln h)''``.
``T`` does not involve ``t`` and so commutes with ``D_t^2``; it therefore maps
solutions of ``u_tt = u_xx + V u`` to solutions of ``v_tt = v_xx + W v``.

Two-variable solutions are kept structurally as :class:`SolutionField`
objects: finite sums of ``c(x) X^(m)(t + x)`` and ``c(x) Y^(m)(x - t)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ChainError, ForgeError, LimitExceeded, NotAnEigenfunction, QuantizationMismatch
from .evaluation import DEFAULT_ZERO_TEST, Status, Verdict, ZeroTest, evaluate_array
from .expr import (
    ONE,
    ZERO,
    Const,
    Expr,
    X,
    add,
    as_expr,
    cos,
    cosh,
    differentiate,
    div,
    exp,
    expand,
    mul,
    neg,
    polynomial,
    power,
    replace_functions,
    simplify,
    sin,
    sinh,
    sub,
)
from .intertwine import check_nonvanishing, lift_from_eigenfunction, log_derivative
from .opring import DiffOp, op_equal
from .parse import parse_expr, print_expr

BASES = ("X", "Y")


# ---------------------------------------------------------------------------
# solution fields


@dataclass(frozen=True)
class SolutionField:
    """``sum c(x) X^(m)(t+x) + sum c(x) Y^(m)(x-t)``.

    ``terms`` maps ``(basis, m)`` to the coefficient; ``profiles`` holds the
    concrete ``X`` and ``Y`` as expressions in the placeholder variable
    ``x``. Profiles only matter for numeric evaluation.
    """

    terms: Mapping[tuple[str, int], Expr]
    profiles: Mapping[str, Expr] = field(default_factory=dict)

    @classmethod
    def build(cls, pairs: Iterable[tuple[tuple[str, int], Expr]], profiles: Mapping[str, Expr]) -> "SolutionField":
        acc: dict[tuple[str, int], list[Expr]] = {}
        for key, c in pairs:
            acc.setdefault(key, []).append(c)
        terms = {}
        for key in sorted(acc):
            c = simplify(add(*acc[key]))
            if c != ZERO:
                terms[key] = c
        return cls(terms, dict(profiles))

    def _pairs(self):
        return list(self.terms.items())

    def dx(self) -> "SolutionField":
        pairs = []
        for (b, m), c in self._pairs():
            pairs.append(((b, m), differentiate(c)))
            pairs.append(((b, m + 1), c))
        return SolutionField.build(pairs, self.profiles)

    def dt(self) -> "SolutionField":
        # d/dt X(t+x) = X', d/dt Y(x-t) = -Y'
        pairs = [((b, m + 1), c if b == "X" else neg(c)) for (b, m), c in self._pairs()]
        return SolutionField.build(pairs, self.profiles)

    def scale(self, f) -> "SolutionField":
        f = as_expr(f)
        return SolutionField.build([(k, mul(f, c)) for k, c in self._pairs()], self.profiles)

    def __add__(self, other: "SolutionField") -> "SolutionField":
        return SolutionField.build(self._pairs() + other._pairs(), {**other.profiles, **self.profiles})

    def __neg__(self) -> "SolutionField":
        return self.scale(Const(-1))

    def __sub__(self, other: "SolutionField") -> "SolutionField":
        return self + (-other)

    def __len__(self) -> int:
        return len(self.terms)

    def with_profiles(self, X_profile, Y_profile) -> "SolutionField":
        return SolutionField(dict(self.terms), {"X": as_expr(X_profile), "Y": as_expr(Y_profile)})

    def profile_derivative(self, basis: str, m: int) -> Expr:
        try:
            p = self.profiles[basis]
        except KeyError:
            raise ValueError(f"no profile bound for {basis}") from None
        return differentiate(p, m)

    def evaluate(self, t, x) -> np.ndarray:
        """Values on the tensor grid ``t`` (rows) by ``x`` (columns), double precision."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros((t.size, x.size))
        with np.errstate(all="ignore"):
            for (b, m), c in self.terms.items():
                cx = evaluate_array(c, x)
                arg = t[:, None] + x[None, :] if b == "X" else x[None, :] - t[:, None]
                prof = evaluate_array(self.profile_derivative(b, m), arg.ravel()).reshape(arg.shape)
                out += cx[None, :] * prof
        return out

    def to_json(self) -> dict:
        return {
            "terms": [{"basis": b, "m": m, "coeff": print_expr(c)} for (b, m), c in self.terms.items()],
            "profiles": {k: print_expr(v) for k, v in sorted(self.profiles.items())},
        }


def wave_seed(X_profile="exp(-x^2)", Y_profile="sin(x)") -> SolutionField:
    """d'Alembert solution ``X(t+x) + Y(x-t)`` of ``u_tt = u_xx``."""
    Xp = parse_expr(X_profile) if isinstance(X_profile, str) else as_expr(X_profile)
    Yp = parse_expr(Y_profile) if isinstance(Y_profile, str) else as_expr(Y_profile)
    return SolutionField({("X", 0): ONE, ("Y", 0): ONE}, {"X": Xp, "Y": Yp})


def field_residual(v: SolutionField, potential: Expr) -> dict[tuple[str, int], Expr]:
    """Coefficients of ``v_tt - v_xx - potential * v`` grouped by ``(basis, m)``."""
    r = v.dt().dt() - v.dx().dx() - v.scale(potential)
    return {k: expand(c) for k, c in r.terms.items()}


# ---------------------------------------------------------------------------
# chain nodes


@dataclass(frozen=True)
class KGChainNode:
    V: Expr
    h: Expr
    lam: Fraction
    W: Expr
    s: Expr
    parent: "KGChainNode | None"
    depth: int
    eigen_certificate: Verdict
    lift_certificate: Verdict
    provenance: str = "user"

    @property
    def valid(self) -> bool:
        return self.eigen_certificate.zero and self.lift_certificate.zero

    def to_json(self) -> dict:
        return {
            "V": print_expr(self.V),
            "h": print_expr(self.h),
            "lambda": str(self.lam),
            "W": print_expr(self.W),
            "s": print_expr(self.s),
            "depth": self.depth,
            "eigen_certificate": self.eigen_certificate.to_json(),
            "lift_certificate": self.lift_certificate.to_json(),
            "provenance": self.provenance,
        }


def new_potential(V: Expr, h: Expr) -> Expr:
    """``V + 2 (ln h)''``."""
    return simplify(add(V, mul(Const(2), differentiate(log_derivative(h)))))


def kg_step(
    V,
    h,
    lam=0,
    parent: KGChainNode | None = None,
    zero_test: ZeroTest | None = None,
    provenance: str = "user",
) -> KGChainNode:
    """One Darboux step ``V -> V + 2 (ln h)''``.

    The new potential is cross-checked against the partner operator produced
    by :func:`forge.intertwine.lift_from_eigenfunction` for ``D^2 + V``.
    """
    zt = zero_test or DEFAULT_ZERO_TEST
    V, h, lam = as_expr(V), as_expr(h), Fraction(lam)
    if parent is not None and parent.W != V:
        raise ValueError("V must be the parent's new potential")
    eigen = zt(add(differentiate(h, 2), mul(add(V, Const(lam)), h)))
    if not eigen.zero:
        raise NotAnEigenfunction(
            f"h'' + (V + {lam}) h does not vanish for h = {print_expr(h)} ({eigen.label()})", eigen.witness
        )
    check_nonvanishing(h, zt.domain)
    W = new_potential(V, h)
    lift = lift_from_eigenfunction(DiffOp([V, ZERO, ONE], zero_test=zt), h, lam, zt)
    lift_cert = op_equal(lift.M, DiffOp([W, ZERO, ONE], normalize=False), zt)
    if lift_cert.zero and not lift.residual_certificate.zero:
        lift_cert = lift.residual_certificate
    depth = 0 if parent is None else parent.depth + 1
    return KGChainNode(V, h, lam, W, lift.s, parent, depth, eigen, lift_cert, provenance)


def transform_solution(node: KGChainNode, u: SolutionField) -> SolutionField:
    """``v = u_x + s u`` with ``s = -h'/h``."""
    return u.dx() + u.scale(node.s)


def kg_residual_expr(node: KGChainNode, v: SolutionField) -> dict[tuple[str, int], Expr]:
    """Grouped coefficients of ``v_tt - v_xx - W v``; all vanish for a transported solution."""
    return field_residual(v, node.W)


def residual_verdicts(residual: Mapping[tuple[str, int], Expr], zero_test: ZeroTest | None = None) -> dict[str, Verdict]:
    zt = zero_test or DEFAULT_ZERO_TEST
    return {f"{b}{m}": zt(c) for (b, m), c in residual.items()}


def all_zero(verdicts: Mapping[str, Verdict]) -> bool:
    return all(v.zero for v in verdicts.values())


def chain(seed_V, steps: Sequence[tuple[object, object]], zero_test: ZeroTest | None = None) -> list[KGChainNode]:
    """Fold :func:`kg_step` over ``steps`` starting from ``seed_V``."""
    nodes: list[KGChainNode] = []
    V = as_expr(seed_V)
    for i, (h, lam) in enumerate(steps):
        try:
            node = kg_step(V, h, lam, nodes[-1] if nodes else None, zero_test)
        except ForgeError as exc:
            raise ChainError(i, exc) from exc
        nodes.append(node)
        V = node.W
    return nodes


def transport(nodes: Sequence[KGChainNode], u: SolutionField) -> SolutionField:
    """Push a solution of the seed equation through every node of a chain."""
    for node in nodes:
        u = transform_solution(node, u)
    return u


# ---------------------------------------------------------------------------
# catalog of exactly solvable steps


@dataclass(frozen=True)
class CatalogEntry:
    """A known potential ``V``, eigenfunction ``h`` and reference data.

    ``basis`` lists the independent eigenfunctions combined in ``h``;
    ``expected_W`` and ``expected_s`` are reference closed forms (None when
    none is available); ``seed_steps`` lead from ``V = 0`` to ``V`` so a
    solution of the ``V`` equation can be transported from the wave equation.
    """

    name: str
    V: Expr
    h: Expr
    lam: Fraction
    domain: tuple[float, float]
    basis: tuple[Expr, ...] = ()
    expected_W: Expr | None = None
    expected_s: Expr | None = None
    seed_steps: tuple[tuple[Expr, Fraction], ...] = ()
    corrected_W: Expr | None = None
    corrected_s: Expr | None = None
    description: str = ""

    def seed_solution(self, X_profile="exp(-x^2)", Y_profile="sin(x)", zero_test: ZeroTest | None = None) -> SolutionField:
        zt = (zero_test or DEFAULT_ZERO_TEST).with_domain(self.domain)
        u = wave_seed(X_profile, Y_profile)
        return transport(chain(ZERO, self.seed_steps, zt), u)


def _c(v) -> Const:
    return Const(Fraction(v))


def inverse_square_entry(b=1) -> CatalogEntry:
    xb = add(X, _c(b))
    return CatalogEntry(
        name="inverse-square",
        V=ZERO,
        h=xb,
        lam=Fraction(0),
        domain=(1.0, 2.0),
        basis=(xb,),
        expected_W=div(_c(-2), power(xb, 2)),
        expected_s=div(_c(-1), xb),
        description="V = 0, h = x + b, lambda = 0",
    )


def _hyperbolic_parts(k, c0, c1, ksq, fns):
    """h, reference W and reference solution-map coefficient for the (c0, c1, k) family."""
    f_odd, f_even = fns
    kx = mul(_c(k), X)
    h = add(mul(_c(c0), f_odd(kx)), mul(_c(c1), f_even(kx)))
    W = div(mul(_c(2), _c(ksq), _c(Fraction(c1) ** 2 - Fraction(c0) ** 2)), power(h, 2))
    s = neg(mul(_c(k), div(add(mul(_c(c0), f_even(kx)), mul(_c(c1), f_odd(kx))), h)))
    return h, W, s


def hyperbolic_entry(k=1, c0=0, c1=1) -> CatalogEntry:
    k = Fraction(k)
    h, W, s = _hyperbolic_parts(k, c0, c1, k * k, (sinh, cosh))
    return CatalogEntry(
        name=f"hyperbolic(k={k},c0={c0},c1={c1})",
        V=ZERO,
        h=h,
        lam=-k * k,
        domain=(1.0, 2.0),
        basis=(sinh(mul(_c(k), X)), cosh(mul(_c(k), X))),
        expected_W=simplify(W),
        expected_s=simplify(s),
        description="V = 0, h = c0 sinh(kx) + c1 cosh(kx), lambda = -k^2",
    )


def trigonometric_entry(k=1, c0=0, c1=1) -> CatalogEntry:
    """The hyperbolic entry with sinh -> sin, cosh -> cos and k^2 -> -k^2.

    The replacement is applied mechanically to the reference formulas; the
    entry is then revalidated like any other. ``corrected_*`` carry the
    closed forms obtained by direct differentiation.
    """
    k = Fraction(k)
    hyp = _hyperbolic_parts(k, c0, c1, -k * k, (sinh, cosh))
    swap = {"sinh": "sin", "cosh": "cos"}
    h, W, s = (simplify(replace_functions(e, swap)) for e in hyp)
    kx = mul(_c(k), X)
    corrected_W = simplify(div(mul(_c(-2 * k * k), _c(Fraction(c0) ** 2 + Fraction(c1) ** 2)), power(h, 2)))
    corrected_s = simplify(neg(mul(_c(k), div(sub(mul(_c(c0), cos(kx)), mul(_c(c1), sin(kx))), h))))
    return CatalogEntry(
        name=f"trigonometric(k={k},c0={c0},c1={c1})",
        V=ZERO,
        h=h,
        lam=k * k,
        domain=(0.1, 1.2),
        basis=(sin(kx), cos(kx)),
        expected_W=W,
        expected_s=s,
        corrected_W=corrected_W,
        corrected_s=corrected_s,
        description="hyperbolic family with hyperbolic functions replaced by trigonometric ones",
    )


def inverse_square_lambda0_entry(b=1, c1=1, c2=1) -> CatalogEntry:
    xb = add(X, _c(b))
    basis = (power(xb, 2), div(ONE, xb))
    h = add(mul(_c(c1), basis[0]), mul(_c(c2), basis[1]))
    expected = None
    if Fraction(c1) == 1 and Fraction(c2) == 1:
        # hand-derived: with y = x + b, W = 6 y (2 - y^3) / (y^3 + 1)^2
        y3 = power(xb, 3)
        expected = div(mul(_c(6), xb, sub(_c(2), y3)), power(add(y3, ONE), 2))
    return CatalogEntry(
        name="inverse-square-lambda0",
        V=div(_c(-2), power(xb, 2)),
        h=h,
        lam=Fraction(0),
        domain=(1.0, 2.0),
        basis=basis,
        expected_W=expected,
        seed_steps=((xb, Fraction(0)),),
        description="V = -2/(x+b)^2, h = c1 (x+b)^2 + c2/(x+b), lambda = 0",
    )


def inverse_square_negative_entry(m=1, b=1, c1=1, c2=1) -> CatalogEntry:
    m = Fraction(m)
    xb = add(X, _c(b))
    mx = mul(_c(m), X)
    basis = (
        mul(exp(mx), sub(_c(m * m), div(_c(m), xb))),
        mul(exp(neg(mx)), add(_c(m * m), div(_c(m), xb))),
    )
    h = add(mul(_c(c1), basis[0]), mul(_c(c2), basis[1]))
    return CatalogEntry(
        name="inverse-square-lambda-neg",
        V=div(_c(-2), power(xb, 2)),
        h=h,
        lam=-m * m,
        domain=(1.0, 2.0),
        basis=basis,
        seed_steps=((xb, Fraction(0)),),
        description="V = -2/(x+b)^2, lambda = -m^2 with exponential eigenfunctions",
    )


def sinh_inverse_square_entry(c1=1, c2=Fraction(-1, 4)) -> CatalogEntry:
    two_x = mul(_c(2), X)
    ch = cosh(two_x)
    basis = (
        sub(ch, ONE),
        div(mul(sinh(two_x), sub(ch, _c(2))), sub(ch, ONE)),
    )
    h = add(mul(_c(c1), basis[0]), mul(_c(c2), basis[1]))
    return CatalogEntry(
        name="sinh-inverse-square-A2",
        V=div(_c(-2), power(sinh(X), 2)),
        h=h,
        lam=Fraction(-4),
        domain=(0.3, 1.2),
        basis=basis,
        seed_steps=((sinh(X), Fraction(-1)),),
        description="V = -2/sinh(x)^2, h'' - (2/sinh(x)^2 + A^2) h = 0 with A = 2",
    )


def catalog() -> list[CatalogEntry]:
    return [
        inverse_square_entry(),
        hyperbolic_entry(1, 0, 1),
        hyperbolic_entry(1, 1, 2),
        trigonometric_entry(1, 0, 1),
        trigonometric_entry(1, 1, 2),
        inverse_square_lambda0_entry(),
        inverse_square_negative_entry(),
        sinh_inverse_square_entry(),
    ]


@dataclass(frozen=True)
class EntryValidation:
    """Outcome of validating one catalog entry.

    ``certificates`` are the engine's own consistency checks; ``reference``
    compares the entry's reference formulas with what the engine derives.
    A failing reference check flags the entry without invalidating it.
    """

    entry: CatalogEntry
    certificates: dict[str, Verdict]
    reference: dict[str, Verdict]
    findings: list[dict]
    node: KGChainNode | None

    @property
    def engine_ok(self) -> bool:
        return all_zero(self.certificates)

    @property
    def status(self) -> str:
        if not self.engine_ok:
            return "failed"
        return "validated" if all_zero(self.reference) else "flagged"

    def to_json(self) -> dict:
        return {
            "name": self.entry.name,
            "status": self.status,
            "V": print_expr(self.entry.V),
            "h": print_expr(self.entry.h),
            "lambda": str(self.entry.lam),
            "W": print_expr(self.node.W) if self.node else None,
            "certificates": {k: v.to_json() for k, v in self.certificates.items()},
            "reference": {k: v.to_json() for k, v in self.reference.items()},
            "findings": self.findings,
        }


def validate_entry(entry: CatalogEntry, zero_test: ZeroTest | None = None) -> EntryValidation:
    zt = (zero_test or DEFAULT_ZERO_TEST).with_domain(entry.domain)
    certificates: dict[str, Verdict] = {}
    reference: dict[str, Verdict] = {}
    findings: list[dict] = []

    def eigen(e: Expr) -> Verdict:
        return zt(add(differentiate(e, 2), mul(add(entry.V, Const(entry.lam)), e)))

    for i, b in enumerate(entry.basis):
        reference[f"eigenfunction[{i}]"] = eigen(b)
    reference["eigenfunction"] = eigen(entry.h)
    for key, v in reference.items():
        if not v.zero:
            findings.append({"entry": entry.name, "check": key, "status": v.label(), "expression": print_expr(entry.h)})

    node = None
    if reference["eigenfunction"].zero:
        node = kg_step(entry.V, entry.h, entry.lam, zero_test=zt, provenance=entry.name)
        certificates["lift"] = node.lift_certificate
        seed = entry.seed_solution(zero_test=zt)
        certificates["seed_solution"] = Verdict(
            Status.ZERO if all_zero(residual_verdicts(field_residual(seed, entry.V), zt)) else Status.NONZERO
        )
        moved = transform_solution(node, seed)
        certificates["transported_solution"] = Verdict(
            Status.ZERO if all_zero(residual_verdicts(kg_residual_expr(node, moved), zt)) else Status.NONZERO
        )
        for label, given, engine, corrected in (
            ("potential", entry.expected_W, node.W, entry.corrected_W),
            ("solution_map", entry.expected_s, node.s, entry.corrected_s),
        ):
            if given is None:
                continue
            v = zt(sub(given, engine))
            reference[label] = v
            if not v.zero:
                finding = {
                    "entry": entry.name,
                    "check": label,
                    "status": v.label(),
                    "reference": print_expr(given),
                    "engine": print_expr(engine),
                }
                if corrected is not None:
                    finding["corrected"] = print_expr(corrected)
                    finding["corrected_status"] = zt(sub(corrected, engine)).label()
                findings.append(finding)
    else:
        certificates["lift"] = Verdict(Status.INCONCLUSIVE)
    return EntryValidation(entry, certificates, reference, findings, node)


# ---------------------------------------------------------------------------
# separated solutions of u_tt = u_xx + (k - x^2/4) u

WEBER_MAX_N = 12


def weber_solution(n: int) -> Expr:
    """``(-1)^n e^(x^2/4) d^n/dx^n e^(-x^2/2)`` in the form ``P_n(x) e^(-x^2/4)``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > WEBER_MAX_N:
        raise LimitExceeded(f"n = {n} exceeds the limit {WEBER_MAX_N}")
    # d^k/dx^k e^(-x^2/2) = P_k(x) e^(-x^2/2) with P_(k+1) = P_k' - x P_k
    p = [Fraction(1)]
    for _ in range(n):
        dp = [i * c for i, c in enumerate(p)][1:] + [Fraction(0), Fraction(0)]
        xp = [Fraction(0)] + p
        p = [a - b for a, b in zip(dp, xp)]
    sign = -1 if n % 2 else 1
    return mul(polynomial([sign * c for c in p]), exp(mul(Const(Fraction(-1, 4)), power(X, 2))))


def weber_formula(n: int) -> Expr:
    """The unsimplified defining formula, kept as an independent check on :func:`weber_solution`."""
    g = exp(mul(Const(Fraction(-1, 2)), power(X, 2)))
    return mul(Const((-1) ** n), exp(mul(Const(Fraction(1, 4)), power(X, 2))), differentiate(g, n))


@dataclass(frozen=True)
class SeparatedSolution:
    """``u(t, x) = T(t) X(x)``; ``T_part`` holds two independent time factors.

    Time factors are expressions in the placeholder variable ``x`` standing
    for ``t``. ``sign`` is the sign of ``lam`` in the X equation
    ``X'' + (k + sign*lam - x^2/4) X = 0``.
    """

    k: Fraction
    lam: Fraction
    n: int
    X_part: Expr
    T_part: tuple[Expr, Expr]
    sign: int = -1

    def _x_equation(self, shift: Fraction) -> Expr:
        quarter = mul(Const(Fraction(1, 4)), power(X, 2))
        return add(differentiate(self.X_part, 2), mul(sub(Const(shift), quarter), self.X_part))

    def certificates(self, zero_test: ZeroTest | None = None) -> dict[str, Verdict]:
        """The two separated ODEs, each checked on its own."""
        zt = zero_test or ZeroTest(domain=(-2.0, 2.0))
        out = {"X": zt(self._x_equation(self.k + self.sign * self.lam))}
        for i, T in enumerate(self.T_part):
            out[f"T{i}"] = zt(add(differentiate(T, 2), mul(Const(self.lam), T)))
        return out

    def pde_certificate(self, zero_test: ZeroTest | None = None) -> Verdict:
        """Whether ``T X`` solves ``u_tt = u_xx + (k - x^2/4) u``.

        With ``T'' = -lam T`` the residual is ``-T (X'' + (k + lam - x^2/4) X)``,
        a function of ``x`` alone.
        """
        zt = zero_test or ZeroTest(domain=(-2.0, 2.0))
        return zt(self._x_equation(self.k + self.lam))

    def evaluate(self, t, x, weights=(1, 0)) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x = np.atleast_1d(np.asarray(x, dtype=float))
        T = sum(float(w) * evaluate_array(e, t) for w, e in zip(weights, self.T_part))
        return np.outer(T, evaluate_array(self.X_part, x))

    def to_json(self) -> dict:
        return {
            "k": str(self.k),
            "lambda": str(self.lam),
            "n": self.n,
            "X_part": print_expr(self.X_part),
            "T_part": [print_expr(e) for e in self.T_part],
            "x_equation_shift": "k + lambda" if self.sign > 0 else "k - lambda",
        }


def separated_solution(k, lam, consistent: bool = False) -> SeparatedSolution:
    """Separated solution with ``T'' + lam T = 0`` and a Weber profile for ``X``.

    By default ``X`` solves ``X'' + (k - lam - x^2/4) X = 0`` and the
    quantization is ``k - lam = n + 1/2``. That product solves
    ``u_tt = u_xx + (k - x^2/4) u`` only when ``lam = 0``; with
    ``consistent=True`` the X equation uses ``k + lam`` instead, which
    makes the product an exact solution for every ``lam``.
    """
    k, lam = Fraction(k), Fraction(lam)
    sign = 1 if consistent else -1
    n = k + sign * lam - Fraction(1, 2)
    if n.denominator != 1 or n < 0:
        label = "k + lambda" if consistent else "k - lambda"
        raise QuantizationMismatch(f"{label} = {n + Fraction(1, 2)} is not n + 1/2 for a nonnegative integer n")
    n_int = int(n)
    if lam > 0:
        w = mul(power(Const(lam), Fraction(1, 2)), X)
        T = (cos(w), sin(w))
    elif lam == 0:
        T = (ONE, X)
    else:
        w = mul(power(Const(-lam), Fraction(1, 2)), X)
        T = (cosh(w), sinh(w))
    return SeparatedSolution(k, lam, n_int, weber_solution(n_int), T, sign)
