"""Reference closed forms for the order-2 and order-3 intertwiners, and their regression.

The formulas below are kept verbatim, slips included, over generic
coefficients ``a0..a3`` and ``s``. :func:`coefficient_regression` compares
each with what :func:`forge.intertwine.match_coefficients` and
:func:`forge.intertwine.riccati_reduce` derive, and records engine-side
corrections for any mismatch.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnsupportedOrder
from .evaluation import DEFAULT_ZERO_TEST, Verdict, ZeroTest
from .expr import Expr, differentiate, sub, sym
from .intertwine import match_coefficients, riccati_reduce
from .opring import DiffOp
from .parse import parse_expr, print_expr

REFERENCE_FORMULAS: dict[int, dict[str, str]] = {
    2: {
        "b2": "a2",
        "b1": "a2' + a1",
        "b0": "a0 + a1' - s*a2' - 2*a2*s'",
        "s_equation": "a2*s'' - 2*s*s'*a2' - a2'*s^2 + s'*a2' + s'*a1 + s*a1' - a0'",
        "riccati": "a2*(s' - s^2) + a1*s - a0",
    },
    3: {
        "b3": "a3",
        "b2": "a2 + a3'",
        "b1": "a1 + a2' - s*a3' - 3*a3*s'",
        "b0": "a0 + a1' + 3*s'*s*a3 + a3'*s^2 - 2*s'*a3' - 2*s*a2' - 3*a3*s'' - a2'*s",
        "riccati": "a3*(s'' + s^3) - 3*a3*s'*s'' - a2*s^2 + s'*a2 + s*a1 - a0",
    },
}


def generic_operator(order: int) -> DiffOp:
    return DiffOp([sym(f"a{i}") for i in range(order + 1)], normalize=False)


@dataclass(frozen=True)
class RegressionReport:
    """``reference`` compares reference and derived formulas; ``certificates`` are engine self-checks."""

    order: int
    engine: dict[str, Expr]
    reference: dict[str, Verdict]
    certificates: dict[str, Verdict]

    def findings(self) -> list[dict]:
        out = []
        for key, v in self.reference.items():
            if not v.zero:
                out.append(
                    {
                        "check": f"order{self.order}/{key}",
                        "status": v.label(),
                        "reference": REFERENCE_FORMULAS[self.order][key],
                        "corrected": print_expr(self.engine[key]),
                    }
                )
        return out

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "engine": {k: print_expr(v) for k, v in self.engine.items()},
            "reference": {k: v.to_json() for k, v in self.reference.items()},
            "certificates": {k: v.to_json() for k, v in self.certificates.items()},
            "findings": self.findings(),
        }


def coefficient_regression(order: int, zero_test: ZeroTest | None = None) -> RegressionReport:
    if order not in REFERENCE_FORMULAS:
        raise UnsupportedOrder(f"no reference formulas for order {order}")
    zt = zero_test or DEFAULT_ZERO_TEST
    L = generic_operator(order)
    s = sym("s")
    M, constraint = match_coefficients(L, s, zt)
    R = riccati_reduce(L, s)
    engine: dict[str, Expr] = {f"b{i}": M.coeff(i) for i in range(order + 1)}
    engine["riccati"] = R
    if order == 2:
        # the reference s equation is the constraint up to an overall sign
        engine["s_equation"] = constraint
    reference = {}
    for key, text in REFERENCE_FORMULAS[order].items():
        given = parse_expr(text)
        v = zt(sub(given, engine[key]))
        if key == "s_equation" and not v.zero:
            alt = zt(sub(given, -engine[key]))
            v = alt if alt.zero else v
        reference[key] = v
    # the Riccati form must be a first integral of the s equation
    certificates = {
        "riccati_integrates_constraint": _either_sign(zt, differentiate(R), constraint),
        "M_order": zt(sub(M.leading, L.leading)),
    }
    return RegressionReport(order, engine, reference, certificates)


def _either_sign(zt: ZeroTest, a: Expr, b: Expr) -> Verdict:
    v = zt(sub(a, b))
    if v.zero:
        return v
    w = zt(a + b)
    return w if w.zero else v
