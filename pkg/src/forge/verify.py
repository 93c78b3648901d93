"""Grid-based numerical oracles, independent of the sampling zero test.

Everything here works in double precision on explicit grids: residuals of
ODEs and of the Klein-Gordon equation by finite differences, a classical RK4
integrator, and two-grid convergence-order estimates.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import mpmath
import numpy as np

from .errors import DegenerateResidual, SingularLeadingCoefficient, TooManySkipped
from .evaluation import EvalContext, evaluate, evaluate_array
from .expr import Expr, as_expr, differentiate
from .opring import DiffOp, op_apply

SKIP_FRACTION = 0.2
SINGULAR_BOUND = 1e12
NOISE_FLOOR = 1e2 * np.finfo(float).eps


@dataclass(frozen=True)
class Grid1D:
    start: float
    end: float
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("a grid needs at least 3 points")
        if not self.end > self.start:
            raise ValueError("grid end must exceed start")

    @property
    def spacing(self) -> float:
        return (self.end - self.start) / (self.n - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.start, self.end, self.n)

    def refined(self) -> "Grid1D":
        """Same interval, half the spacing."""
        return Grid1D(self.start, self.end, 2 * self.n - 1)

    def to_json(self) -> dict:
        return {"start": self.start, "end": self.end, "n": self.n, "spacing": self.spacing}


@dataclass(frozen=True)
class ResidualReport:
    max: float
    rms: float
    grid: dict
    skipped: int = 0
    order: float | None = None

    def to_json(self) -> dict:
        out = {"max": self.max, "rms": self.rms, "grid": self.grid, "skipped": self.skipped}
        if self.order is not None:
            out["order"] = self.order
        return out


def _report(residual: np.ndarray, grid: dict, total: int) -> ResidualReport:
    """Reduce a residual array; nonfinite entries count as skipped."""
    flat = np.abs(np.ravel(residual))
    ok = np.isfinite(flat)
    skipped = int(total - ok.sum())
    if skipped > SKIP_FRACTION * total:
        raise TooManySkipped(f"{skipped} of {total} points skipped near singularities")
    good = flat[ok]
    if good.size == 0:
        raise TooManySkipped("every point was skipped")
    rms = math.sqrt(math.fsum(float(v) ** 2 for v in good) / good.size)
    return ResidualReport(float(good.max()), rms, grid, skipped)


def ode_residual(coeffs: Sequence, f, grid: Grid1D, precision: int | None = None) -> ResidualReport:
    """``|sum a_i(x) f^(i)(x)|`` on ``grid`` with exact symbolic derivatives of ``f``.

    ``precision=None`` evaluates in double precision; an integer evaluates
    point by point with that many decimal digits. Points where any term is
    nonfinite or larger than ``SINGULAR_BOUND`` are skipped.
    """
    f = as_expr(f)
    cs = [as_expr(c) for c in coeffs]
    derivs = [f]
    for _ in range(len(cs) - 1):
        derivs.append(differentiate(derivs[-1]))
    xs = grid.points
    if precision is None:
        with np.errstate(all="ignore"):
            terms = np.array([evaluate_array(c, xs) * evaluate_array(d, xs) for c, d in zip(cs, derivs)])
    else:
        terms = np.empty((len(cs), xs.size))
        with mpmath.workdps(precision):
            for j, x in enumerate(xs):
                for i, (c, d) in enumerate(zip(cs, derivs)):
                    try:
                        ctx = EvalContext(x=float(x), precision=precision)
                        terms[i, j] = float(evaluate(c, ctx) * evaluate(d, ctx))
                    except (ArithmeticError, ValueError):
                        terms[i, j] = np.nan
    bad = ~np.isfinite(terms).all(axis=0) | (np.abs(terms) > SINGULAR_BOUND).any(axis=0)
    res = np.where(bad, np.nan, terms.sum(axis=0))
    return _report(res, {"x": grid.to_json()}, xs.size)


# ---------------------------------------------------------------------------
# RK4


@dataclass(frozen=True)
class Trajectory:
    xs: np.ndarray
    values: np.ndarray
    slopes: np.ndarray


def rk4_solve(a2, a1, a0, interval: tuple[float, float], initial: tuple[float, float], step: float) -> Trajectory:
    """Integrate ``a2 f'' + a1 f' + a0 f = 0`` by classical RK4 from ``interval[0]``.

    All coefficients are evaluated once, vectorized, at the nodes and
    midpoints the scheme needs.
    """
    a, b = map(float, interval)
    if step <= 0 or b <= a:
        raise ValueError("need step > 0 and a nonempty interval")
    n = max(1, int(round((b - a) / step)))
    h = (b - a) / n
    half = np.linspace(a, b, 2 * n + 1)  # nodes and midpoints
    c2, c1, c0 = (evaluate_array(as_expr(c), half) for c in (a2, a1, a0))
    bad = ~np.isfinite(c2) | (np.abs(c2) < 1e-14)
    if bad.any() or (np.sign(c2[0]) != np.sign(c2)).any():
        idx = int(np.argmax(bad)) if bad.any() else int(np.argmax(np.sign(c2) != np.sign(c2[0])))
        raise SingularLeadingCoefficient(f"leading coefficient vanishes near x = {half[idx]:.6g}", float(half[idx]))
    p, q = -c1 / c2, -c0 / c2  # f'' = p f' + q f

    def rhs(i: int, y: float, z: float) -> tuple[float, float]:
        return z, p[i] * z + q[i] * y

    ys = np.empty(n + 1)
    zs = np.empty(n + 1)
    y, z = map(float, initial)
    ys[0], zs[0] = y, z
    for k in range(n):
        i = 2 * k
        k1 = rhs(i, y, z)
        k2 = rhs(i + 1, y + h / 2 * k1[0], z + h / 2 * k1[1])
        k3 = rhs(i + 1, y + h / 2 * k2[0], z + h / 2 * k2[1])
        k4 = rhs(i + 2, y + h * k3[0], z + h * k3[1])
        y += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        z += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        ys[k + 1], zs[k + 1] = y, z
    return Trajectory(half[::2].copy(), ys, zs)


def rk4_against(f, a2, a1, a0, interval: tuple[float, float], step: float) -> float:
    """Max deviation between the RK4 trajectory and the closed form ``f``, started from ``f``'s values."""
    f = as_expr(f)
    a = float(interval[0])
    x0 = np.array([a])
    ic = (float(evaluate_array(f, x0)[0]), float(evaluate_array(differentiate(f), x0)[0]))
    traj = rk4_solve(a2, a1, a0, interval, ic, step)
    return float(np.max(np.abs(traj.values - evaluate_array(f, traj.xs))))


# ---------------------------------------------------------------------------
# PDE residual


def pde_fd_residual(
    field,
    W,
    t_grid: Grid1D,
    x_grid: Grid1D,
    csv_path: str | Path | None = None,
) -> ResidualReport:
    """Interior central-difference residual ``|D_tt v - D_xx v - W v|``.

    ``field`` is anything with ``evaluate(t, x)`` returning values on the
    tensor grid, such as :class:`forge.kleingordon.SolutionField`.
    """
    ts, xs = t_grid.points, x_grid.points
    v = np.asarray(field.evaluate(ts, xs), dtype=float)
    dt, dx = t_grid.spacing, x_grid.spacing
    with np.errstate(all="ignore"):
        w = evaluate_array(as_expr(W), xs[1:-1])
        vtt = (v[2:, 1:-1] - 2 * v[1:-1, 1:-1] + v[:-2, 1:-1]) / dt**2
        vxx = (v[1:-1, 2:] - 2 * v[1:-1, 1:-1] + v[1:-1, :-2]) / dx**2
        res = vtt - vxx - w[None, :] * v[1:-1, 1:-1]
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["t", "x", "v", "residual"])
            for i, t in enumerate(ts[1:-1]):
                for j, x in enumerate(xs[1:-1]):
                    out.writerow([repr(float(t)), repr(float(x)), repr(float(v[i + 1, j + 1])), repr(float(res[i, j]))])
    grid = {"t": t_grid.to_json(), "x": x_grid.to_json()}
    return _report(res, grid, res.size)


def convergence_order(coarse: ResidualReport, fine: ResidualReport) -> float:
    """``log2(max_coarse / max_fine)`` for a halving of the spacing."""
    if coarse.max < NOISE_FLOOR or fine.max < NOISE_FLOOR:
        raise DegenerateResidual("exact")
    return math.log2(coarse.max / fine.max)


def pde_convergence(field, W, t_grid: Grid1D, x_grid: Grid1D) -> tuple[ResidualReport, ResidualReport]:
    """Residuals on a grid pair; the fine report carries the estimated order."""
    coarse = pde_fd_residual(field, W, t_grid, x_grid)
    fine = pde_fd_residual(field, W, t_grid.refined(), x_grid.refined())
    try:
        order = convergence_order(coarse, fine)
    except DegenerateResidual:
        order = None
    return coarse, replace(fine, order=order)


def intertwine_numeric_check(L: DiffOp, M: DiffOp, T: DiffOp, probes: Sequence, grid: Grid1D) -> ResidualReport:
    """Max over probes of ``|M(T u) - T(L u)|`` on the grid.

    The operators are applied one after another to each probe, so no
    operator composition is involved.
    """
    xs = grid.points
    rows = []
    for u in probes:
        u = as_expr(u)
        lhs = op_apply(M, op_apply(T, u))
        rhs = op_apply(T, op_apply(L, u))
        with np.errstate(all="ignore"):
            rows.append(evaluate_array(lhs, xs) - evaluate_array(rhs, xs))
    res = np.abs(np.array(rows))
    # a grid point counts once; it is skipped if any probe is nonfinite there
    worst = np.where(np.isfinite(res).all(axis=0), res.max(axis=0), np.nan)
    return _report(worst, {"x": grid.to_json()}, xs.size)
