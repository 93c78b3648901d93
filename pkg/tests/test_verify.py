import csv
import math

import numpy as np
import pytest

from forge.errors import DegenerateResidual, SingularLeadingCoefficient, TooManySkipped
from forge.expr import ONE, ZERO
from forge.intertwine import lift_from_eigenfunction
from forge.kleingordon import kg_step, transform_solution, wave_seed, weber_solution
from forge.opring import D, IDENTITY, DiffOp
from forge.parse import parse_expr as P
from forge.verify import (
    Grid1D,
    ResidualReport,
    convergence_order,
    intertwine_numeric_check,
    ode_residual,
    pde_convergence,
    pde_fd_residual,
    rk4_against,
    rk4_solve,
)

UNIT = Grid1D(1, 2, 101)
PROBES = [P("x^3"), P("sin(x)"), P("exp(x)")]


def test_grid_validation():
    g = Grid1D(0, 1, 5)
    assert g.spacing == 0.25 and list(g.points) == [0, 0.25, 0.5, 0.75, 1]
    assert g.refined().spacing == 0.125
    with pytest.raises(ValueError):
        Grid1D(0, 1, 2)
    with pytest.raises(ValueError):
        Grid1D(1, 1, 10)


def test_ode_residual_examples():
    assert ode_residual([ZERO, ZERO, ONE], P("x+1"), UNIT).max <= 1e-12
    assert ode_residual([P("-1"), ZERO, ONE], P("cosh(x)"), UNIT, precision=30).max <= 1e-12
    rep = ode_residual([P("5/2 - x^2/4"), ZERO, ONE], weber_solution(2), Grid1D(-2, 2, 101))
    assert rep.max <= 1e-10 and rep.rms <= rep.max


def test_ode_residual_skips_singular_points():
    rep = ode_residual([P("1/x"), ZERO, ONE], P("x"), Grid1D(-1, 1, 101))
    assert rep.skipped == 1
    with pytest.raises(TooManySkipped):
        ode_residual([P("ln(x)")], ONE, Grid1D(-1, 1, 11))


def test_rk4_sine():
    traj = rk4_solve(ONE, ZERO, ONE, (0, 1), (0, 1), 1e-3)
    assert abs(traj.values[-1] - math.sin(1)) < 1e-9
    assert abs(traj.slopes[-1] - math.cos(1)) < 1e-9


def test_rk4_against_closed_form():
    assert rk4_against(P("(x+1)^2"), ONE, ZERO, P("-2/(x+1)^2"), (1, 2), 1e-3) < 1e-8
    assert rk4_against(P("cosh(x)"), ONE, ZERO, P("-1"), (1, 2), 1e-3) < 1e-8


def test_rk4_singular_leading_coefficient():
    with pytest.raises(SingularLeadingCoefficient):
        rk4_solve(P("x"), ZERO, ONE, (-1, 1), (0, 1), 1e-3)
    with pytest.raises(ValueError):
        rk4_solve(ONE, ZERO, ONE, (0, 1), (0, 1), -1)


class _Wave:
    """sin(t + x), a solution of the free wave equation."""

    def evaluate(self, t, x):
        return np.sin(np.add.outer(t, x))


def test_wave_equation_converges_at_order_two():
    coarse, fine = pde_convergence(_Wave(), ZERO, Grid1D(0, 1, 21), Grid1D(0, 1.5, 21))
    assert fine.order == pytest.approx(2.0, abs=0.3)
    # equal spacings make the central scheme exact for the free wave equation
    exact = pde_fd_residual(_Wave(), ZERO, Grid1D(0, 1, 21), Grid1D(0, 1, 21))
    assert exact.max < 1e-10


def test_inverse_square_node_converges_and_corruption_does_not():
    node = kg_step(ZERO, P("x+1"), 0)
    v = transform_solution(node, wave_seed())
    t, x = Grid1D(0, 1, 33), Grid1D(2, 3, 33)
    _, fine = pde_convergence(v, node.W, t, x)
    assert fine.order == pytest.approx(2.0, abs=0.3)
    bad_c, bad_f = pde_convergence(v, node.W + ONE, t, x)
    assert bad_f.max > 0.1 and abs(bad_f.order) < 0.5


def test_pde_csv_dump(tmp_path):
    path = tmp_path / "fd.csv"
    pde_fd_residual(_Wave(), ZERO, Grid1D(0, 1, 5), Grid1D(0, 1, 6), path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "x", "v", "residual"]
    assert len(rows) == 1 + 3 * 4


def test_convergence_order_arithmetic():
    def r(m):
        return ResidualReport(m, m, {})

    assert convergence_order(r(4e-4), r(1e-4)) == pytest.approx(2.0)
    assert convergence_order(r(8e-4), r(1e-4)) == pytest.approx(3.0)
    with pytest.raises(DegenerateResidual) as info:
        convergence_order(r(1e-15), r(1e-15))
    assert str(info.value) == "exact"


def test_intertwine_numeric_check():
    L = DiffOp([ZERO, ZERO, ONE])
    res = lift_from_eigenfunction(L, P("x+1"), 0)
    assert intertwine_numeric_check(res.L, res.M, res.T, PROBES, UNIT).max <= 1e-10
    assert intertwine_numeric_check(res.L, res.M, D, PROBES, UNIT).max > 0.1
    assert intertwine_numeric_check(L, L, IDENTITY, PROBES, UNIT).max == 0


def test_cross_oracle_consistency_on_catalog():
    from forge.kleingordon import catalog, validate_entry

    for entry in catalog():
        r = validate_entry(entry)
        grid = Grid1D(entry.domain[0], entry.domain[1], 51)
        L = DiffOp([entry.V, ZERO, ONE])
        M = DiffOp([r.node.W, ZERO, ONE])
        T = DiffOp([r.node.s, ONE])
        assert r.certificates["lift"].zero
        assert intertwine_numeric_check(L, M, T, PROBES, grid).max <= 1e-8, entry.name
