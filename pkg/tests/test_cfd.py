import numpy as np
import pytest

from stencilflow.cfd import (burgers_operators, convection_step_operator, dipole, hat,
                             poisson_iterate, poisson_residual, within_bounds)
from stencilflow.errors import ParameterError, StabilityError
from stencilflow.symbolic.functions import Grid


@pytest.fixture
def grid():
    return Grid((41, 41), extent=(2.0, 2.0))


def test_convection_constant_field_unchanged(grid):
    case = convection_step_operator(1.0, grid, 0.2 * grid.spacing[0])
    case.set_initial(u=np.ones(grid.shape))
    case.run(25)
    assert np.array_equal(case.current("u"), np.ones(grid.shape))


def test_convection_zero_speed_is_identity(grid):
    case = convection_step_operator(0.0, grid, 0.01)
    u0 = hat(grid)
    case.set_initial(u=u0)
    case.run(10)
    assert np.array_equal(case.current("u"), u0)


def test_convection_maximum_principle(grid):
    # largest stable step: both axes together use the whole Courant budget
    case = convection_step_operator(1.0, grid, 0.5 * grid.spacing[0])
    u0 = hat(grid)
    case.set_initial(u=u0)
    seen = []
    case.run(60, lambda c: seen.append(within_bounds(c.current("u"), 1.0, 2.0)))
    assert len(seen) == 60 and all(seen)


def test_within_bounds_tolerance():
    assert within_bounds(np.array([1.0 - 1e-16, 2.0]), 1.0, 2.0)
    assert not within_bounds(np.array([1.0 - 1e-9, 2.0]), 1.0, 2.0)


def test_convection_centroid_moves_with_speed(grid):
    c, dt, n = 1.0, 0.2 * grid.spacing[0], 20
    case = convection_step_operator(c, grid, dt)
    x = grid.node_coords(0)[:, None] * np.ones(grid.shape)
    y = grid.node_coords(1)[None, :] * np.ones(grid.shape)

    def centroid(u):
        w = u - 1.0
        return (w * x).sum() / w.sum(), (w * y).sum() / w.sum()
    case.set_initial(u=hat(grid))
    x0, y0 = centroid(case.current("u"))
    case.run(n)
    x1, y1 = centroid(case.current("u"))
    h = grid.spacing[0]
    assert abs(x1 - x0 - c * dt * n) < h and abs(y1 - y0 - c * dt * n) < h


def test_convection_boundary_held(grid):
    case = convection_step_operator(1.0, grid, 0.2 * grid.spacing[0], boundary=1.0)
    case.set_initial(u=hat(grid))
    case.run(5)
    u = case.current("u")
    assert np.all(u[0] == 1.0) and np.all(u[:, -1] == 1.0)


def test_convection_cfl_guard(grid):
    with pytest.raises(StabilityError):
        convection_step_operator(1.0, grid, 0.51 * grid.spacing[0])
    with pytest.raises(ParameterError):
        convection_step_operator(-1.0, grid, 0.01)


def test_burgers_symmetric_input(grid):
    nu = 0.01
    dt = 0.0009 * grid.spacing[0] ** 2 / nu
    case = burgers_operators(nu, grid, dt)
    case.set_initial(u=hat(grid), v=hat(grid))
    case.run(60)
    u, v = case.current("u"), case.current("v")
    assert np.abs(u - v).max() <= 1e-12 * np.abs(u).max()
    assert not np.array_equal(u, hat(grid))


def test_burgers_transpose_symmetry(grid):
    nu = 0.01
    dt = 0.0009 * grid.spacing[0] ** 2 / nu
    case = burgers_operators(nu, grid, dt)
    u0 = hat(grid, lo=0.4, hi=1.0) + 0.5 * hat(grid, lo=0.8, hi=1.2, inside=1.0, outside=0.0)
    u0[:, :10] = 1.0
    case.set_initial(u=u0, v=u0.T)
    case.run(40)
    assert np.abs(case.current("u") - case.current("v").T).max() <= 1e-12


def test_burgers_stability_guard(grid):
    with pytest.raises(StabilityError):
        burgers_operators(1.0, grid, grid.spacing[0] ** 2)
    with pytest.raises(ParameterError):
        burgers_operators(0.01, Grid((9, 9, 9), extent=(1.0, 1.0, 1.0)), 1e-4)


def test_poisson_residual_decreases():
    g = Grid((50, 50), extent=(2.0, 1.0))
    hist = []
    poisson_iterate(dipole(g), g, 100, history=hist)
    assert len(hist) == 100
    assert np.all(np.diff(hist) < 0)


def test_poisson_single_sweep_closed_form():
    g = Grid((50, 50), extent=(2.0, 1.0))
    b = dipole(g)
    hx, hy = g.spacing
    p = poisson_iterate(b, g, 1)
    expect = -b * hx ** 2 * hy ** 2 / (2 * (hx ** 2 + hy ** 2))
    expect[[0, -1], :] = 0
    expect[:, [0, -1]] = 0
    np.testing.assert_allclose(p, expect, rtol=1e-14, atol=0)


def test_poisson_tolerance_stops_early():
    g = Grid((20, 20), extent=(1.0, 1.0))
    b = dipole(g)
    full = []
    poisson_iterate(b, g, 50, history=full)
    cut = []
    poisson_iterate(b, g, 50, tol=full[9], history=cut)
    assert len(cut) < 50 and cut[-1] < full[9]


def test_poisson_residual_zero_for_exact_solution():
    g = Grid((12, 12), extent=(1.0, 1.0))
    x, y = np.meshgrid(g.node_coords(0), g.node_coords(1), indexing="ij")
    p = x ** 2 + y ** 2
    assert poisson_residual(p, np.full(g.shape, 4.0), g) < 1e-10


def test_poisson_argument_checks():
    g = Grid((12, 12), extent=(1.0, 1.0))
    with pytest.raises(ParameterError):
        poisson_iterate(dipole(g), g, 0)


def test_case_summary_and_negative_steps(grid):
    case = convection_step_operator(1.0, grid, 0.01)
    case.set_initial(u=hat(grid))
    s = case.summary()
    assert s["case"] == "convection" and s["u"]["max"] == 2.0
    with pytest.raises(ParameterError):
        case.run(-1)
