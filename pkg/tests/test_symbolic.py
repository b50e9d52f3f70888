from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from stencilflow.errors import NotLinearError, SingularError
from stencilflow.symbolic.derivatives import expand_derivatives, shift
from stencilflow.symbolic.expr import (Add, Float, Pow, Rational, Symbol, accesses, evaluate,
                                       free_symbols, simplify_fold, substitute, sympify)
from stencilflow.symbolic.functions import Eq, Function, Grid, TimeFunction
from stencilflow.symbolic.solve import solve_linear


@pytest.fixture
def grid():
    return Grid((5, 5), extent=(4.0, 4.0))


def _env(e, seed=1, **scalars):
    env = {a: Fraction(i * 7 % 11 + seed, 3 + i) for i, a in enumerate(accesses(e))}
    env.update(scalars)
    return env


def test_dt2_expansion(grid):
    u = TimeFunction("u", grid, space_order=2, time_order=2)
    e = expand_derivatives(u.dt2)
    assert str(e) == "(u[-1 + t, x, y] + u[1 + t, x, y] - 2*u[t, x, y])/dt**2"


def test_dx2_second_order(grid):
    u = TimeFunction("u", grid, space_order=2, time_order=2)
    assert str(expand_derivatives(u.dx2)) == "(u[t, -1 + x, y] + u[t, 1 + x, y] - 2*u[t, x, y])/h_x**2"


def test_laplace_is_five_point(grid):
    u = TimeFunction("u", grid, space_order=2, time_order=2)
    e = expand_derivatives(u.laplace)
    assert len(accesses(e)) == 5
    # value on a quadratic x^2 + y^2 sampled with h = 1 is exactly 4
    env = {}
    for a in accesses(e):
        ox, oy = (evaluate(i, {"x": 0, "y": 0}) for i in a.indices[1:])
        env[a] = Fraction(ox * ox + oy * oy)
    assert evaluate(e, {**env, "h_x": 1, "h_y": 1}) == 4


def test_dt2_numeric_value(grid):
    u = TimeFunction("u", grid, space_order=2, time_order=2)
    e = expand_derivatives(u.dt2)
    env = {a: Fraction(i + 1, 3) for i, a in enumerate(accesses(e))}
    env["dt"] = Fraction(1, 2)
    assert evaluate(e, env) == -4


def test_expansion_idempotent(grid):
    u = TimeFunction("u", grid, space_order=8, time_order=2)
    once = expand_derivatives(u.laplace + u.dt2)
    assert expand_derivatives(once) == once


def test_higher_order_laplace_reads(grid):
    u = TimeFunction("u", grid, space_order=8, time_order=2)
    assert len(accesses(expand_derivatives(u.laplace))) == 17


def test_shift(grid):
    u = TimeFunction("u", grid, space_order=2, time_order=2)
    assert str(shift(u._as_expr(), grid.dimensions[0], 2)) == "u[t, 2 + x, y]"


def test_rational_folding():
    assert Rational(2, 4) == Rational(1, 2)
    assert Rational(1, 2) + Rational(1, 3) == Rational(5, 6)
    assert simplify_fold(Add(Rational(1), Rational(2))) == Rational(3)
    assert evaluate(Pow(Rational(2), Rational(-1))) == Fraction(1, 2)


def test_identities():
    x = Symbol("x")
    assert x * 0 == Rational(0)
    assert x + 0 == x and x * 1 == x
    assert x - x == Rational(0)
    assert str(x * x) == "x**2"


def test_sympify():
    assert sympify(3) == Rational(3)
    assert sympify(Fraction(1, 3)) == Rational(1, 3)
    assert isinstance(sympify(0.5), Float)
    with pytest.raises(TypeError):
        sympify("x")


def test_substitute_is_simultaneous():
    a, b, x = Symbol("a"), Symbol("b"), Symbol("x")
    assert str(substitute(a * x + b, {x: Rational(3)})) == "b + 3*a"
    swapped = substitute(a - b, {a: b, b: a})
    assert swapped == b - a


def test_free_symbols(grid):
    u = TimeFunction("u", grid, space_order=2, time_order=2)
    names = {s.name for s in free_symbols(expand_derivatives(u.dt2))}
    assert "dt" in names


def test_solve_simple_linear(grid):
    u = TimeFunction("u", grid, space_order=2, time_order=2)
    a, b = Symbol("a"), Symbol("b")
    assert str(solve_linear(Eq(a * u.forward + b, 0), u.forward)) == "-b/a"


def test_solve_acoustic_update(grid):
    u = TimeFunction("u", grid, space_order=2, time_order=2)
    m = Function("m", grid)
    pde = m * u.dt2 - u.laplace
    sol = solve_linear(Eq(pde, 0), u.forward)
    rhs = expand_derivatives(2 * u - u.backward + u.laplace * Symbol("dt") ** 2 / m)
    env = _env(rhs, dt=Fraction(1, 5), h_x=Fraction(1), h_y=Fraction(2))
    assert evaluate(sol, env) == evaluate(rhs, env)


def test_solve_damped_coefficient(grid):
    u = TimeFunction("u", grid, space_order=2, time_order=2)
    m, eta = Function("m", grid), Function("eta", grid)
    dt = Symbol("dt")
    pde = m * u.dt2 - u.laplace + eta * u.dt
    sol = solve_linear(Eq(pde, 0), u.forward)
    # residual of the original equation with the solution plugged in must vanish exactly
    full = expand_derivatives(pde)
    plugged = substitute(full, {u.forward: sol})
    env = _env(plugged, dt=Fraction(1, 7), h_x=Fraction(1, 2), h_y=Fraction(3, 2))
    assert evaluate(plugged, env) == 0
    assert dt in free_symbols(sol)


def test_nonlinear_rejected(grid):
    u = TimeFunction("u", grid, space_order=2, time_order=2)
    with pytest.raises(NotLinearError):
        solve_linear(Eq(u.forward * u.forward, 0), u.forward)


def test_singular_rejected(grid):
    u = TimeFunction("u", grid, space_order=2, time_order=2)
    f = Function("f", grid)
    with pytest.raises(SingularError):
        solve_linear(Eq(f * 1, 0), u.forward)


coef = st.fractions(min_value=-20, max_value=20, max_denominator=9)


@settings(max_examples=60, deadline=None)
@given(a=coef.filter(lambda v: v != 0), b=coef, c=coef, val=coef)
def test_solution_satisfies_equation(a, b, c, val):
    g = Grid((4, 4), extent=(3.0, 3.0))
    u = TimeFunction("u", g, space_order=2, time_order=2)
    x = Symbol("x")
    eq = Rational(a) * u.forward + Rational(b) * x * u + Rational(c)
    sol = solve_linear(Eq(eq, 0), u.forward)
    plugged = simplify_fold(substitute(sympify(eq), {u.forward: sol}))
    env = {u._as_expr(): val, "x": Fraction(3, 2)}
    assert evaluate(plugged, env) == 0
