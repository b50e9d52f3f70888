"""Three small fluid-dynamics cases written in the DSL: linear convection,
viscous Burgers and a Jacobi Poisson solver."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .compiler.operator import Operator
from .errors import ParameterError, StabilityError
from .symbolic.functions import Eq, Function, Grid, TimeFunction
from .symbolic.solve import solve_linear

__all__ = ["CfdCase", "within_bounds", "convection_step_operator", "burgers_operators", "poisson_iterate",
           "poisson_residual", "hat", "dipole", "dirichlet"]


@dataclass
class CfdCase:
    name: str
    grid: Grid
    params: dict
    operator: Operator
    fields: dict = field(default_factory=dict)
    steps: int = 0

    def current(self, name):
        """Latest time level of a buffered field (physical points only)."""
        f = self.fields[name]
        return f.interior[self.steps % f.time_size]

    def set_initial(self, **arrays):
        for name, arr in arrays.items():
            f = self.fields[name]
            f.data[:] = 0
            f.interior[self.steps % f.time_size] = arr

    def run(self, nsteps: int, callback=None):
        """Advance ``nsteps``; ``callback(case)`` after every step when given."""
        if nsteps < 0:
            raise ParameterError("nsteps must be >= 0")
        # a parameter can cancel out of the stencil (c = 0), so bind only what is used
        bind = {k: v for k, v in self.params.get("_bind", {}).items()
                if k in self.operator.ir.scalars}
        if callback is None:
            if nsteps:
                self.operator.apply(time_m=self.steps, time_M=self.steps + nsteps - 1, **bind)
                self.steps += nsteps
            return self
        for _ in range(nsteps):
            self.operator.apply(time_m=self.steps, time_M=self.steps, **bind)
            self.steps += 1
            callback(self)
        return self

    def summary(self) -> dict:
        out = {"case": self.name, "steps": self.steps}
        for name in self.fields:
            a = self.current(name)
            out[name] = {"min": float(a.min()), "max": float(a.max())}
        return out


def within_bounds(a, lo, hi, ulps=4) -> bool:
    """``lo <= a <= hi`` up to a few units of rounding in the last place."""
    tol = ulps * np.finfo(np.asarray(a).dtype).eps * max(abs(lo), abs(hi), 1.0)
    return bool(a.min() >= lo - tol and a.max() <= hi + tol)


def dirichlet(f: TimeFunction, value) -> list:
    """Equations pinning the next time level of ``f`` to ``value`` on every grid face."""
    g = f.grid
    t = g.time_dim
    eqs = []
    for axis, d in enumerate(g.dimensions):
        for pos in (0, g.shape[axis] - 1):
            idx = list(g.dimensions)
            idx[axis] = pos
            eqs.append(Eq(f[(t + 1,) + tuple(idx)], value))
    return eqs


def hat(grid: Grid, lo=0.5, hi=1.0, inside=2.0, outside=1.0):
    """Square pulse: ``inside`` where every coordinate lies in [lo, hi]."""
    coords = np.meshgrid(*[grid.node_coords(a) for a in range(grid.ndim)], indexing="ij")
    mask = np.ones(grid.shape, dtype=bool)
    for c in coords:
        mask &= (c >= lo) & (c <= hi)
    return np.where(mask, inside, outside)


def dipole(grid: Grid, amplitude=100.0):
    b = np.zeros(grid.shape)
    nx, ny = grid.shape[:2]
    b[nx // 4, ny // 4] = amplitude
    b[3 * nx // 4, 3 * ny // 4] = -amplitude
    return b


def convection_step_operator(c: float, grid: Grid, dt: float, boundary=1.0) -> CfdCase:
    """First-order upwind linear convection with a held Dirichlet boundary."""
    # the update is a convex combination only while sum(c*dt/h) <= 1
    courant = sum(abs(c) * dt / h for h in grid.spacing)
    if courant > 1:
        raise StabilityError(f"sum of c*dt/h over the axes is {courant:g}, above 1")
    if c < 0:
        raise ParameterError("the backward-difference scheme needs c >= 0")
    u = TimeFunction("u", grid, space_order=2, time_order=1)
    pde = u.dt + sum(c * u.diff(d, 1, 1, "left") for d in grid.dimensions)
    eqs = [Eq(u.forward, solve_linear(Eq(pde, 0), u.forward))]
    eqs += dirichlet(u, boundary)
    op = Operator(eqs, name="convection")
    return CfdCase("convection", grid, {"c": c, "dt": dt, "_bind": {"dt": dt}}, op, {"u": u})


def burgers_operators(nu: float, grid: Grid, dt: float, boundary=1.0) -> CfdCase:
    """Coupled 2-D viscous Burgers: upwind advection, centered diffusion."""
    if grid.ndim != 2:
        raise ParameterError("the Burgers case is two-dimensional")
    for h in grid.spacing:
        if nu * dt / h ** 2 > 0.25:
            raise StabilityError(f"nu*dt/h^2 = {nu * dt / h ** 2:g} exceeds 1/4")
    u = TimeFunction("u", grid, space_order=2, time_order=1)
    v = TimeFunction("v", grid, space_order=2, time_order=1)
    x, y = grid.dimensions
    eqs = []
    for f in (u, v):
        adv = u * f.diff(x, 1, 1, "left") + v * f.diff(y, 1, 1, "left")
        pde = f.dt + adv - nu * f.laplace
        eqs.append(Eq(f.forward, solve_linear(Eq(pde, 0), f.forward)))
    eqs += dirichlet(u, boundary) + dirichlet(v, boundary)
    op = Operator(eqs, name="burgers")
    return CfdCase("burgers", grid, {"nu": nu, "dt": dt, "_bind": {"dt": dt}}, op,
                   {"u": u, "v": v})


def _poisson_case(grid: Grid, b_arr) -> CfdCase:
    p = TimeFunction("p", grid, space_order=2, time_order=1)
    b = Function("b", grid, space_order=2)
    b.interior[:] = b_arr
    # Jacobi: solve the discrete Laplace equation for the center value, reading level t
    stencil = solve_linear(Eq(p.laplace - b, 0), p._as_expr())
    eqs = [Eq(p.forward, stencil)] + dirichlet(p, 0.0)
    op = Operator(eqs, name="poisson")
    return CfdCase("poisson", grid, {}, op, {"p": p, "b": b})


def poisson_residual(p, b, grid: Grid) -> float:
    """Euclidean norm of lap(p) - b over the updated (non-boundary) nodes."""
    hx, hy = grid.spacing[:2]
    lap = ((p[2:, 1:-1] - 2 * p[1:-1, 1:-1] + p[:-2, 1:-1]) / hx ** 2
           + (p[1:-1, 2:] - 2 * p[1:-1, 1:-1] + p[1:-1, :-2]) / hy ** 2)
    return float(np.linalg.norm(lap - b[1:-1, 1:-1]))


def poisson_iterate(b, grid: Grid, n_iter: int, p0=None, tol=None, history=None):
    """Run ``n_iter`` Jacobi sweeps from ``p0`` (default zero); return the final p.

    ``tol`` stops early once the residual falls below it; ``history`` (a list)
    collects the residual after every sweep when given.
    """
    if n_iter < 1:
        raise ParameterError("n_iter must be >= 1")
    if grid.ndim != 2:
        raise ParameterError("the Poisson case is two-dimensional")
    case = _poisson_case(grid, b)
    case.set_initial(p=np.zeros(grid.shape) if p0 is None else p0)
    if tol is None and history is None:
        case.run(n_iter)
        return np.array(case.current("p"))

    def watch(c):
        r = poisson_residual(c.current("p"), b, grid)
        if history is not None:
            history.append(r)
        if tol is not None and r < tol:
            raise _Converged

    try:
        case.run(n_iter, callback=watch)
    except _Converged:
        pass
    return np.array(case.current("p"))


class _Converged(Exception):
    pass
