"""Acoustic forward, adjoint and gradient operators built from the symbolic layer.

Time conventions shared by all three operators (``nt`` samples, step ``dt``):

* forward: ``u[0] = u[1] = 0``; step ``t = 1 .. nt-1`` computes ``u[t+1]``,
  injects ``src[t]`` into it and samples ``rec[t] = P u[t]``;
* adjoint: ``v[nt] = v[nt-1] = 0``; step ``t = nt-1 .. 1`` computes ``v[t-1]``,
  injects ``rec[t]`` into it and samples ``srca[t] = P v[t]``;
* gradient: the adjoint sweep driven by the data residual, additionally
  accumulating ``grad -= u[t] * (v[t+1] - 2 v[t] + v[t-1]) / dt**2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..compiler.operator import DEFAULT_PIPELINE, Operator
from ..errors import ParameterError, StateError
from ..symbolic.functions import Eq, Function, TimeFunction
from ..symbolic.solve import solve_linear
from .model import SeismicModel
from .source import AcquisitionGeometry

__all__ = ["AcousticSolver", "GradientResult", "forward_operator", "adjoint_operator",
           "gradient_operator", "objective"]


@dataclass
class GradientResult:
    objective: float
    gradient: np.ndarray
    residual: np.ndarray


def objective(rec: np.ndarray, d_obs: np.ndarray) -> float:
    r = np.asarray(rec) - np.asarray(d_obs)
    return 0.5 * float(np.sum(r * r))


def _cfl_check(model: SeismicModel):
    def check(b):
        model.check_dt(b.scalars["dt"])
    return check


def forward_operator(model: SeismicModel, geometry: AcquisitionGeometry, space_order=None,
                     save=False, **opkw):
    """Forward modelling operator; returns (op, u, src, rec)."""
    so = space_order or model.space_order
    g = model.grid
    nt = geometry.nt
    u = TimeFunction("u", g, space_order=so, time_order=2, save=nt + 1 if save else None)
    src = geometry.make_src(g)
    rec = geometry.make_rec(g)
    m, eta = model.m, model.eta
    dt = g.time_dim.spacing
    pde = m * u.dt2 - u.laplace + eta * u.dt
    eqs = [Eq(u.forward, solve_linear(Eq(pde, 0), u.forward))]
    eqs += src.inject(u.forward, src * dt ** 2 / m)
    eqs += rec.interpolate(u)
    op = Operator(eqs, name="forward", checks=[_cfl_check(model)], **opkw)
    return op, u, src, rec


def _adjoint_stencil(model, v):
    m, eta = model.m, model.eta
    pde = m * v.dt2 - v.laplace - eta * v.dt
    return Eq(v.backward, solve_linear(Eq(pde, 0), v.backward))


def adjoint_operator(model: SeismicModel, geometry: AcquisitionGeometry, space_order=None,
                     **opkw):
    """Adjoint operator; returns (op, v, srca, rec)."""
    so = space_order or model.space_order
    g = model.grid
    v = TimeFunction("v", g, space_order=so, time_order=2)
    srca = geometry.make_src(g, name="srca", wavelet=False)
    rec = geometry.make_rec(g)
    dt = g.time_dim.spacing
    eqs = [_adjoint_stencil(model, v)]
    eqs += rec.inject(v.backward, rec * dt ** 2 / model.m)
    eqs += srca.interpolate(v)
    op = Operator(eqs, name="adjoint", checks=[_cfl_check(model)], **opkw)
    return op, v, srca, rec


def gradient_operator(model: SeismicModel, geometry: AcquisitionGeometry, u: TimeFunction,
                      space_order=None, **opkw):
    """Adjoint sweep that also accumulates the squared-slowness gradient; returns (op, grad, v, rec)."""
    if u.save is None:
        raise StateError("the gradient needs the full forward history (save=True)")
    so = space_order or model.space_order
    g = model.grid
    v = TimeFunction("v", g, space_order=so, time_order=2)
    grad = Function("grad", g, space_order=so)
    rec = geometry.make_rec(g)
    dt = g.time_dim.spacing
    eqs = [_adjoint_stencil(model, v)]
    eqs += rec.inject(v.backward, rec * dt ** 2 / model.m)
    eqs += [Eq(grad, grad - u * v.dt2)]
    op = Operator(eqs, name="gradient", checks=[_cfl_check(model)], **opkw)
    return op, grad, v, rec


class AcousticSolver:
    """Caches the three operators for one model/geometry pair and runs them."""

    def __init__(self, model: SeismicModel, geometry: AcquisitionGeometry, space_order=None,
                 opt=DEFAULT_PIPELINE, tiles=None, backend="numpy"):
        self.model = model
        self.geometry = geometry
        self.space_order = space_order or model.space_order
        if self.space_order > model.space_order:
            raise ParameterError("solver order exceeds the model's halo")
        self._check_positions()
        self.opkw = {"opt": opt, "tiles": tiles}
        self.backend = backend
        self._ops = {}

    def _check_positions(self):
        # the src*dt^2/m injection is only self-adjoint where the damping vanishes
        lo = np.array(self.model.origin)
        hi = lo + np.array(self.model.spacing) * (np.array(self.model.shape) - 1)
        for what, pts in (("source", self.geometry.src_coords),
                          ("receiver", self.geometry.rec_coords)):
            if np.any(pts < lo - 1e-9 * abs(hi - lo)) or np.any(pts > hi + 1e-9 * abs(hi - lo)):
                raise ParameterError(f"{what} positions must lie inside the physical domain "
                                     f"{lo.tolist()}..{hi.tolist()}")

    def _get(self, key, builder):
        if key not in self._ops:
            self._ops[key] = builder()
        return self._ops[key]

    def forward_op(self, save=False):
        """The compiled forward Operator (built on first use)."""
        return self._get(("fwd", save), lambda: forward_operator(
            self.model, self.geometry, self.space_order, save=save, **self.opkw))[0]

    def _run(self, op, **kw):
        nt = self.geometry.nt
        return op.apply(time_m=1, time_M=nt - 1, dt=self.geometry.dt, backend=self.backend, **kw)

    def _set_m(self, m):
        if m is not None:
            self.model.set_m(m)

    def forward(self, src=None, m=None, save=False):
        """Returns (receiver traces, wavefield TimeFunction, execution report)."""
        self._set_m(m)
        op, u, s, rec = self._get(("fwd", save), lambda: forward_operator(
            self.model, self.geometry, self.space_order, save=save, **self.opkw))
        s.data[:] = self.geometry.wavelet()[None, :] if src is None else src
        u.data[:] = 0
        rec.data[:] = 0
        rep = self._run(op)
        return rec.data.copy(), u, rep

    def adjoint(self, rec_data, m=None):
        """Returns (adjoint samples at the source positions, adjoint wavefield, report)."""
        self._set_m(m)
        op, v, srca, rec = self._get("adj", lambda: adjoint_operator(
            self.model, self.geometry, self.space_order, **self.opkw))
        rec.data[:] = rec_data
        v.data[:] = 0
        srca.data[:] = 0
        rep = self._run(op)
        return srca.data.copy(), v, rep

    def gradient(self, residual, u: TimeFunction, m=None):
        """Gradient of 0.5*||P u - d||^2 with respect to m, given the saved forward field."""
        self._set_m(m)
        if u.save is None or u.save != self.geometry.nt + 1:
            raise StateError("gradient needs the saved forward history of this geometry")
        op, grad, v, rec = self._get(("grad", id(u)), lambda: gradient_operator(
            self.model, self.geometry, u, self.space_order, **self.opkw))
        rec.data[:] = residual
        v.data[:] = 0
        grad.data[:] = 0
        self._run(op)
        return np.array(grad.interior)

    def objective_and_gradient(self, d_obs, src=None, m=None) -> GradientResult:
        rec, u, _ = self.forward(src, m=m, save=True)
        res = rec - d_obs
        if not np.all(np.isfinite(res)):
            raise StateError("non-finite synthetic data")
        g = self.gradient(res, u)
        return GradientResult(objective(rec, d_obs), g, res)
