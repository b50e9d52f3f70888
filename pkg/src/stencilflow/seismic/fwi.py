"""Projected fixed-step gradient descent on the squared slowness."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError, StateError
from .model import SeismicModel
from .operators import AcousticSolver
from .source import AcquisitionGeometry

__all__ = ["FwiResult", "fwi", "circle_velocity", "circle_problem", "model_error"]


@dataclass
class FwiResult:
    models: list = field(default_factory=list)     # physical-region m per iterate
    history: list = field(default_factory=list)    # dicts: iteration, objective, step, model_error

    @property
    def objectives(self):
        return [h["objective"] for h in self.history]


def circle_velocity(shape, background=2.0, anomaly=2.5, radius=None, center=None):
    """Constant background with a circular inclusion (velocities in km/s or m/s alike)."""
    shape = tuple(shape)
    center = center or tuple((s - 1) / 2 for s in shape)
    radius = radius or min(shape) / 6
    idx = np.indices(shape, dtype=float)
    r2 = sum((i - c) ** 2 for i, c in zip(idx, center))
    vp = np.full(shape, float(background))
    vp[r2 <= radius ** 2] = anomaly
    return vp


def circle_problem(n=41, nsrc=2, h=10.0, nbl=10, order=4, tn=700.0, f0=0.012):
    """Circular-anomaly inversion problem: (true model, start model, geometries, data)."""
    vt = circle_velocity((n, n), 1.5, 1.8, radius=n / 7)
    true = SeismicModel(vt, (h, h), nbl=nbl, space_order=order)
    ext = (n - 1) * h
    recs = [[ext - 2 * h, y] for y in np.linspace(2 * h, ext - 2 * h, 21)]
    srcs = [[2 * h, y] for y in np.linspace(0.15 * ext, 0.85 * ext, nsrc)]
    dt = 0.9 * true.critical_dt
    geos = [AcquisitionGeometry([s], recs, 0.0, tn, dt, f0=f0) for s in srcs]
    data = [AcousticSolver(true, g).forward()[0] for g in geos]
    start = SeismicModel(np.full((n, n), 1.5), (h, h), nbl=nbl, space_order=order)
    return true, start, geos, data


def model_error(m, m_true) -> float:
    """Root-mean-square misfit between two squared-slowness fields."""
    return float(np.sqrt(np.mean((np.asarray(m) - np.asarray(m_true)) ** 2)))


def fwi(model: SeismicModel, geometries, d_obs, n_iter: int, step: float, m_bounds=None,
        m_true=None, solver_kw=None, callback=None) -> FwiResult:
    """Run ``n_iter`` iterations of ``m <- clip(m - step * g / max|g|)``.

    One solver per source geometry; gradients are summed in geometry order and
    restricted to the physical domain.  ``m_true`` (physical shape) only feeds
    the reported model error.
    """
    if n_iter < 0 or step < 0:
        raise ParameterError("n_iter and step must be non-negative")
    if len(geometries) != len(d_obs):
        raise ParameterError("one observed data set per geometry is required")
    solvers = [AcousticSolver(model, g, **(solver_kw or {})) for g in geometries]
    mask = model.physical_mask()
    lo, hi = m_bounds if m_bounds is not None else (0.0, np.inf)
    if not 0 <= lo < hi:
        raise ParameterError("m_bounds must satisfy 0 <= min < max")
    res = FwiResult()
    m = model.m_values
    for it in range(n_iter + 1):
        phi = 0.0
        grad = np.zeros_like(m)
        for s, d in zip(solvers, d_obs):
            gr = s.objective_and_gradient(d, m=m)
            phi += gr.objective
            grad += gr.gradient
        if not np.isfinite(phi):
            raise StateError(f"objective became non-finite at iteration {it}")
        err = model_error(model.physical(m), m_true) if m_true is not None else None
        res.models.append(model.physical(m).copy())
        res.history.append({"iteration": it, "objective": phi, "step": float(step),
                            "model_error": err})
        if callback is not None:
            callback(res.history[-1])
        if it == n_iter:
            break
        grad = np.where(mask, grad, 0.0)
        gmax = np.abs(grad).max()
        if gmax == 0 or step == 0:
            continue
        m = m - step * grad / gmax
        # project the physical region into the box; the layer copies the nearest physical value
        phys = np.clip(model.physical(m), lo, hi)
        m = np.pad(phys, model.nbl, mode="edge")
    model.set_m(m)
    return res
