"""Numerical verification experiments: convergence, adjointness, gradient accuracy, benchmarks."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .compiler.operator import Operator
from .backend.cgen import find_compiler
from .errors import FitError
from .seismic.analytic import analytic_2d
from .seismic.model import SeismicModel
from .seismic.operators import AcousticSolver, objective
from .seismic.source import AcquisitionGeometry, ricker
from .sparse import SparseFunction, dirac_scale
from .symbolic.functions import Eq, Grid, TimeFunction
from .symbolic.solve import solve_linear

__all__ = ["SlopeFit", "fit_slope", "TimeConvergenceConfig", "SpaceConvergenceConfig",
           "convergence_time", "convergence_space", "adjoint_test", "sparse_matrices",
           "sparse_adjoint_test", "GradientTestConfig", "gradient_test",
           "brute_force_gradient", "acoustic_kernel", "bench", "volume_scaling"]


# ---------------------------------------------------------------------------
# slope fitting

@dataclass
class SlopeFit:
    x: list          # log of step / spacing
    y: list          # log of error
    slope: float
    intercept: float
    residual: float

    def to_dict(self):
        return asdict(self)


def fit_slope(steps, errors) -> SlopeFit:
    """Least-squares line through (log step, log error)."""
    steps = np.asarray(steps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if steps.size != errors.size:
        raise FitError("steps and errors differ in length")
    if steps.size < 3:
        raise FitError(f"a slope fit needs at least 3 points, got {steps.size}")
    if np.any(steps <= 0) or np.any(errors <= 0):
        raise FitError("steps and errors must be positive")
    d = np.diff(steps)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise FitError("steps must be strictly monotone")
    x, y = np.log(steps), np.log(errors)
    (slope, icpt), res, *_ = np.polyfit(x, y, 1, full=True)
    return SlopeFit(x.tolist(), y.tolist(), float(slope), float(icpt),
                    float(res[0]) if len(res) else 0.0)


def _pmap(fn, items, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


# ---------------------------------------------------------------------------
# convergence against the closed-form solution

@dataclass
class _PointSource:
    velocity: float = 1500.0
    f0: float = 20.0
    delay: float = 0.1
    extent: float = 400.0
    tn: float = 0.15


def _constant_velocity_error(cfg: _PointSource, h, dt, order, offsets_m, discrete_time):
    n = int(round(cfg.extent / h)) + 1
    model = SeismicModel(np.full((n, n), cfg.velocity), (h, h), nbl=0, space_order=order)
    xs = (n // 2) * h
    recs = []
    for ox, oy in offsets_m:
        recs.append([xs + round(ox / h) * h, xs + round(oy / h) * h])
    geo = AcquisitionGeometry([[xs, xs]], recs, 0.0, cfg.tn, dt, f0=cfg.f0, delay=cfg.delay)
    solver = AcousticSolver(model, geo)
    rec, _, _ = solver.forward(src=geo.wavelet()[None, :] * dirac_scale(model.grid))
    ref = analytic_2d(cfg.velocity, lambda t: ricker(cfg.f0, t, cfg.delay), [xs, xs], recs,
                      dt, geo.nt, discrete_time=discrete_time)
    return float(np.linalg.norm(rec - ref) / np.linalg.norm(ref))


@dataclass
class TimeConvergenceConfig(_PointSource):
    h: float = 2.0
    order: int = 12
    dts: tuple = (1e-4, 8e-5, 6.666e-5, 5e-5, 4e-5)
    receivers: tuple = ((50.0, 0.0), (0.0, 50.0), (36.0, 36.0))
    workers: int = 1


def convergence_time(cfg: TimeConvergenceConfig | None = None):
    """Error against the continuous solution for a sweep of time steps; returns (fit, errors)."""
    cfg = cfg or TimeConvergenceConfig()
    if len(cfg.dts) < 3:
        raise FitError("the time sweep needs at least 3 values of dt")
    errs = _pmap(lambda dt: _constant_velocity_error(cfg, cfg.h, dt, cfg.order, cfg.receivers,
                                                     False), cfg.dts, cfg.workers)
    return fit_slope(cfg.dts, errs), errs


@dataclass
class SpaceConvergenceConfig(_PointSource):
    hs: tuple = (4.0, 3.2, 2.5, 2.0, 1.6, 1.25)
    orders: tuple = (2, 4, 6, 8)
    courant: float = 0.2
    radius: float = 40.0
    floor_order: int = 16
    workers: int = 1


def convergence_space(cfg: SpaceConvergenceConfig | None = None) -> dict:
    """Per order: errors over ``hs`` and a slope fitted on the pre-saturation window.

    The time stencil's dispersion is built into the reference, so what remains is
    spatial error plus a floor, measured once with a very high order at the
    finest spacing.  Points below ten times that floor are left out of the fit.
    """
    cfg = cfg or SpaceConvergenceConfig()
    recs = ((cfg.radius, 0.0), (0.0, cfg.radius), (cfg.radius, cfg.radius))
    hmin = min(cfg.hs)
    floor = _constant_velocity_error(cfg, hmin, cfg.courant * hmin / cfg.velocity,
                                     cfg.floor_order, recs, True)
    out = {"floor": floor, "hs": list(cfg.hs), "orders": {}}
    for k in cfg.orders:
        errs = _pmap(lambda h: _constant_velocity_error(
            cfg, h, cfg.courant * h / cfg.velocity, k, recs, True), cfg.hs, cfg.workers)
        keep = [i for i, e in enumerate(errs) if e >= 10 * floor]
        entry = {"errors": errs, "window": keep, "fit": None}
        if len(keep) >= 3:
            entry["fit"] = fit_slope([cfg.hs[i] for i in keep], [errs[i] for i in keep])
        out["orders"][k] = entry
    return out


# ---------------------------------------------------------------------------
# adjointness

def _dot_geometry(shape, h, nrec=5):
    ext = [h * (s - 1) for s in shape]
    src = [[e * 0.45 for e in ext]]
    recs = []
    for i in range(nrec):
        frac = (i + 0.5) / nrec
        recs.append([e * (0.1 + 0.8 * frac) if d == 0 else e * 0.2 + 0.37 * h
                     for d, e in enumerate(ext)])
    return src, recs


def adjoint_test(orders=(2, 4, 6, 8, 10, 12), dims=(2, 3), shape2=(64, 64), shape3=(32, 32, 32),
                 nbl=8, tn=None, seed=0, opt=None) -> list:
    """Dot test <F x, y> against <x, F^T y> with random traces; one row per (ndim, order)."""
    rows = []
    rng = np.random.default_rng(seed)
    for ndim in dims:
        shape = shape2 if ndim == 2 else shape3
        h = 10.0
        for k in orders:
            vp = np.full(shape, 1.5)
            vp[..., shape[-1] // 2:] = 2.5
            model = SeismicModel(vp, (h,) * ndim, nbl=nbl, space_order=k)
            src, recs = _dot_geometry(shape, h)
            dt = 0.9 * model.critical_dt
            t_end = tn if tn is not None else 0.6 * h * max(shape) / 1.5
            geo = AcquisitionGeometry(src, recs, 0.0, t_end, dt, f0=0.01)
            kw = {} if opt is None else {"opt": opt}
            solver = AcousticSolver(model, geo, **kw)
            x = rng.standard_normal((1, geo.nt))
            y = rng.standard_normal((len(recs), geo.nt))
            fx, _, _ = solver.forward(x)
            fty, _, _ = solver.adjoint(y)
            a, b = float(np.sum(fx * y)), float(np.sum(x * fty))
            rel = abs(a - b) / max(abs(a), abs(b)) if (a or b) else 0.0
            rows.append({"ndim": ndim, "order": k, "forward": a, "adjoint": b,
                         "relative_error": rel, "nt": geo.nt})
    return rows


def sparse_matrices(grid: Grid, coords):
    """Dense matrices of interpolation (npoints x nnodes) and injection (nnodes x npoints)."""
    coords = np.atleast_2d(coords)
    npts = len(coords)
    f = TimeFunction("f", grid, space_order=2, time_order=1)
    sp = SparseFunction("s", grid, npts, 1, coords)
    interp = Operator(sp.interpolate(f), name="interp", opt=())
    inject = Operator(sp.inject(f, sp), name="inject", opt=())
    nn = int(np.prod(grid.shape))
    P = np.zeros((npts, nn))
    Q = np.zeros((nn, npts))
    for j in range(nn):
        f.data[:] = 0
        f.interior[0].flat[j] = 1.0
        sp.data[:] = 0
        interp.apply(time_m=0, time_M=0)
        P[:, j] = sp.data[:, 0]
    for i in range(npts):
        f.data[:] = 0
        sp.data[:] = 0
        sp.data[i, 0] = 1.0
        inject.apply(time_m=0, time_M=0)
        Q[:, i] = f.interior[0].ravel()
    return P, Q


def sparse_adjoint_test(grid: Grid, coords, seed=0) -> dict:
    """Isolated dot test of the interpolation / injection pair."""
    P, Q = sparse_matrices(grid, coords)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(P.shape[1])
    y = rng.standard_normal(P.shape[0])
    a, b = float(y @ (P @ x)), float((Q @ y) @ x)
    return {"exact_transpose": bool(np.array_equal(P.T, Q)), "forward": a, "adjoint": b,
            "relative_error": abs(a - b) / max(abs(a), abs(b), 1e-300)}


# ---------------------------------------------------------------------------
# gradient accuracy

@dataclass
class GradientTestConfig:
    shape: tuple = (41, 41)
    spacing: float = 10.0
    nbl: int = 10
    order: int = 8
    v_top: float = 1.5
    v_bottom: float = 2.0
    smoothing: int = 3
    f0: float = 0.012
    tn: float = 600.0
    hs: tuple = (1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0)
    dm_scale: float = 0.3


def _smooth(a, passes):
    """Repeated 3-point box averaging along every axis (edge-replicated)."""
    a = np.array(a, dtype=float)
    for _ in range(passes):
        for ax in range(a.ndim):
            p = np.pad(a, [(1, 1) if i == ax else (0, 0) for i in range(a.ndim)], mode="edge")
            sl = [slice(None)] * a.ndim
            parts = []
            for o in (0, 1, 2):
                sl[ax] = slice(o, o + a.shape[ax])
                parts.append(p[tuple(sl)])
            a = (parts[0] + parts[1] + parts[2]) / 3
    return a


def gradient_test(cfg: GradientTestConfig | None = None, dm=None) -> dict:
    """Taylor test on a two-layer model.

    eps0(h) = |phi(m0 + h dm) - phi(m0)| should fall at slope 1 and
    eps1(h) = |phi(m0 + h dm) - phi(m0) - h <g, dm>| at slope 2.
    ``dm`` may cover the physical grid (zero-padded) or the padded one.
    """
    cfg = cfg or GradientTestConfig()
    vt = np.full(cfg.shape, cfg.v_top)
    vt[cfg.shape[0] // 2:] = cfg.v_bottom
    model = SeismicModel(vt, (cfg.spacing,) * len(cfg.shape), nbl=cfg.nbl, space_order=cfg.order)
    ext = cfg.spacing * (cfg.shape[1] - 1)
    depth = 2 * cfg.spacing
    geo = AcquisitionGeometry([[depth, ext / 2]],
                              [[depth, y] for y in np.linspace(depth, ext - depth, 21)],
                              0.0, cfg.tn, 0.9 * model.critical_dt, f0=cfg.f0)
    solver = AcousticSolver(model, geo)
    m_true = model.m_values
    d_obs = solver.forward()[0]
    v0 = _smooth(vt, cfg.smoothing * 4)
    m0 = np.pad(1.0 / v0 ** 2, cfg.nbl, mode="edge")
    r = solver.objective_and_gradient(d_obs, m=m0)
    if dm is None:
        dm = cfg.dm_scale * (m_true - m0)
    dm = np.asarray(dm, dtype=float)
    if dm.shape == tuple(cfg.shape):
        dm = np.pad(dm, cfg.nbl)
    gdm = float(np.sum(r.gradient * dm))
    eps0, eps1 = [], []
    for h in cfg.hs:
        phi = objective(solver.forward(m=m0 + h * dm)[0], d_obs)
        eps0.append(abs(phi - r.objective))
        eps1.append(abs(phi - r.objective - h * gdm))
    out = {"objective": r.objective, "hs": list(cfg.hs), "eps0": eps0, "eps1": eps1,
           "slope0": None, "slope1": None}
    if not np.any(dm):
        return out
    out["slope0"] = fit_slope(cfg.hs, eps0).slope
    out["slope1"] = fit_slope(cfg.hs, eps1).slope
    return out


def brute_force_gradient(shape=(5, 5), nsteps=10, order=2, rel_step=1e-6, seed=0) -> dict:
    """Adjoint-state gradient against centered differences of the objective, cell by cell."""
    rng = np.random.default_rng(seed)
    h = 10.0
    vp = 1.5 + 0.3 * rng.random(shape)
    model = SeismicModel(vp, (h,) * len(shape), nbl=0, space_order=order)
    ext = [h * (s - 1) for s in shape]
    dt = 0.8 * model.critical_dt
    src = [[e / 2 for e in ext]]
    recs = [[h] + [e - h for e in ext[1:]], [e - h for e in ext[:1]] + [h] * (len(shape) - 1)]
    geo = AcquisitionGeometry(src, recs, 0.0, (nsteps - 1) * dt, dt, f0=0.05)
    solver = AcousticSolver(model, geo, opt=())
    m0 = model.m_values
    mt = m0 * (1 + 0.1 * rng.standard_normal(shape))
    d_obs = solver.forward(m=mt)[0]
    g = solver.objective_and_gradient(d_obs, m=m0).gradient
    fd = np.zeros_like(m0)
    for idx in np.ndindex(*shape):
        e = rel_step * m0[idx]
        mp, mm = m0.copy(), m0.copy()
        mp[idx] += e
        mm[idx] -= e
        fd[idx] = (objective(solver.forward(m=mp)[0], d_obs)
                   - objective(solver.forward(m=mm)[0], d_obs)) / (2 * e)
    rel = float(np.abs(fd - g).max() / np.abs(fd).max())
    return {"adjoint": g, "finite_difference": fd, "relative_error": rel, "nt": geo.nt}


# ---------------------------------------------------------------------------
# performance accounting

def acoustic_kernel(shape, order, spacing=10.0, nbl=0, opt=None, tiles=None, dtype=np.float64):
    """Damped acoustic stencil with no sources; returns (operator, u, model)."""
    model = SeismicModel(np.full(shape, 1.5), (spacing,) * len(shape), nbl=nbl,
                         space_order=order, dtype=dtype)
    u = TimeFunction("u", model.grid, space_order=order, time_order=2)
    pde = model.m * u.dt2 - u.laplace + model.eta * u.dt
    eq = Eq(u.forward, solve_linear(Eq(pde, 0), u.forward))
    kw = {"tiles": tiles}
    if opt is not None:
        kw["opt"] = opt
    return Operator([eq], name="acoustic", **kw), u, model


def _timed_run(op, u, model, nsteps, repeats):
    rng = np.random.default_rng(0)
    dt = 0.5 * model.critical_dt
    best = math.inf
    report = None
    for _ in range(repeats):
        u.data[:] = 0
        u.interior[:] = 1e-3 * rng.standard_normal(u.interior.shape)
        report = op.apply(time_m=1, time_M=nsteps, dt=dt)
        best = min(best, report.wall_time)
    return best, report


def bench(orders=(4, 8, 12, 16), shape=(96, 96, 96), nsteps=10, repeats=2) -> dict:
    """Roofline-style report: OI from compiler metadata and measured throughput per order."""
    rows = []
    for k in orders:
        op, u, model = acoustic_kernel(shape, k)
        wall, rep = _timed_run(op, u, model, nsteps, repeats)
        md = op.metadata
        rows.append({"order": k, "oi": md["oi"], "flops_per_point": md["flops"],
                     "bytes_per_point": md["bytes"], "wall_time": wall,
                     "gflops": rep.flops / wall / 1e9 if wall > 0 else 0.0,
                     "points": md["points"], "steps": nsteps})
    return {"shape": list(shape), "rows": rows}


def volume_scaling(order=8, small=(48, 48, 48), nsteps=40, pairs=7, backend=None) -> dict:
    """Wall-time ratio when every axis doubles (8x volume).

    Small and big runs alternate and the median of the per-pair ratios is
    reported, which is far steadier than a ratio of two best times on a shared
    machine.  ``backend=None`` picks C when a compiler is available.
    """
    if backend is None:
        backend = "c" if find_compiler() else "numpy"
    big = tuple(2 * s for s in small)
    runs = []
    for shape in (small, big):
        op, u, model = acoustic_kernel(shape, order)
        dt = 0.5 * model.critical_dt
        op.apply(time_m=1, time_M=1, dt=dt, backend=backend)   # compile and warm
        runs.append((op, u, dt))

    def once(op, u, dt):
        u.data[:] = 0
        u.interior[:] = 1e-3
        return op.apply(time_m=1, time_M=nsteps, dt=dt, backend=backend).wall_time
    times = [(once(*runs[0]), once(*runs[1])) for _ in range(pairs)]
    ratios = sorted(b / a for a, b in times)
    return {"small": list(small), "big": list(big), "backend": backend,
            "times": times, "ratios": ratios, "ratio": float(np.median(ratios))}

