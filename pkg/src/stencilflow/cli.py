"""The ``sf`` command line: verification, demo runs, inversion, code emission, benchmarks.

Every subcommand prints a short human-readable table and, with ``--json OUT``,
writes the same results as JSON (``-`` for stdout).  The exit status is 0 when
every asserted tolerance holds, 1 when one fails and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from .backend.gridio import write_grid, write_json
from .errors import CapabilityError, StencilFlowError

log = logging.getLogger("stencilflow")

TOL_TIME = (1.8, 2.1)
TOL_SPACE = 0.25
TOL_ADJOINT = 1e-12
TOL_TAYLOR = ((0.85, 1.15), (1.85, 2.15))
TOL_FWI = 0.5
TOL_SCALING = (6.0, 12.0)


class UsageError(Exception):
    pass


def _grid(text, ndim=None):
    if text is None:
        return None
    try:
        shape = tuple(int(s) for s in text.lower().replace(",", "x").split("x"))
    except ValueError:
        raise UsageError(f"bad --grid {text!r}; expected e.g. 101x101")
    if ndim is not None and len(shape) != ndim:
        raise UsageError(f"--grid needs {ndim} dimensions here")
    return shape


def _ints(text):
    return tuple(int(s) for s in text.split(",")) if text else None


def _floats(text):
    return tuple(float(s) for s in text.split(",")) if text else None


def _dtype(args):
    return np.float32 if args.precision == "f32" else np.float64


def _require_f64(args):
    if args.precision != "f64":
        raise UsageError("verification runs are double precision only")


def _line(label, value, ok=None):
    tag = "" if ok is None else ("  PASS" if ok else "  FAIL")
    print(f"  {label:<28s} {value}{tag}")


# ---------------------------------------------------------------------------
# verify

def cmd_verify(args):
    from . import verify as V
    _require_f64(args)
    ok = True
    out = {"experiment": args.what}
    if args.what == "time":
        cfg = V.TimeConvergenceConfig()
        if args.order:
            cfg.order = args.order
        if args.dts:
            cfg.dts = _floats(args.dts)
        if args.dt:
            cfg.dts = tuple(args.dt * f for f in (1.0, 0.8, 2 / 3, 0.5, 0.4))
        if args.grid:
            n = _grid(args.grid, 2)[0]
            cfg.h = cfg.extent / (n - 1)
        fit, errs = V.convergence_time(cfg)
        ok = TOL_TIME[0] <= fit.slope <= TOL_TIME[1]
        print(f"temporal convergence (h={cfg.h:g} m, order {cfg.order})")
        for dt, e in zip(cfg.dts, errs):
            _line(f"dt={dt:.4g}", f"{e:.3e}")
        _line("slope", f"{fit.slope:.3f}", ok)
        out.update(dts=list(cfg.dts), errors=errs, slope=fit.slope, passed=ok)
    elif args.what == "space":
        cfg = V.SpaceConvergenceConfig()
        if args.orders:
            cfg.orders = _ints(args.orders)
        elif args.order:
            cfg.orders = (args.order,)
        if args.hs:
            cfg.hs = _floats(args.hs)
        res = V.convergence_space(cfg)
        print(f"spatial convergence (floor {res['floor']:.2e})")
        out["floor"] = res["floor"]
        out["orders"] = {}
        for k, ent in res["orders"].items():
            fit = ent["fit"]
            good = fit is not None and abs(fit.slope - k) <= TOL_SPACE
            ok &= good
            slope = "n/a" if fit is None else f"{fit.slope:.3f}"
            _line(f"order {k}", f"slope {slope} over {len(ent['window'])} points", good)
            out["orders"][str(k)] = {"errors": ent["errors"], "window": ent["window"],
                                     "slope": None if fit is None else fit.slope,
                                     "passed": good}
        out["passed"] = ok
    elif args.what == "adjoint":
        orders = _ints(args.orders) or ((args.order,) if args.order else (2, 4, 6, 8, 10, 12))
        dims = _ints(args.dims) or (2, 3)
        kw = {}
        if args.grid:
            shape = _grid(args.grid)
            kw["shape2" if len(shape) == 2 else "shape3"] = shape
            dims = (len(shape),)
        rows = V.adjoint_test(orders, dims, seed=args.seed, **kw)
        print("adjoint dot test")
        for r in rows:
            good = r["relative_error"] <= TOL_ADJOINT
            ok &= good
            _line(f"{r['ndim']}-D order {r['order']}",
                  f"{r['forward']:.6e} {r['adjoint']:.6e} rel {r['relative_error']:.2e}", good)
        from .symbolic import Grid
        sp = V.sparse_adjoint_test(Grid((5, 5), extent=(4.0, 4.0)),
                                   [[0.3, 1.7], [2.5, 2.5], [3.9, 0.1]], seed=args.seed)
        ok &= sp["exact_transpose"]
        _line("inject/interpolate", "exact transpose" if sp["exact_transpose"] else "mismatch",
              sp["exact_transpose"])
        out.update(rows=rows, sparse=sp, passed=ok)
    elif args.what == "gradient":
        cfg = V.GradientTestConfig()
        if args.order:
            cfg.order = args.order
        if args.grid:
            cfg.shape = _grid(args.grid, 2)
        res = V.gradient_test(cfg)
        (a0, b0), (a1, b1) = TOL_TAYLOR
        ok = a0 <= res["slope0"] <= b0 and a1 <= res["slope1"] <= b1
        print(f"gradient Taylor test (order {cfg.order})")
        for h, e0, e1 in zip(res["hs"], res["eps0"], res["eps1"]):
            _line(f"h={h:.0e}", f"eps0 {e0:.3e}  eps1 {e1:.3e}")
        _line("slopes", f"{res['slope0']:.3f}, {res['slope1']:.3f}", ok)
        out.update(res, passed=ok)
    return ok, out


# ---------------------------------------------------------------------------
# run

def _outdir(args):
    d = args.out_dir
    if d:
        os.makedirs(d, exist_ok=True)
    return d


def cmd_run(args):
    out = {"case": args.case}
    d = _outdir(args)
    if args.case == "acoustic":
        from .seismic import AcousticSolver, AcquisitionGeometry, SeismicModel
        from .sparse import write_traces
        shape = _grid(args.grid) or (101, 101)
        h = 10.0
        vp = np.full(shape, 1.5)
        vp[..., shape[-1] // 2:] = 2.5
        model = SeismicModel(vp, (h,) * len(shape), nbl=args.nbl, space_order=args.order or 8,
                             dtype=_dtype(args))
        ext = [h * (s - 1) for s in shape]
        src = [[e / 2 for e in ext[:-1]] + [2 * h]]
        recs = [[x] + [e / 2 for e in ext[1:-1]] + [2 * h]
                for x in np.linspace(0, ext[0], args.nrec)]
        dt = args.dt or 0.9 * model.critical_dt
        geo = AcquisitionGeometry(src, recs, 0.0, args.tn, dt, f0=args.f0)
        solver = AcousticSolver(model, geo, backend=args.backend)
        rec, u, rep = solver.forward()
        last = np.array(u.interior[geo.nt % u.time_size])
        out.update(report=rep.__dict__, nt=geo.nt, dt=dt, max_trace=float(np.abs(rec).max()),
                   metadata=solver.forward_op().metadata)
        print(f"acoustic forward: grid {shape}, order {model.space_order}, nt {geo.nt}, "
              f"{rep.wall_time:.3f} s, {rep.gflops:.3f} GFLOP/s")
        if d:
            write_grid(os.path.join(d, "vp.sfgd"), vp)
            write_grid(os.path.join(d, "u_final.sfgd"), last)
            write_traces(os.path.join(d, "rec.csv"), rec, dt)
        return True, out

    from . import cfd
    from .symbolic import Grid
    if args.case == "convection":
        g = Grid(_grid(args.grid, 2) or (81, 81), extent=(2.0, 2.0), dtype=_dtype(args))
        dt = args.dt or 0.2 * g.spacing[0]
        case = cfd.convection_step_operator(1.0, g, dt)
        case.set_initial(u=cfd.hat(g))
        init = {"u": np.array(case.current("u"))}
        lo, hi = float(init["u"].min()), float(init["u"].max())
        track = []

        def watch(c):
            track.append(cfd.within_bounds(c.current("u"), lo, hi))
        case.run(args.steps or 100, watch)
        ok = all(track)
        out["maximum_principle"] = ok
    elif args.case == "burgers":
        g = Grid(_grid(args.grid, 2) or (41, 41), extent=(2.0, 2.0), dtype=_dtype(args))
        nu = 0.01
        dt = args.dt or 0.0009 * g.spacing[0] * g.spacing[1] / nu
        case = cfd.burgers_operators(nu, g, dt)
        case.set_initial(u=cfd.hat(g), v=cfd.hat(g))
        init = {n: np.array(case.current(n)) for n in ("u", "v")}
        case.run(args.steps or 120)
        sym = float(np.abs(case.current("u") - case.current("v")).max())
        ok = sym <= 1e-12 * max(1.0, float(np.abs(case.current("u")).max()))
        out["symmetry_error"] = sym
    elif args.case == "poisson":
        g = Grid(_grid(args.grid, 2) or (50, 50), extent=(2.0, 1.0), dtype=_dtype(args))
        b = cfd.dipole(g)
        hist = []
        p = cfd.poisson_iterate(b, g, args.steps or 100, history=hist)
        init = {"b": b}
        ok = bool(np.all(np.diff(hist) < 0))
        out.update(residuals=hist, residual_decreasing=ok)
        final = {"p": p}
        case = None
    else:
        raise UsageError(f"unknown case {args.case}")
    if case is not None:
        final = {n: np.array(case.current(n)) for n in case.fields if n in init}
        out["summary"] = case.summary()
    for n, a in final.items():
        print(f"{args.case}: {n} min {a.min():.6g} max {a.max():.6g}")
        out.setdefault("fields", {})[n] = {"min": float(a.min()), "max": float(a.max())}
    if d:
        for n, a in init.items():
            write_grid(os.path.join(d, f"{n}_initial.sfgd"), a)
        for n, a in final.items():
            write_grid(os.path.join(d, f"{n}_final.sfgd"), a)
    out["passed"] = ok
    return ok, out


# ---------------------------------------------------------------------------
# fwi, emit, bench

def cmd_fwi(args):
    from .seismic import circle_problem, fwi
    n = (_grid(args.grid, 2) or (41, 41))[0]
    true, start, geos, data = circle_problem(n=n, nsrc=args.nsrc, order=args.order or 4)
    mt = true.physical(true.m_values)
    lo, hi = float(mt.min()), float(mt.max())
    step = args.step * (hi - lo)
    res = fwi(start, geos, data, args.iters, step, m_bounds=(lo, hi), m_true=mt,
              callback=lambda h: print(f"  iter {h['iteration']:3d}  objective "
                                       f"{h['objective']:.6e}  model error "
                                       f"{h['model_error']:.4e}"))
    phi = res.objectives
    errs = [h["model_error"] for h in res.history]
    ok = phi[-1] <= TOL_FWI * phi[0] and errs[-1] < errs[0]
    _line("objective ratio", f"{phi[-1] / phi[0]:.4f}", ok)
    if args.out_dir:
        _outdir(args)
        write_grid(os.path.join(args.out_dir, "m_final.sfgd"), res.models[-1])
    return ok, {"history": res.history, "objective_ratio": phi[-1] / phi[0], "passed": ok}


def _named_kernel(name, shape, order, dtype):
    from .verify import acoustic_kernel
    if name == "acoustic":
        return acoustic_kernel(shape, order, nbl=0, dtype=dtype)[0]
    from . import cfd
    from .symbolic import Grid
    g = Grid(shape, dtype=dtype)
    if name == "convection":
        return cfd.convection_step_operator(1.0, g, 0.2).operator
    if name == "burgers":
        return cfd.burgers_operators(0.01, g, 0.1).operator
    raise UsageError(f"unknown kernel {name}")


def cmd_emit(args):
    shape = _grid(args.grid) or (64, 64)
    op = _named_kernel(args.kernel, shape, args.order or 4, _dtype(args))
    text = op.dump() if args.ir else op.emit_c()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return True, {"kernel": args.kernel, "metadata": op.metadata}


def cmd_bench(args):
    from . import verify as V
    orders = _ints(args.orders) or (4, 8, 12, 16)
    shape = _grid(args.grid) or (64, 64, 64)
    res = V.bench(orders, shape, nsteps=args.steps or 10)
    print(f"bench on {tuple(shape)}")
    for r in res["rows"]:
        _line(f"order {r['order']}", f"OI {r['oi']:.3f}  {r['gflops']:.3f} GFLOP/s  "
                                     f"{r['wall_time']:.3f} s")
    ois = [r["oi"] for r in res["rows"]]
    ok = all(b > a for a, b in zip(ois, ois[1:]))
    _line("OI monotone in order", "", ok)
    if args.scaling:
        sc = V.volume_scaling(order=args.order or 8)
        good = TOL_SCALING[0] <= sc["ratio"] <= TOL_SCALING[1]
        ok &= good
        _line("8x volume time ratio", f"{sc['ratio']:.2f}", good)
        res["scaling"] = sc
    res["passed"] = ok
    return ok, res


# ---------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid", help="grid shape, e.g. 101x101 or 32x32x32")
    common.add_argument("--order", type=int, help="space order of the stencils")
    common.add_argument("--dt", type=float, help="time step (seconds or ms per model units)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--json", metavar="OUT", help="write JSON results ('-' for stdout)")
    common.add_argument("--precision", choices=("f32", "f64"), default="f64")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="sf", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="numerical verification experiments")
    v.add_argument("what", choices=("time", "space", "adjoint", "gradient"))
    v.add_argument("--orders", help="comma-separated space orders")
    v.add_argument("--dims", help="comma-separated dimensionalities (adjoint)")
    v.add_argument("--dts", help="comma-separated time steps (time)")
    v.add_argument("--hs", help="comma-separated grid spacings (space)")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("run", parents=[common], help="run a demo case")
    r.add_argument("case", choices=("acoustic", "convection", "burgers", "poisson"))
    r.add_argument("--steps", type=int, help="time steps or iterations (CFD cases)")
    r.add_argument("--tn", type=float, default=1000.0, help="end time (acoustic, ms)")
    r.add_argument("--f0", type=float, default=0.010, help="peak frequency (acoustic, kHz)")
    r.add_argument("--nbl", type=int, default=20)
    r.add_argument("--nrec", type=int, default=51)
    r.add_argument("--backend", choices=("numpy", "c"), default="numpy")
    r.add_argument("--out-dir", help="directory for grid files and traces")
    r.set_defaults(func=cmd_run)

    f = sub.add_parser("fwi", parents=[common], help="desk-scale inversion of a circular anomaly")
    f.add_argument("--nsrc", type=int, default=2)
    f.add_argument("--iters", type=int, default=15)
    f.add_argument("--step", type=float, default=0.1,
                   help="step as a fraction of the true squared-slowness range")
    f.add_argument("--out-dir")
    f.set_defaults(func=cmd_fwi)

    e = sub.add_parser("emit", parents=[common], help="print generated C99 (or the IR)")
    e.add_argument("--kernel", choices=("acoustic", "convection", "burgers"), default="acoustic")
    e.add_argument("--ir", action="store_true", help="print the loop-nest IR instead")
    e.add_argument("--out", help="write to a file instead of stdout")
    e.set_defaults(func=cmd_emit)

    b = sub.add_parser("bench", parents=[common], help="operational intensity and throughput")
    b.add_argument("--orders", help="comma-separated space orders")
    b.add_argument("--steps", type=int)
    b.add_argument("--scaling", action="store_true", help="also time an 8x larger domain")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        ok, out = args.func(args)
    except UsageError as exc:
        print(f"sf: {exc}", file=sys.stderr)
        return 2
    except CapabilityError as exc:
        print(f"sf: capability unavailable: {exc}", file=sys.stderr)
        return 1
    except StencilFlowError as exc:
        print(f"sf: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if args.json:
        out["seed"] = args.seed
        write_json(args.json, out)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
