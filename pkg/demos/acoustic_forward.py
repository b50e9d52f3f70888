"""Forward acoustic modelling on a two-layer model, written directly in the DSL.

Builds the damped wave equation by hand (instead of through AcousticSolver) to
show the symbolic layer, prints the optimized loop nest and writes the shot
record to acoustic_rec.csv.
"""
import argparse

import numpy as np

from stencilflow import Eq, Operator, TimeFunction, solve_linear
from stencilflow.seismic import AcquisitionGeometry, SeismicModel
from stencilflow.sparse import write_traces


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--order", type=int, default=8)
    ap.add_argument("--tn", type=float, default=600.0, help="end time in ms")
    ap.add_argument("--backend", default="numpy", choices=["numpy", "c"])
    args = ap.parse_args()

    vp = np.full((101, 101), 1.5)
    vp[:, 50:] = 2.5
    model = SeismicModel(vp, (10.0, 10.0), nbl=20, space_order=args.order)
    geo = AcquisitionGeometry([[500.0, 20.0]], [[x, 20.0] for x in np.linspace(0, 1000, 101)],
                              0.0, args.tn, 0.9 * model.critical_dt, f0=0.015)

    u = TimeFunction("u", model.grid, space_order=args.order, time_order=2)
    src = geo.make_src(model.grid)
    rec = geo.make_rec(model.grid)
    pde = model.m * u.dt2 - u.laplace + model.eta * u.dt
    dt = model.grid.time_dim.spacing
    eqs = [Eq(u.forward, solve_linear(Eq(pde, 0), u.forward))]
    eqs += src.inject(u.forward, src * dt ** 2 / model.m)
    eqs += rec.interpolate(u)
    op = Operator(eqs, name="forward")
    print(op.dump())
    print(op.metadata)

    rep = op.apply(time_m=1, time_M=geo.nt - 1, dt=geo.dt, backend=args.backend)
    print(f"{geo.nt} steps in {rep.wall_time:.2f} s ({rep.gflops:.3f} GFLOP/s)")
    write_traces("acoustic_rec.csv", rec.data, geo.dt)
    print("shot record written to acoustic_rec.csv, max |rec| =", float(np.abs(rec.data).max()))


if __name__ == "__main__":
    main()
