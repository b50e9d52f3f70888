"""Linear convection, viscous Burgers and a Jacobi Poisson solve.

Each case is a handful of symbolic equations compiled by the same Operator
machinery as the seismic kernels.
"""
import argparse

import numpy as np

from stencilflow.cfd import (burgers_operators, convection_step_operator, dipole, hat,
                             poisson_iterate, within_bounds)
from stencilflow.symbolic import Grid


def convection(show_ir=True):
    g = Grid((81, 81), extent=(2.0, 2.0))
    case = convection_step_operator(1.0, g, 0.2 * g.spacing[0])
    case.set_initial(u=hat(g))
    ok = []
    case.run(100, lambda c: ok.append(within_bounds(c.current("u"), 1.0, 2.0)))
    print("convection:", case.summary(), "| max principle held every step:", all(ok))
    if show_ir:
        print(case.operator.dump())


def burgers():
    g = Grid((41, 41), extent=(2.0, 2.0))
    nu = 0.01
    case = burgers_operators(nu, g, 0.0009 * g.spacing[0] ** 2 / nu)
    case.set_initial(u=hat(g), v=hat(g))
    case.run(120)
    print("burgers:", case.summary(),
          "| max |u - v| =", float(np.abs(case.current("u") - case.current("v")).max()))


def poisson():
    g = Grid((50, 50), extent=(2.0, 1.0))
    hist = []
    p = poisson_iterate(dipole(g), g, 100, history=hist)
    print(f"poisson: residual {hist[0]:.4e} -> {hist[-1]:.4e} after {len(hist)} sweeps, "
          f"p in [{p.min():.4g}, {p.max():.4g}]")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quiet", action="store_true", help="skip the convection loop nest dump")
    args = ap.parse_args()
    convection(not args.quiet)
    burgers()
    poisson()
