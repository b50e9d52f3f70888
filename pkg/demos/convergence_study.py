"""Time and space convergence against the closed-form 2-D point-source solution.

Prints the error tables and fitted slopes; the space sweep takes about half a
minute, the time sweep a little less.
"""
import argparse

import numpy as np

from stencilflow.verify import SpaceConvergenceConfig, convergence_space, convergence_time


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--orders", default="2,4,6,8", help="space orders to sweep")
    ap.add_argument("--skip-time", action="store_true")
    args = ap.parse_args()

    if not args.skip_time:
        fit, errs = convergence_time()
        print("time sweep (dt, error):")
        for dt, e in zip(np.exp(fit.x), errs):
            print(f"  {dt:.3e}  {e:.4e}")
        print(f"  fitted slope {fit.slope:.3f}")

    cfg = SpaceConvergenceConfig(orders=tuple(int(k) for k in args.orders.split(",")))
    res = convergence_space(cfg)
    print(f"space sweep, error floor {res['floor']:.3e}:")
    for k, entry in res["orders"].items():
        slope = f"{entry['fit'].slope:.2f}" if entry["fit"] else "saturated"
        errs = "  ".join(f"{e:.2e}" for e in entry["errors"])
        print(f"  order {k:2d}: {errs}  slope {slope}")
    print("  spacings:", ", ".join(f"{h:g}" for h in res["hs"]))


if __name__ == "__main__":
    main()
