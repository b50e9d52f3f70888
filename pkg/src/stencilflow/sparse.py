"""Off-grid point sets: multilinear interpolation and injection.

Corner ``c`` of a cell is encoded by its bits, x fastest: in 2-D the order is
(00, 10, 01, 11).  The weight of corner ``c`` is the tensor product of
``frac_d`` (bit set) or ``1 - frac_d`` (bit clear) over the axes.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import BindingError, LocationError, ParameterError
from .symbolic.expr import Access, Add, Mul, Rational, accesses, substitute, sympify
from .symbolic.functions import Array, Dimension, Eq, Grid, Inc, TimeFunction

__all__ = [
    "CellWeights", "locate", "SparseFunction", "SparseTimeFunction", "corner_offsets",
    "write_traces", "read_traces", "write_coordinates", "read_coordinates", "dirac_scale",
]


@dataclass(frozen=True)
class CellWeights:
    base: tuple
    weights: tuple


def corner_offsets(ndim: int) -> list[tuple]:
    return [tuple((c >> d) & 1 for d in range(ndim)) for c in range(2 ** ndim)]


def _cell(coords: np.ndarray, grid: Grid):
    """Vectorized base indices (n, ndim) and fractional offsets (n, ndim)."""
    coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
    if coords.shape[1] != grid.ndim:
        raise LocationError(f"coordinates need {grid.ndim} components")
    s = (coords - np.asarray(grid.origin)) / np.asarray(grid.spacing)
    upper = np.asarray(grid.shape) - 1
    tol = 1e-9
    bad = (s < -tol) | (s > upper + tol) | ~np.isfinite(s)
    if bad.any():
        i = int(np.argwhere(bad.any(axis=1))[0, 0])
        raise LocationError(f"point {coords[i].tolist()} lies outside the grid")
    s = np.clip(s, 0, upper)
    base = np.minimum(np.floor(s).astype(np.int64), upper - 1)
    return base, s - base


def _corner_weights(frac: np.ndarray) -> np.ndarray:
    n, ndim = frac.shape
    w = np.ones((n, 2 ** ndim))
    for c, bits in enumerate(corner_offsets(ndim)):
        for d, b in enumerate(bits):
            w[:, c] *= frac[:, d] if b else 1.0 - frac[:, d]
    return w


def locate(coord, grid: Grid) -> CellWeights:
    """Containing cell and multilinear corner weights of one point."""
    base, frac = _cell(coord, grid)
    w = _corner_weights(frac)
    return CellWeights(tuple(int(b) for b in base[0]), tuple(float(x) for x in w[0]))


class SparseFunction:
    """A set of ``npoints`` off-grid points with one trace of ``nt`` samples each."""

    is_time_dependent = True
    is_sparse = True
    space_order = 0
    halo = 0

    def __init__(self, name: str, grid: Grid, npoints: int, nt: int, coordinates=None,
                 dtype=None):
        if npoints < 1 or nt < 1:
            raise ParameterError("npoints and nt must be positive")
        self.name = name
        self.grid = grid
        self.npoints = int(npoints)
        self.nt = int(nt)
        self.dtype = np.dtype(dtype or grid.dtype)
        self.pdim = Dimension(f"p_{name}", "point")
        self.time_dim = grid.time_dim
        self.dimensions = (self.pdim, grid.time_dim)
        self.data = np.zeros((self.npoints, self.nt), dtype=self.dtype)
        ncorner = 2 ** grid.ndim
        self._base = Array(f"{name}_base", (self.pdim, Dimension("k", "plain")),
                           np.zeros((self.npoints, grid.ndim), dtype=np.int64))
        self._weights = Array(f"{name}_w", (self.pdim, Dimension("c", "plain")),
                              np.zeros((self.npoints, ncorner), dtype=np.float64))
        self._coords = None
        if coordinates is not None:
            self.coordinates = coordinates

    # -- geometry -----------------------------------------------------------
    @property
    def coordinates(self) -> np.ndarray:
        return self._coords

    @coordinates.setter
    def coordinates(self, coords):
        coords = np.asarray(coords, dtype=np.float64).reshape(self.npoints, self.grid.ndim)
        base, frac = _cell(coords, self.grid)
        self._coords = coords.copy()
        self._base.data[...] = base
        self._weights.data[...] = _corner_weights(frac)

    @property
    def base_array(self):
        return self._base

    @property
    def weight_array(self):
        return self._weights

    def index_layout(self):
        return [("plain", 0), ("time", None)]

    def _as_expr(self):
        return Access(self, (self.pdim, self.time_dim))

    def __getitem__(self, idx):
        return Access(self, idx if isinstance(idx, tuple) else (idx,))

    def __mul__(self, o):
        return self._as_expr() * o

    def __rmul__(self, o):
        return sympify(o) * self._as_expr()

    def __truediv__(self, o):
        return self._as_expr() / o

    def __add__(self, o):
        return self._as_expr() + o

    def __radd__(self, o):
        return sympify(o) + self._as_expr()

    def __neg__(self):
        return -self._as_expr()

    # -- equation generators -----------------------------------------------
    def _check_grid(self, e):
        for a in accesses(e):
            g = getattr(a.function, "grid", None)
            if g is not None and g != self.grid:
                raise BindingError(f"{a.function.name} lives on a different grid than {self.name}")

    def _at_corner(self, e, bits):
        p = self.pdim
        table = {}
        for d, (dim, b) in enumerate(zip(self.grid.dimensions, bits)):
            table[dim] = Add(Access(self._base, (p, Rational(d))), Rational(b))
        return substitute(e, table)

    def _corner_weight(self, c):
        return Access(self._weights, (self.pdim, Rational(c)))

    def interpolate(self, expr, increment: bool = False) -> list:
        """Sample ``expr`` at every point into this function's current time sample."""
        expr = sympify(expr)
        self._check_grid(expr)
        terms = [Mul(self._corner_weight(c), self._at_corner(expr, bits))
                 for c, bits in enumerate(corner_offsets(self.grid.ndim))]
        cls = Inc if increment else Eq
        return [cls(self._as_expr(), Add(*terms))]

    def inject(self, field, expr) -> list:
        """Accumulate ``w_c * expr`` into ``field`` at the enclosing corners of each point."""
        target = sympify(field)
        expr = sympify(expr)
        self._check_grid(target)
        self._check_grid(expr)
        eqs = []
        for c, bits in enumerate(corner_offsets(self.grid.ndim)):
            eqs.append(Inc(self._at_corner(target, bits),
                           Mul(self._corner_weight(c), self._at_corner(expr, bits))))
        return eqs

    def __repr__(self):
        return f"SparseFunction({self.name}, npoints={self.npoints}, nt={self.nt})"


SparseTimeFunction = SparseFunction


def dirac_scale(grid: Grid) -> float:
    """Amplitude factor turning a unit on-node injection into a discrete Dirac."""
    return 1.0 / math.prod(grid.spacing)


# -- CSV I/O ----------------------------------------------------------------

def write_traces(path, data: np.ndarray, dt: float, t0: float = 0.0):
    data = np.asarray(data)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"p{i}" for i in range(data.shape[0])])
        for j in range(data.shape[1]):
            w.writerow([repr(t0 + j * dt)] + [repr(float(v)) for v in data[:, j]])


def read_traces(path):
    """Return (time axis, data[npoints, nt])."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "t":
        raise ParameterError(f"{path}: missing 't,p0,...' header")
    body = np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64)
    body = body.reshape(-1, len(rows[0]))
    return body[:, 0], body[:, 1:].T.copy()


def write_coordinates(path, coords: np.ndarray):
    coords = np.atleast_2d(coords)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow("xyz"[:coords.shape[1]])
        for row in coords:
            w.writerow([repr(float(v)) for v in row])


def read_coordinates(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64)


_ = product, TimeFunction
