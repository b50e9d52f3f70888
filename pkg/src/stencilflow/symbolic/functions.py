"""Grids, dimensions and the dense field types."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from ..errors import BindingError, OrderError, ParameterError
from .expr import Access, Add, Derivative, Expr, Rational, Symbol, sympify

__all__ = [
    "Dimension", "Grid", "Constant", "Function", "TimeFunction", "Eq", "Inc", "Array",
    "aligned_zeros",
]


class Dimension(Symbol):
    """An iteration axis.  kind is 'space', 'time' or 'point'."""

    __slots__ = ("kind", "spacing")

    def __init__(self, name: str, kind: str = "space", spacing: Symbol | None = None):
        super().__init__(name)
        self.kind = kind
        self.spacing = spacing

    @property
    def is_time(self):
        return self.kind == "time"

    @property
    def is_space(self):
        return self.kind == "space"


_SPACE_NAMES = ("x", "y", "z")


class Grid:
    """Cartesian grid.  Either ``extent`` (meters, node-to-node) or ``spacing`` may be given."""

    def __init__(self, shape, extent=None, spacing=None, origin=None, dtype=np.float64):
        shape = tuple(int(s) for s in shape)
        if not 1 <= len(shape) <= 3:
            raise ParameterError("grids are 1-, 2- or 3-dimensional")
        if any(s < 3 for s in shape):
            raise ParameterError(f"every axis needs at least 3 points, got {shape}")
        if spacing is None:
            if extent is None:
                spacing = (1.0,) * len(shape)
            else:
                spacing = tuple(float(e) / (s - 1) for e, s in zip(extent, shape))
        spacing = tuple(float(h) for h in spacing)
        if len(spacing) != len(shape) or any(not (h > 0) for h in spacing):
            raise ParameterError(f"bad spacing {spacing}")
        origin = tuple(float(o) for o in (origin or (0.0,) * len(shape)))
        if len(origin) != len(shape):
            raise ParameterError("origin must match the grid dimensionality")
        self.shape = shape
        self.spacing = spacing
        self.origin = origin
        self.dtype = np.dtype(dtype)
        self.dimensions = tuple(
            Dimension(n, "space", Symbol(f"h_{n}")) for n in _SPACE_NAMES[:len(shape)])
        self.time_dim = Dimension("t", "time", Symbol("dt"))

    @property
    def ndim(self):
        return len(self.shape)

    @property
    def extent(self):
        return tuple(h * (s - 1) for h, s in zip(self.spacing, self.shape))

    @property
    def spacing_map(self) -> dict:
        return {d.spacing.name: h for d, h in zip(self.dimensions, self.spacing)}

    @property
    def stepping_dim(self):
        return self.time_dim

    def node_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.spacing[axis] * np.arange(self.shape[axis])

    def __eq__(self, other):
        return isinstance(other, Grid) and (self.shape, self.spacing, self.origin) == (
            other.shape, other.spacing, other.origin)

    def __hash__(self):
        return hash((self.shape, self.spacing, self.origin))

    def __repr__(self):
        return f"Grid(shape={self.shape}, spacing={self.spacing})"


class Constant(Symbol):
    """A named scalar whose value is supplied at run time."""

    __slots__ = ("_value",)

    def __init__(self, name: str, value: float = 0.0):
        super().__init__(name)
        self.value = value

    @property
    def value(self):
        return self._value

    @value.setter
    def value(self, v):
        v = float(v)
        if not math.isfinite(v):
            raise ParameterError(f"constant {self.name} must be finite")
        self._value = v


def aligned_zeros(shape, dtype=np.float64, align: int = 64) -> np.ndarray:
    """Zero-filled C-contiguous array whose data pointer is ``align``-byte aligned."""
    dtype = np.dtype(dtype)
    n = int(np.prod(shape, dtype=np.int64)) if len(shape) else 1
    raw = np.zeros(n * dtype.itemsize + align, dtype=np.uint8)
    off = (-raw.ctypes.data) % align
    return raw[off:off + n * dtype.itemsize].view(dtype).reshape(shape)


class _Differentiable:
    """Derivative shorthands shared by dense fields."""

    def _as_expr(self):
        return Access(self, self.dimensions)

    def _space_dim(self, name):
        for d in self.grid.dimensions:
            if d.name == name:
                return d
        raise AttributeError(f"{self.name} has no dimension {name!r}")

    def diff(self, dim, deriv_order=1, fd_order=None, side="centered"):
        return make_derivative(self._as_expr(), dim, deriv_order,
                               self.space_order if fd_order is None else fd_order, side)

    def __getattr__(self, attr):
        # dx, dy, dz, dx2, dy2, dz2, dxl (left / backward), dxr (right / forward)
        if attr.startswith("d") and len(attr) >= 2 and attr[1] in _SPACE_NAMES:
            dim = self._space_dim(attr[1])
            rest = attr[2:]
            if rest == "":
                return self.diff(dim, 1)
            if rest == "2":
                return self.diff(dim, 2)
            if rest in ("l", "r"):
                return self.diff(dim, 1, 1, "left" if rest == "l" else "right")
        raise AttributeError(attr)

    @property
    def laplace(self):
        return Add(*[self.diff(d, 2) for d in self.grid.dimensions])

    # arithmetic delegates to the canonical access
    def __add__(self, o):
        return self._as_expr() + o

    def __radd__(self, o):
        return o + self._as_expr()

    def __sub__(self, o):
        return self._as_expr() - o

    def __rsub__(self, o):
        return sympify(o) - self._as_expr()

    def __mul__(self, o):
        return self._as_expr() * o

    def __rmul__(self, o):
        return sympify(o) * self._as_expr()

    def __truediv__(self, o):
        return self._as_expr() / o

    def __rtruediv__(self, o):
        return sympify(o) / self._as_expr()

    def __neg__(self):
        return -self._as_expr()

    def __pow__(self, o):
        return self._as_expr() ** o


class Function(_Differentiable):
    """Time-invariant dense field with a zero halo of ``space_order // 2`` points."""

    is_time_dependent = False
    is_sparse = False

    def __init__(self, name: str, grid: Grid, space_order: int = 2, dtype=None):
        if space_order < 1 or space_order % 2:
            raise OrderError(f"space_order must be even and positive, got {space_order}")
        self.name = name
        self.grid = grid
        self.space_order = int(space_order)
        self.halo = self.space_order // 2
        self.dtype = np.dtype(dtype or grid.dtype)
        self.dimensions = grid.dimensions
        self._data = None

    @property
    def padded_shape(self):
        return tuple(s + 2 * self.halo for s in self.grid.shape)

    @property
    def shape_allocated(self):
        return self.padded_shape

    @property
    def data(self) -> np.ndarray:
        if self._data is None:
            self._data = aligned_zeros(self.shape_allocated, self.dtype)
        return self._data

    @data.setter
    def data(self, arr):
        arr = np.asarray(arr)
        if arr.shape != self.shape_allocated:
            raise BindingError(
                f"{self.name}: expected shape {self.shape_allocated}, got {arr.shape}")
        self.data[...] = arr

    @property
    def interior(self) -> np.ndarray:
        """View of the physical (non-halo) points."""
        h = self.halo
        return self.data[tuple(slice(h, h + s) for s in self.grid.shape)]

    def index_layout(self):
        """Per index position: ('space', halo) or ('time', nbuf/None) or ('plain', 0)."""
        return [("space", self.halo)] * self.grid.ndim

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        if len(idx) != len(self.dimensions):
            raise BindingError(f"{self.name} takes {len(self.dimensions)} indices")
        return Access(self, idx)

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


class TimeFunction(Function):
    """Dense field carrying a time axis.

    With ``save=None`` the axis is a circular buffer of ``time_order + 1`` levels
    indexed modulo its length; otherwise ``save`` levels are stored.
    """

    is_time_dependent = True

    def __init__(self, name, grid, space_order=2, time_order=2, save=None, dtype=None):
        super().__init__(name, grid, space_order, dtype)
        if time_order < 1:
            raise OrderError("time_order must be >= 1")
        self.time_order = int(time_order)
        if save is not None and save < self.time_order + 1:
            raise ParameterError(f"save must be >= time_order + 1 = {self.time_order + 1}")
        self.save = None if save is None else int(save)
        self.time_dim = grid.time_dim
        self.dimensions = (grid.time_dim,) + grid.dimensions

    @property
    def buffered(self):
        return self.save is None

    @property
    def time_size(self):
        return self.time_order + 1 if self.save is None else self.save

    @property
    def shape_allocated(self):
        return (self.time_size,) + self.padded_shape

    @property
    def interior(self):
        h = self.halo
        return self.data[(slice(None),) + tuple(slice(h, h + s) for s in self.grid.shape)]

    def index_layout(self):
        return [("time", None if self.save is not None else self.time_size)] + \
            [("space", self.halo)] * self.grid.ndim

    @property
    def forward(self):
        t = self.time_dim
        return Access(self, (t + 1,) + self.grid.dimensions)

    @property
    def backward(self):
        t = self.time_dim
        return Access(self, (t - 1,) + self.grid.dimensions)

    @property
    def dt(self):
        side = "centered" if self.time_order >= 2 else "right"
        fd = 2 if self.time_order >= 2 else 1
        return make_derivative(self._as_expr(), self.time_dim, 1, fd, side)

    @property
    def dt2(self):
        if self.time_order < 2:
            raise OrderError(f"{self.name}.dt2 needs time_order >= 2")
        return make_derivative(self._as_expr(), self.time_dim, 2, 2)


def _field_orders(e: Expr):
    from .expr import accesses
    return [a.function.space_order for a in accesses(e)
            if hasattr(a.function, "space_order")]


def make_derivative(f, dim: Dimension, deriv_order: int, fd_order: int, side="centered"):
    """Derivative placeholder of ``f`` along ``dim``; validated against field halos."""
    f = sympify(f)
    if deriv_order < 1:
        raise OrderError("deriv_order must be >= 1")
    if fd_order < 1:
        raise OrderError("fd_order must be >= 1")
    if dim.kind == "space":
        if side == "centered":
            if fd_order % 2:
                raise OrderError(f"centered stencils need an even order, got {fd_order}")
            reach = fd_order // 2 + (deriv_order - 1) // 2
        else:
            reach = deriv_order + fd_order - 1
        for so in _field_orders(f):
            if fd_order > so or reach > so // 2:
                raise OrderError(
                    f"order {fd_order} stencil exceeds the declared space_order {so}")
    return Derivative(f, dim, deriv_order, fd_order, side)


class Eq:
    """An equation ``lhs = rhs``; ``accumulate`` marks ``lhs += rhs`` semantics."""

    accumulate = False

    def __init__(self, lhs, rhs=0):
        self.lhs = sympify(lhs)
        self.rhs = sympify(rhs)

    def __repr__(self):
        op = "+=" if self.accumulate else "="
        return f"{type(self).__name__}({self.lhs} {op} {self.rhs})"

    def evaluate(self):
        from .derivatives import expand_derivatives
        return type(self)(expand_derivatives(self.lhs), expand_derivatives(self.rhs))


class Inc(Eq):
    accumulate = True


def as_fraction(v):
    return v if isinstance(v, Fraction) else Fraction(v)


_ = Rational  # re-exported for convenience


class Array:
    """Plain named array without halo, used for auxiliary and hoisted data."""

    is_time_dependent = False
    is_sparse = False
    space_order = 0
    halo = 0

    def __init__(self, name: str, dimensions, data: np.ndarray):
        self.name = name
        self.dimensions = tuple(dimensions)
        self.data = data
        self.dtype = data.dtype

    def index_layout(self):
        return [("plain", 0)] * len(self.dimensions)

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Access(self, idx)

    def __repr__(self):
        return f"Array({self.name})"
