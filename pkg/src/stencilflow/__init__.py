"""stencilflow: a symbolic finite-difference DSL, a small stencil compiler and
a seismic inversion toolkit built on top of it."""
from .errors import *  # noqa: F401,F403
from .fdcoeff import WeightSet, centered_offsets, fd_weights, one_sided_offsets
from .symbolic import (Constant, Eq, Function, Grid, Inc, TimeFunction, solve_linear)
from .sparse import SparseFunction, SparseTimeFunction
from .compiler.operator import Operator, autotune

__version__ = "0.1.0"

__all__ = ["WeightSet", "centered_offsets", "fd_weights", "one_sided_offsets", "Constant", "Eq",
           "Function", "Grid", "Inc", "TimeFunction", "solve_linear", "SparseFunction",
           "SparseTimeFunction", "Operator", "autotune"]
