from .expr import (Access, Add, Derivative, Expr, Float, Mul, Number, Pow, Rational, Symbol,
                   Temp, accesses, evaluate, free_symbols, preorder, simplify_fold,
                   substitute, sympify)
from .functions import (Array, Constant, Dimension, Eq, Function, Grid, Inc, TimeFunction,
                        aligned_zeros, make_derivative)
from .derivatives import expand_derivatives, shift
from .solve import solve_linear
from .printer import pretty

__all__ = [
    "Array", "Access", "Add", "Derivative", "Expr", "Float", "Mul", "Number", "Pow", "Rational",
    "Symbol", "Temp", "accesses", "evaluate", "free_symbols", "preorder", "simplify_fold",
    "substitute", "sympify", "Constant", "Dimension", "Eq", "Function", "Grid", "Inc",
    "TimeFunction", "aligned_zeros", "make_derivative", "expand_derivatives", "shift",
    "solve_linear", "pretty",
]
