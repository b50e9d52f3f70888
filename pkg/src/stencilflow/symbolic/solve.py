"""Closed-form solution of equations that are affine in one access."""
from __future__ import annotations

from ..errors import NotLinearError, SingularError
from .derivatives import expand_derivatives
from .expr import (Access, Add, Expr, Mul, Number, ONE, Pow, Rational, ZERO, contains,
                   sympify)

__all__ = ["solve_linear", "linear_coefficients", "distribute_numbers"]


def linear_coefficients(e: Expr, target: Expr):
    """Return (a, b) with e == a*target + b and neither a nor b containing target."""
    if e == target:
        return ONE, ZERO
    if not contains(e, target):
        return ZERO, e
    if isinstance(e, Add):
        pairs = [linear_coefficients(t, target) for t in e.args]
        return Add(*[p[0] for p in pairs]), Add(*[p[1] for p in pairs])
    if isinstance(e, Mul):
        hit = [f for f in e.args if contains(f, target)]
        if len(hit) > 1:
            raise NotLinearError(f"{target} appears in a product with itself")
        others = [f for f in e.args if f is not hit[0]]
        a, b = linear_coefficients(hit[0], target)
        return Mul(a, *others), (Mul(b, *others) if b != ZERO else ZERO)
    raise NotLinearError(f"{target} appears nonlinearly in {e}")


def distribute_numbers(e: Expr) -> Expr:
    """Push a bare numeric factor into the sum it multiplies: c*(a+b) -> c*a + c*b."""
    if isinstance(e, Add):
        return Add(*[distribute_numbers(t) for t in e.args])
    if isinstance(e, Mul) and len(e.args) == 2 and isinstance(e.args[0], Number) \
            and isinstance(e.args[1], Add):
        c = e.args[0]
        return Add(*[distribute_numbers(Mul(c, t)) for t in e.args[1].args])
    return e


def solve_linear(eq, target) -> Expr:
    """Solve ``eq`` (an Eq or an expression equal to zero) for ``target``."""
    target = sympify(target)
    if not isinstance(target, Access):
        raise TypeError("solve_linear target must be a field access")
    if hasattr(eq, "lhs"):
        e = sympify(eq.lhs) - sympify(eq.rhs)
    else:
        e = sympify(eq)
    e = expand_derivatives(e)
    a, b = linear_coefficients(e, target)
    if a == ZERO:
        raise SingularError(f"the coefficient of {target} vanishes")
    inv = Pow(a, Rational(-1))
    terms = b.args if isinstance(b, Add) else (b,)
    return Add(*[distribute_numbers(Mul(Rational(-1), t, inv)) for t in terms])
