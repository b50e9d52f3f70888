"""Replace derivative placeholders by weighted sums of shifted accesses."""
from __future__ import annotations

from ..fdcoeff import centered_offsets, fd_weights, one_sided_offsets
from .expr import Access, Add, Derivative, Expr, Mul, Pow, Rational

__all__ = ["expand_derivatives", "shift", "stencil_offsets"]


def stencil_offsets(d: Derivative) -> list[int]:
    n, k = d.deriv_order, d.fd_order
    if d.side == "centered":
        if d.dim.kind == "time":
            # time stencils stay on three levels
            return [-1, 0, 1]
        # a centered stencil of accuracy k for an n-th derivative
        half = k // 2 + (n - 1) // 2
        return centered_offsets(2 * half)
    return one_sided_offsets(n, k, d.side)


def shift(e: Expr, dim, offset: int) -> Expr:
    """Shift every access along ``dim`` by ``offset`` points."""
    if offset == 0:
        return e
    if isinstance(e, Access):
        dims = getattr(e.function, "dimensions", ())
        idx = list(e.indices)
        for i, d in enumerate(dims):
            if d.name == dim.name and i < len(idx):
                idx[i] = idx[i] + offset
        return Access(e.function, idx)
    if not e.args:
        return e
    return e.rebuild(tuple(shift(a, dim, offset) for a in e.args))


def _expand(d: Derivative) -> Expr:
    inner = expand_derivatives(d.expr)
    ws = fd_weights(d.deriv_order, stencil_offsets(d))
    terms = [Mul(Rational(w), shift(inner, d.dim, o)) for o, w in ws.items() if w != 0]
    return Mul(Pow(d.dim.spacing, Rational(-d.deriv_order)), Add(*terms))


def expand_derivatives(e: Expr) -> Expr:
    """Placeholder-free equivalent of ``e``; identity when there is nothing to expand."""
    if isinstance(e, Derivative):
        return _expand(e)
    if not e.args or isinstance(e, Access):
        return e
    new = tuple(expand_derivatives(a) for a in e.args)
    if all(a is b for a, b in zip(new, e.args)):
        return e
    return e.rebuild(new)
