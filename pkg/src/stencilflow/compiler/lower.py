"""Equation list -> scheduled loop-nest IR."""
from __future__ import annotations

from fractions import Fraction

from ..errors import LoweringError, SchedulingError
from ..symbolic.derivatives import expand_derivatives
from ..symbolic.expr import (Access, Add, Derivative, Number, Symbol, Temp, accesses,
                             free_symbols, preorder)
from ..symbolic.functions import Dimension, Eq
from .ir import Assignment, Iteration, LoopNestIR

__all__ = ["lower", "detect_time_direction", "affine_offset", "flatten_equations"]


def flatten_equations(eqs) -> list:
    out = []
    for e in eqs:
        if isinstance(e, (list, tuple)):
            out.extend(flatten_equations(e))
        else:
            out.append(e)
    return out


def affine_offset(idx, dim):
    """Offset ``c`` when ``idx == dim + c`` with integer ``c``; None otherwise."""
    if isinstance(idx, Dimension) and idx.name == dim.name:
        return 0
    if isinstance(idx, Add) and len(idx.args) == 2:
        a, b = idx.args
        if isinstance(a, Number) and isinstance(b, Symbol) and b.name == dim.name:
            v = a.value
            if isinstance(v, Fraction) and v.denominator == 1:
                return int(v)
    return None


def _const_index(idx):
    if isinstance(idx, Number) and isinstance(idx.value, Fraction) and idx.value.denominator == 1:
        return int(idx.value)
    return None


def _dims_in(e, kind=None):
    return {s for s in free_symbols(e) if isinstance(s, Dimension)
            and (kind is None or s.kind == kind)}


def _time_index(acc: Access):
    f = acc.function
    for d, idx in zip(getattr(f, "dimensions", ()), acc.indices):
        if getattr(d, "kind", None) == "time":
            return idx
    return None


def detect_time_direction(eqs):
    """'forward', 'backward', or None when no equation has a time dimension."""
    eqs = flatten_equations(eqs)
    seen = set()
    has_time = False
    for eq in eqs:
        lhs = expand_derivatives(eq.lhs)
        if _dims_in(lhs, "time") or _dims_in(expand_derivatives(eq.rhs), "time"):
            has_time = True
        if not isinstance(lhs, Access) or not getattr(lhs.function, "is_time_dependent", False):
            continue
        if getattr(lhs.function, "is_sparse", False):
            continue
        tidx = _time_index(lhs)
        if tidx is None:
            continue
        tdim = next(iter(_dims_in(tidx, "time")), None)
        if tdim is None:
            continue
        off = affine_offset(tidx, tdim)
        if off is None:
            raise SchedulingError(f"unsupported time index {tidx}")
        if off > 0:
            seen.add("forward")
        elif off < 0:
            seen.add("backward")
    if len(seen) > 1:
        raise SchedulingError("equations update the time axis in both directions")
    if not has_time:
        return None
    return seen.pop() if seen else "forward"


class _Eq:
    """An equation annotated with its iteration space and access sets."""

    def __init__(self, eq):
        self.lhs = expand_derivatives(eq.lhs)
        self.rhs = expand_derivatives(eq.rhs)
        self.accumulate = bool(getattr(eq, "accumulate", False))
        for n in list(preorder(self.lhs)) + list(preorder(self.rhs)):
            if isinstance(n, Derivative):
                raise LoweringError("derivative placeholders survived expansion")
        if not isinstance(self.lhs, Access):
            raise LoweringError(f"left-hand side must be a field access, got {self.lhs}")
        f = self.lhs.function
        pdims = _dims_in(self.lhs, "point") | (
            {f.pdim} if getattr(f, "is_sparse", False) else set())
        if pdims:
            if len(pdims) > 1:
                raise LoweringError("an equation may iterate over one point set only")
            self.kind = "point"
            self.pdim = pdims.pop()
            self.dims = ()
            self.key = ("point", self.pdim.name)
            if _dims_in(self.lhs, "space") or _dims_in(self.rhs, "space"):
                raise LoweringError("point equations cannot depend on dense loop indices")
            bad = _dims_in(self.rhs, "point") - {self.pdim}
            if bad:
                raise LoweringError(f"inconsistent point dimensions {sorted(d.name for d in bad)}")
            self.npoints = _npoints(self.lhs, self.rhs, self.pdim)
        else:
            self.kind = "dense"
            dims, shape = [], []
            for d, idx in zip(f.dimensions, self.lhs.indices):
                if d.kind != "space":
                    continue
                off = affine_offset(idx, d)
                if off == 0:
                    dims.append(d)
                    shape.append(f.grid.shape[f.grid.dimensions.index(d)])
                elif _const_index(idx) is None:
                    raise LoweringError(f"unsupported left-hand index {idx} along {d.name}")
            self.dims = tuple(dims)
            self.shape = tuple(shape)
            self.key = ("dense", tuple(d.name for d in dims), self.shape)
            names = {d.name for d in dims}
            extra = {d.name for d in _dims_in(self.rhs, "space")} - names
            if extra:
                raise LoweringError(
                    f"right-hand side iterates over {sorted(extra)} not spanned by {self.lhs}")
            if _dims_in(self.rhs, "point"):
                raise LoweringError("dense equations cannot read point-indexed data")
        self.write = (f.name, _tkey(self.lhs))
        self.reads = [(a.function.name, _tkey(a), _space_offsets(a)) for a in accesses(self.rhs)]
        if self.kind == "dense":
            for name, tk, offs in self.reads:
                if (name, tk) == self.write and offs != 0:
                    raise LoweringError(
                        f"{self.lhs} reads its own update at a shifted point (loop-carried)")


def _tkey(a: Access):
    t = _time_index(a)
    return None if t is None else t.key


def _space_offsets(a: Access):
    """0 when every space index is the bare dimension, else 1 (unknown / shifted)."""
    f = a.function
    for d, idx in zip(getattr(f, "dimensions", ()), a.indices):
        if getattr(d, "kind", None) == "space" and affine_offset(idx, d) != 0:
            return 1
    return 0


def _npoints(lhs, rhs, pdim):
    for a in accesses(lhs) + accesses(rhs) + [lhs]:
        f = a.function
        if getattr(f, "is_sparse", False) and f.pdim.name == pdim.name:
            return f.npoints
        dims = getattr(f, "dimensions", ())
        if dims and dims[0].name == pdim.name and hasattr(f, "data"):
            return f.data.shape[0]
    raise LoweringError(f"cannot size point dimension {pdim.name}")


def _hazard(a: _Eq, b: _Eq) -> bool:
    """True when b (after a) cannot share a loop nest with a."""
    if a.kind == "point":
        wa = {a.write[0]}
        wb = {b.write[0]}
        ra = {r[0] for r in a.reads}
        rb = {r[0] for r in b.reads}
        return bool(wa & rb) or bool(wb & ra)
    for name, tk, offs in b.reads:
        if (name, tk) == a.write and offs:
            return True
    for name, tk, offs in a.reads:
        if (name, tk) == b.write and offs:
            return True
    return False


def _dense_nest(dims, shape, body):
    node = body
    for i in range(len(dims) - 1, -1, -1):
        props = {"parallel"}
        if i == len(dims) - 1:
            props.add("vectorizable")
        node = [Iteration(dims[i], 0, shape[i] - 1, node, properties=frozenset(props),
                          kind="dense")]
    return node


def lower(eqs) -> LoopNestIR:
    eqs = flatten_equations(eqs)
    if not eqs:
        raise LoweringError("nothing to lower")
    direction = detect_time_direction(eqs)
    annotated = [_Eq(e) for e in eqs]

    clusters: list[list[_Eq]] = []
    for e in annotated:
        last = clusters[-1] if clusters else None
        if last is not None and last[0].key == e.key and not any(_hazard(p, e) for p in last):
            last.append(e)
        else:
            clusters.append([e])

    nodes = []
    for cl in clusters:
        body = [Assignment(e.lhs, e.rhs, e.accumulate) for e in cl]
        head = cl[0]
        if head.kind == "point":
            props = {"serial"} if any(e.accumulate for e in cl) else {"parallel"}
            nodes.append(Iteration(head.pdim, 0, head.npoints - 1, body,
                                   properties=frozenset(props), kind="point"))
        elif head.dims:
            nodes.extend(_dense_nest(head.dims, head.shape, body))
        else:
            nodes.extend(body)

    functions, modulo, scalars = {}, {}, set()
    time_dim = None
    for e in annotated:
        for a in [e.lhs] + accesses(e.lhs) + accesses(e.rhs):
            f = a.function
            functions[f.name] = f
            if getattr(f, "is_time_dependent", False) and not getattr(f, "is_sparse", False) \
                    and getattr(f, "save", 0) is None:
                modulo[f.name] = f.time_size
        for s in free_symbols(e.lhs) | free_symbols(e.rhs):
            if isinstance(s, Dimension):
                if s.kind == "time":
                    time_dim = s
            elif not isinstance(s, Temp):
                scalars.add(s)
    for f in list(functions.values()):
        if getattr(f, "is_sparse", False):
            functions[f.base_array.name] = f.base_array
            functions[f.weight_array.name] = f.weight_array

    if direction is not None and time_dim is not None:
        body = [Iteration(time_dim, "time_m", "time_M", nodes, direction=direction,
                          properties=frozenset({"sequential"}), kind="time")]
    else:
        body = nodes
        direction = None
    return LoopNestIR(body=body, time_dim=time_dim if direction else None,
                      direction=direction, modulo=modulo, functions=functions,
                      scalars={s.name: s for s in scalars})


_ = Eq
