"""Symbolic (cse, factorize, hoist) and loop (block) transformations on the IR."""
from __future__ import annotations

import itertools
from collections import Counter
from fractions import Fraction

from ..errors import ParameterError
from ..symbolic.expr import (Access, Add, Mul, Number, ONE, Pow, Rational, Symbol, Temp,
                             _split_coeff, substitute)
from ..symbolic.functions import Array, Dimension, aligned_zeros
from .cost import op_count
from .ir import Assignment, Iteration, LoopNestIR, leaf_blocks

__all__ = ["cse", "cse_assignments", "factorize_weights", "factorize", "hoist_invariants",
           "block_loops"]

PREFIX_KEY = (-1,)


def _nodes(e):
    """Pre-order walk that does not descend into access indices."""
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        if not isinstance(n, Access):
            stack.extend(reversed(n.args))


def _accesses(e):
    return [n for n in _nodes(e) if isinstance(n, Access)]


def _tkey(a: Access):
    for d, idx in zip(getattr(a.function, "dimensions", ()), a.indices):
        if getattr(d, "kind", None) == "time":
            return idx.key
    return None


def _ops(e) -> int:
    return sum(op_count(e))


def _existing(ir, prefix):
    names = set()
    for nodes in (ir.body, ir.prologue):
        for _, leaf in leaf_blocks(nodes):
            for a in leaf.body:
                if isinstance(a.target, Symbol):
                    names.add(a.target.name)
        for n in nodes:
            if isinstance(n, Assignment) and isinstance(n.target, Symbol):
                names.add(n.target.name)
    names |= set(ir.hoisted)
    i = 0
    while f"{prefix}{i}" in names:
        i += 1
    return itertools.count(i)


# ---------------------------------------------------------------------------
# common sub-expression elimination

def cse_assignments(assigns, counter=None, prefix="r") -> list:
    """Bind every repeated non-leaf subtree to a temporary defined ahead of the block."""
    counter = counter if counter is not None else itertools.count()
    written = {(a.target.function.name, _tkey(a.target))
               for a in assigns if isinstance(a.target, Access)}

    def clean(n):
        return not any((x.function.name, _tkey(x)) in written for x in _accesses(n))

    counts = Counter()
    for a in assigns:
        for n in _nodes(a.value):
            if isinstance(n, (Add, Mul, Pow)) and _ops(n) >= 1:
                counts[n.key] += 1
    repeated = {k for k, c in counts.items() if c >= 2}
    if not repeated:
        return list(assigns)

    temps, defs = {}, []

    def rewrite(n):
        if not n.args or isinstance(n, Access):
            return n
        new_args = tuple(rewrite(a) for a in n.args)
        new = n if all(x is y for x, y in zip(new_args, n.args)) else n.rebuild(new_args)
        if n.key in repeated and clean(n):
            t = temps.get(n.key)
            if t is None:
                t = Temp(f"{prefix}{next(counter)}", sort_key=n.sort_key,
                         time_varying=n.time_varying)
                temps[n.key] = t
                defs.append(Assignment(t, new))
            return t
        return new

    body = [Assignment(a.target, rewrite(a.value), a.accumulate) for a in assigns]
    return defs + body


def cse(ir: LoopNestIR) -> LoopNestIR:
    new = ir.clone()
    counter = _existing(new, "r")
    for _, leaf in leaf_blocks(new.body):
        leaf.body = cse_assignments(leaf.body, counter)
    return new


# ---------------------------------------------------------------------------
# factorization of shared FD weights

def factorize_weights(e):
    """Group sum terms whose exact rational coefficients agree in magnitude."""
    if not e.args or isinstance(e, Access):
        return e
    new_args = tuple(factorize_weights(a) for a in e.args)
    if not all(x is y for x, y in zip(new_args, e.args)):
        e = e.rebuild(new_args)
    if not isinstance(e, Add):
        return e
    groups: dict = {}
    order = []
    for t in e.args:
        c, rest = _split_coeff(t)
        if isinstance(c, Fraction) and abs(c) != 1 and rest != ONE:
            k = abs(c)
            if k not in groups:
                groups[k] = []
                order.append(k)
            groups[k].append((t, c, rest))
    grouped = set()
    terms = []
    for k in order:
        items = groups[k]
        if len(items) < 2:
            continue
        inner = Add(*[rest if c > 0 else Mul(Rational(-1), rest) for _, c, rest in items])
        terms.append(Mul(Rational(k), inner))
        grouped.update(id(t) for t, _, _ in items)
    if not grouped:
        return e
    terms.extend(t for t in e.args if id(t) not in grouped)
    return Add(*terms)


def factorize(ir: LoopNestIR) -> LoopNestIR:
    new = ir.clone()
    for nodes in (new.body, new.prologue):
        for _, leaf in leaf_blocks(nodes):
            leaf.body = [Assignment(a.target, factorize_weights(a.value), a.accumulate)
                         for a in leaf.body]
    return new


# ---------------------------------------------------------------------------
# loop-invariant code motion

def _dense_path(path):
    return [it for it in path if it.kind == "dense"]


def _same_position(orig, args):
    """Rebuild a sum or product without merging terms, sorting like ``orig`` did.

    Hoisted leaves carry the sort key of what they replace, so the children
    come out in their old order and the rounding of the result is unchanged.
    """
    new = type(orig)._raw(args)
    new._sort = orig.sort_key
    return new


class _Hoister:
    def __init__(self, ir):
        self.ir = ir
        self.scounter = _existing(ir, "s")
        self.acounter = _existing(ir, "a")
        self.table = {}
        self.scalar_defs = []
        self.array_nests = []
        self.hoisted_scalars = set()

    # leaves allowed in a hoisted expression
    def _scalar_leaf(self, n):
        if isinstance(n, Number):
            return True
        if isinstance(n, Temp):
            return n.name in self.hoisted_scalars
        return isinstance(n, Symbol) and not isinstance(n, Dimension)

    def _array_leaf(self, n, ctx):
        if self._scalar_leaf(n):
            return True
        if not isinstance(n, Access) or ctx is None:
            return False
        f = n.function
        if getattr(f, "is_time_dependent", False) or getattr(f, "is_sparse", False):
            return False
        dims, shape = ctx
        fdims = getattr(f, "dimensions", ())
        if [d.name for d in fdims] != [d.name for d in dims]:
            return False
        if isinstance(f, Array):
            if f.data.shape != shape:
                return False
        elif tuple(f.grid.shape) != shape:
            return False
        return all(isinstance(i, Dimension) and i.name == d.name for i, d in zip(n.indices, dims))

    def _ok(self, n, leaf_test):
        for x in _nodes(n):
            if not x.args or isinstance(x, Access):
                if not leaf_test(x):
                    return False
        return True

    def scalar_ok(self, n):
        return self._ok(n, self._scalar_leaf)

    def array_ok(self, n, ctx):
        return ctx is not None and self._ok(n, lambda x: self._array_leaf(x, ctx))

    def _scalar(self, n, sort_key):
        k = ("s", n.key, sort_key)
        if k not in self.table:
            name = f"s{next(self.scounter)}"
            t = Temp(name, sort_key=sort_key, time_varying=False)
            self.hoisted_scalars.add(name)
            self.scalar_defs.append(Assignment(Temp(name, time_varying=False), n))
            self.table[k] = t
        return self.table[k]

    def _array(self, n, ctx, sort_key):
        k = ("a", n.key, sort_key, tuple(d.name for d in ctx[0]))
        if k not in self.table:
            dims, shape = ctx
            dtype = next(a.function.dtype for a in _accesses(n))
            arr = Array(f"a{next(self.acounter)}", dims, aligned_zeros(shape, dtype))
            value = self.expr(n, None)   # scalars inside the array definition
            body = [Assignment(Access(arr, dims), value)]
            nest = body
            for i in range(len(dims) - 1, -1, -1):
                props = {"parallel"} | ({"vectorizable"} if i == len(dims) - 1 else set())
                nest = [Iteration(dims[i], 0, shape[i] - 1, nest, properties=frozenset(props))]
            self.array_nests.extend(nest)
            self.ir.hoisted[arr.name] = arr
            self.ir.functions[arr.name] = arr
            self.table[k] = Access(arr, dims, sort_key=sort_key)
        return self.table[k]

    def expr(self, n, ctx):
        if not n.args or isinstance(n, Access):
            return n
        if _ops(n) >= 1:
            if self.scalar_ok(n):
                return self._scalar(n, n.sort_key)
            if self.array_ok(n, ctx):
                return self._array(n, ctx, n.sort_key)
        if isinstance(n, Mul) and len(n.args) > 2:
            i = 0
            while i < len(n.args) and (self.scalar_ok(n.args[i]) or self.array_ok(n.args[i], ctx)):
                i += 1
            if 2 <= i < len(n.args):
                pre = Mul._raw(n.args[:i])
                rep = self._scalar(pre, PREFIX_KEY) if self.scalar_ok(pre) \
                    else self._array(pre, ctx, PREFIX_KEY)
                rest = [self.expr(f, ctx) for f in n.args[i:]]
                return _same_position(n, (rep, *rest))
        new_args = tuple(self.expr(a, ctx) for a in n.args)
        if all(x is y for x, y in zip(new_args, n.args)):
            return n
        if isinstance(n, (Add, Mul)):
            return _same_position(n, new_args)
        return n.rebuild(new_args)


def _replace_in_order(e, table):
    """Like ``substitute`` but sums and products keep their argument order."""
    hit = table.get(e.key)
    if hit is not None:
        return hit
    if not e.args or isinstance(e, Access):
        return e
    new = tuple(_replace_in_order(a, table) for a in e.args)
    if all(x is y for x, y in zip(new, e.args)):
        return e
    if isinstance(e, (Add, Mul)):
        return _same_position(e, new)
    return e.rebuild(new)


def hoist_invariants(ir: LoopNestIR) -> LoopNestIR:
    """Move time-invariant work out of the time loop and scalar work out of all loops."""
    new = ir.clone()
    h = _Hoister(new)
    tloop = new.time_loop
    in_time = set()
    if tloop is not None:
        in_time = {id(leaf) for _, leaf in leaf_blocks(tloop.body)}
    for path, leaf in leaf_blocks(new.body):
        ctx = None
        dense = _dense_path(path)
        if id(leaf) in in_time and leaf.kind == "dense" and dense \
                and all(it.tile_of is None for it in path) \
                and not any(it.kind == "block" for it in path):
            ctx = (tuple(it.dim for it in dense), tuple(it.upper - it.lower + 1 for it in dense))
        aliases = {}
        body = []
        for a in leaf.body:
            value = _replace_in_order(a.value, {k.key: v for k, v in aliases.items()}) \
                if aliases else a.value
            value = h.expr(value, ctx)
            if isinstance(a.target, Temp) and (isinstance(value, Temp) and value.name in
                                               h.hoisted_scalars or (isinstance(value, Access)
                                                                     and value.function.name
                                                                     in new.hoisted)):
                # the temporary became a hoisted value: forward it, keeping the sort position
                if isinstance(value, Temp):
                    rep = Temp(value.name, sort_key=a.target.sort_key, time_varying=False)
                else:
                    rep = Access(value.function, value.indices, sort_key=a.target.sort_key)
                aliases[a.target] = rep
                continue
            body.append(Assignment(a.target, value, a.accumulate))
        leaf.body = body
    new.prologue = new.prologue + h.scalar_defs + h.array_nests
    return new


# ---------------------------------------------------------------------------
# loop blocking

def _perfect_chain(node: Iteration):
    chain = [node]
    while len(chain[-1].body) == 1 and isinstance(chain[-1].body[0], Iteration) \
            and chain[-1].body[0].kind == "dense":
        chain.append(chain[-1].body[0])
    return chain


def block_loops(ir: LoopNestIR, tiles) -> LoopNestIR:
    """Split the outer space loops of every full dense nest into tile / intra-tile pairs."""
    tiles = tuple(tiles)
    for t in tiles:
        if t is not None and (not isinstance(t, (int,)) or t < 1):
            raise ParameterError(f"tile sizes must be integers >= 1, got {tiles}")
    new = ir.clone()
    if not any(tiles):
        return new

    def transform(nodes):
        out = []
        for n in nodes:
            if not isinstance(n, Iteration):
                out.append(n)
                continue
            if n.kind == "time":
                n.body = transform(n.body)
                out.append(n)
                continue
            if n.kind != "dense":
                out.append(n)
                continue
            chain = _perfect_chain(n)
            blocks = []
            for i, it in enumerate(chain[:len(tiles)]):
                t = tiles[i]
                if not t:
                    continue
                b = Iteration(Dimension(f"{it.dim.name}_blk", "block"), it.lower, it.upper, [],
                              properties=frozenset({"parallel", "blocked"}), step=t,
                              kind="block")
                it.tile_of = b
                blocks.append(b)
            if not blocks:
                out.append(n)
                continue
            for outer, inner in zip(blocks, blocks[1:]):
                outer.body = [inner]
            blocks[-1].body = [chain[0]]
            out.append(blocks[0])
        return out

    new.body = transform(new.body)
    new.tiles = tiles
    return new


_ = Pow
