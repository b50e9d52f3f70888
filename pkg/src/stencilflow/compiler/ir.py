"""Loop-nest intermediate representation."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

from ..symbolic.expr import Expr
from ..symbolic.printer import pretty

__all__ = ["Assignment", "Iteration", "LoopNestIR", "leaf_blocks", "iter_assignments",
           "count_iterations", "enumerate_points", "dump"]


@dataclass
class Assignment:
    target: Expr
    value: Expr
    accumulate: bool = False

    def __str__(self):
        op = "+=" if self.accumulate else "="
        return f"{pretty(self.target)} {op} {pretty(self.value)}"


@dataclass
class Iteration:
    """A loop over ``dim`` from ``lower`` to ``upper`` inclusive.

    ``tile_of`` marks an intra-tile loop: its real bounds are
    ``[blk, min(blk + tile_of.step - 1, upper)]`` where ``blk`` is the
    enclosing block loop's counter.
    """
    dim: object
    lower: object
    upper: object
    body: list
    direction: str = "forward"
    properties: frozenset = frozenset()
    step: int = 1
    tile_of: "Iteration | None" = None
    kind: str = "dense"          # dense | point | time | block

    @property
    def is_leaf(self):
        return all(isinstance(n, Assignment) for n in self.body)

    def header(self) -> str:
        if self.tile_of is not None:
            rng = f"[{self.tile_of.dim.name}, min({self.tile_of.dim.name} + " \
                  f"{self.tile_of.step - 1}, {self.upper})]"
        else:
            rng = f"[{self.lower}, {self.upper}]"
        step = f" step {self.step}" if self.step != 1 else ""
        props = " ".join(sorted(self.properties))
        d = " backward" if self.direction == "backward" else ""
        return f"for {self.dim.name} in {rng}{step}{d}" + (f" <{props}>" if props else "")


@dataclass
class LoopNestIR:
    body: list
    time_dim: object = None
    direction: str | None = None
    modulo: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)
    prologue: list = field(default_factory=list)
    hoisted: dict = field(default_factory=dict)
    scalars: dict = field(default_factory=dict)
    tiles: tuple | None = None

    def clone(self) -> "LoopNestIR":
        new = copy.copy(self)
        new.body = _clone_nodes(self.body)
        new.prologue = _clone_nodes(self.prologue)
        new.modulo = dict(self.modulo)
        new.functions = dict(self.functions)
        new.hoisted = dict(self.hoisted)
        new.scalars = dict(self.scalars)
        return new

    @property
    def time_loop(self):
        for n in self.body:
            if isinstance(n, Iteration) and n.kind == "time":
                return n
        return None

    def __str__(self):
        return dump(self)


def _clone_nodes(nodes):
    out = []
    for n in nodes:
        if isinstance(n, Iteration):
            c = copy.copy(n)
            c.body = _clone_nodes(n.body)
            out.append(c)
        else:
            out.append(copy.copy(n))
    # tile_of links must point into the cloned tree
    _relink(out, {})
    return out


def _relink(nodes, mapping):
    for n in nodes:
        if isinstance(n, Iteration):
            if n.tile_of is not None and n.tile_of.dim.name in mapping:
                n.tile_of = mapping[n.tile_of.dim.name]
            if n.kind == "block":
                mapping = dict(mapping)
                mapping[n.dim.name] = n
            _relink(n.body, mapping)


def leaf_blocks(nodes, path=()):
    """Yield (path of enclosing Iterations, leaf Iteration) for every innermost loop."""
    for n in nodes:
        if isinstance(n, Iteration):
            if n.is_leaf:
                yield path + (n,), n
            else:
                yield from leaf_blocks(n.body, path + (n,))


def iter_assignments(nodes):
    for n in nodes:
        if isinstance(n, Iteration):
            yield from iter_assignments(n.body)
        else:
            yield n


def _bounds(it: Iteration, env):
    if it.tile_of is not None:
        blk = env[it.tile_of.dim.name]
        return blk, min(blk + it.tile_of.step - 1, it.upper)
    return it.lower, it.upper


def enumerate_points(nest: Iteration, env=None):
    """Ordered list of index tuples (space dims only) visited by a dense nest."""
    env = dict(env or {})
    out = []

    def go(node, env):
        lo, hi = _bounds(node, env)
        rng = range(lo, hi + 1, node.step)
        for v in rng:
            e2 = dict(env)
            e2[node.dim.name] = v
            inner = [c for c in node.body if isinstance(c, Iteration)]
            if inner:
                for c in inner:
                    go(c, e2)
            else:
                out.append(tuple(e2[k] for k in sorted(e2) if not k.endswith("_blk")))

    go(nest, env)
    return out


def count_iterations(nest: Iteration) -> int:
    """Number of innermost iterations; counts blocked nests without enumerating them."""
    def extent(n: Iteration):
        return (n.upper - n.lower) // n.step + 1

    def go(node, env):
        if node.kind == "block":
            total = 0
            for b in range(node.lower, node.upper + 1, node.step):
                e2 = dict(env)
                e2[node.dim.name] = b
                total += sum(go(c, e2) for c in node.body if isinstance(c, Iteration))
            return total
        lo, hi = _bounds(node, env)
        n = (hi - lo) // node.step + 1
        inner = [c for c in node.body if isinstance(c, Iteration)]
        if not inner:
            return n
        if node.tile_of is None and all(c.kind != "block" and c.tile_of is None for c in inner):
            return n * sum(go(c, env) for c in inner)
        total = 0
        for v in range(lo, hi + 1, node.step):
            e2 = dict(env)
            e2[node.dim.name] = v
            total += sum(go(c, e2) for c in inner)
        return total

    _ = extent
    return go(nest, {})


def dump(ir: LoopNestIR) -> str:
    lines = []

    def emit(nodes, depth):
        pad = "  " * depth
        for n in nodes:
            if isinstance(n, Iteration):
                lines.append(pad + n.header())
                emit(n.body, depth + 1)
            else:
                lines.append(pad + str(n))

    if ir.prologue:
        lines.append("# prologue")
        emit(ir.prologue, 0)
        lines.append("# main")
    emit(ir.body, 0)
    return "\n".join(lines) + "\n"
