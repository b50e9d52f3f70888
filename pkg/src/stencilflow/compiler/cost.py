"""Flop and byte accounting on the optimized IR."""
from __future__ import annotations

from fractions import Fraction

from ..symbolic.expr import Access, Add, Mul, Number, Pow, Temp, preorder
from .ir import Iteration, LoopNestIR, leaf_blocks

__all__ = ["op_count", "flop_count", "bytes_per_point", "oi_estimate", "main_blocks",
           "points_per_step"]


def _is_sign(n) -> bool:
    return isinstance(n, Number) and abs(n.value) == 1


def op_count(e) -> tuple[int, int]:
    """(adds, muls) needed to evaluate ``e`` as the backends print it.

    Divisions count as multiplications; a sign flip is free.
    """
    if isinstance(e, Add):
        adds, muls = len(e.args) - 1, 0
        for t in e.args:
            a, m = op_count(t)
            adds += a
            muls += m
        return adds, muls
    if isinstance(e, Mul):
        factors = [f for f in e.args if not _is_sign(f)]
        adds, muls = 0, max(len(factors) - 1, 0)
        for f in factors:
            a, m = op_count(f)
            adds += a
            muls += m
        return adds, muls
    if isinstance(e, Pow):
        a, m = op_count(e.base)
        x = e.exp.value
        if isinstance(x, Fraction) and x.denominator == 1:
            n = abs(int(x))
            return a, m + (n - 1) + (1 if x < 0 else 0)
        return a, m + 1
    return 0, 0


def main_blocks(ir: LoopNestIR):
    """Leaf loops of the full-dimensional dense nests executed every step."""
    scope = ir.time_loop.body if ir.time_loop is not None else ir.body
    blocks = []
    for path, leaf in leaf_blocks(scope):
        if leaf.kind != "dense":
            continue
        dims = [it for it in path if it.kind == "dense"]
        blocks.append((len(dims), path, leaf))
    if not blocks:
        return []
    depth = max(b[0] for b in blocks)
    return [(path, leaf) for d, path, leaf in blocks if d == depth]


def points_per_step(ir: LoopNestIR) -> int:
    blocks = main_blocks(ir)
    if not blocks:
        return 0
    path, _ = blocks[0]
    n = 1
    for it in path:
        if it.kind == "dense":
            n *= it.upper - it.lower + 1
    return n


def flop_count(ir: LoopNestIR) -> dict:
    adds = muls = 0
    for _, leaf in main_blocks(ir):
        for a in leaf.body:
            x, y = op_count(a.value)
            adds += x + (1 if a.accumulate else 0)
            muls += y
    return {"adds": adds, "muls": muls, "total": adds + muls}


def bytes_per_point(ir: LoopNestIR) -> int:
    """Compulsory traffic: one element per distinct (field, time level) touched."""
    seen = {}
    for _, leaf in main_blocks(ir):
        for a in leaf.body:
            for n in list(preorder(a.value)) + [a.target]:
                if isinstance(n, Access) and not isinstance(n.function, type(None)):
                    f = n.function
                    tidx = None
                    for d, idx in zip(getattr(f, "dimensions", ()), n.indices):
                        if getattr(d, "kind", None) == "time":
                            tidx = idx.key
                    seen[(f.name, tidx)] = f.dtype.itemsize
    return sum(seen.values())


def oi_estimate(ir: LoopNestIR) -> float:
    b = bytes_per_point(ir)
    return flop_count(ir)["total"] / b if b else 0.0


_ = Iteration, Temp
