"""Reference execution engine.

The IR is translated to Python source in which every dense loop nest becomes a
vectorized numpy slice expression, block loops and the time loop stay Python
loops, and point loops use fancy indexing.  Injection uses one ``np.add.at``
per target with interleaved (point-major, corner-minor) indices so the
accumulation order matches a serial loop exactly.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from ..errors import InstabilityError, LoweringError
from ..symbolic.expr import Access, Add, Mul, Number, Symbol, Temp
from ..symbolic.functions import Dimension
from ..symbolic.printer import CodePrinter
from ..compiler.ir import Assignment, Iteration, LoopNestIR
from ..compiler.lower import affine_offset

__all__ = ["generate_python", "compile_python", "run_chunks"]


def _ident(name: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in name)


class _Gen:
    def __init__(self, ir: LoopNestIR):
        self.ir = ir
        self.lines = []
        self.tvars = {}          # (index key, modulo) -> (var, index expr)
        self.nest_defs = []      # source of nest closures
        self.nest_count = 0
        self.written_time = {}   # function name -> set of time vars written

    # -- leaf printing ------------------------------------------------------
    def fname(self, f):
        return "f_" + _ident(f.name)

    def scalar(self, s):
        if isinstance(s, Temp):
            return _ident(s.name)
        if isinstance(s, Dimension):
            raise LoweringError(f"dimension {s.name} used as a value")
        return "v_" + _ident(s.name)

    def int_code(self, e, ctx) -> str:
        if isinstance(e, Number):
            v = e.value
            if not (isinstance(v, Fraction) and v.denominator == 1):
                raise LoweringError(f"non-integer index {e}")
            return str(int(v))
        if isinstance(e, Dimension):
            if e.kind == "time":
                return "t"
            raise LoweringError(f"bare dimension {e.name} in an indirect index")
        if isinstance(e, Access):
            return self.access(e, ctx)
        if isinstance(e, Add):
            return "(" + " + ".join(self.int_code(a, ctx) for a in e.args) + ")"
        if isinstance(e, Mul):
            return "(" + "*".join(self.int_code(a, ctx) for a in e.args) + ")"
        raise LoweringError(f"unsupported index expression {e}")

    def time_var(self, idx, modulo):
        k = (idx.key, modulo)
        if k not in self.tvars:
            name = f"ti{len(self.tvars)}"
            code = self.int_code(idx, None)
            if modulo:
                code = f"({code}) % {modulo}"
            self.tvars[k] = (name, code)
        return self.tvars[k][0]

    def access(self, a: Access, ctx) -> str:
        f = a.function
        layout = f.index_layout()
        dims = getattr(f, "dimensions", ())
        parts = []
        used = []
        for pos, idx in enumerate(a.indices):
            kind, extra = layout[pos]
            if kind == "time":
                parts.append(self.time_var(idx, extra))
                continue
            halo = extra if kind == "space" else 0
            if isinstance(idx, Number):
                parts.append(str(int(idx.value) + halo))
                continue
            if ctx is not None and ctx["mode"] == "dense":
                hit = None
                for d in ctx["dims"]:
                    o = affine_offset(idx, d)
                    if o is not None:
                        hit = (d, o)
                        break
                if hit is None:
                    raise LoweringError(f"index {idx} of {f.name} is not affine in the nest")
                d, o = hit
                sh = halo + o
                lo, hi = ctx["bounds"][d.name]
                parts.append(("slice", d.name, f"{lo}+{sh}:{hi}+{sh}" if sh else f"{lo}:{hi}"))
                used.append(d.name)
                continue
            if ctx is not None and ctx["mode"] == "point":
                if isinstance(idx, Dimension) and idx.name == ctx["pdim"]:
                    parts.append(f"0:{ctx['n']}")
                    continue
                code = self.int_code(idx, ctx)
                parts.append(f"{code} + {halo}" if halo else code)
                continue
            raise LoweringError(f"cannot index {f.name} with {idx} here")
        _ = dims
        # insert new axes so the result aligns with the nest dimension order
        out = []
        if ctx is not None and ctx["mode"] == "dense":
            order = [d.name for d in ctx["dims"]]
            pending = [n for n in order]
            for p in parts:
                if isinstance(p, tuple):
                    name = p[1]
                    while pending and pending[0] != name:
                        if pending[0] not in used:
                            out.append("None")
                        pending.pop(0)
                    if pending:
                        pending.pop(0)
                    out.append(p[2])
                else:
                    out.append(p)
            for n in pending:
                if n not in used:
                    out.append("None")
        else:
            out = [p[2] if isinstance(p, tuple) else p for p in parts]
        return f"{self.fname(f)}[{', '.join(out)}]"

    def printer(self, ctx):
        def leaf(n):
            if isinstance(n, Access):
                return self.access(n, ctx)
            return self.scalar(n)
        return CodePrinter(leaf, "numpy")

    # -- statements ---------------------------------------------------------
    def assign(self, a: Assignment, ctx, ind):
        pr = self.printer(ctx)
        val = pr(a.value)
        if isinstance(a.target, Temp):
            return [ind + f"{_ident(a.target.name)} = {val}"]
        tgt = self.access(a.target, ctx)
        self._note_write(a.target)
        op = "+=" if a.accumulate else "="
        return [ind + f"{tgt} {op} {val}"]

    def _note_write(self, target):
        f = target.function
        if getattr(f, "is_time_dependent", False) and not getattr(f, "is_sparse", False):
            lay = f.index_layout()
            if lay and lay[0][0] == "time":
                var = self.time_var(target.indices[0], lay[0][1])
                self.written_time.setdefault(f.name, set()).add(var)

    def point_block(self, it: Iteration, ind):
        npts = it.upper - it.lower + 1
        ctx = {"mode": "point", "pdim": it.dim.name, "n": npts}
        lines = [ind + f"# point loop over {it.dim.name}"]
        body = list(it.body)
        i = 0
        while i < len(body):
            a = body[i]
            if not a.accumulate or isinstance(a.target, Temp):
                lines += self.assign(a, ctx, ind)
                i += 1
                continue
            group = [a]
            j = i + 1
            while j < len(body) and body[j].accumulate and isinstance(body[j].target, Access) \
                    and body[j].target.function is a.target.function:
                group.append(body[j])
                j += 1
            lines += self.scatter(group, ctx, ind, npts)
            i = j
        return lines

    def scatter(self, group, ctx, ind, npts):
        f = group[0].target.function
        layout = f.index_layout()
        pr = self.printer(ctx)
        idx_cols = []
        for pos in range(len(layout)):
            cols = []
            for a in group:
                sub = Access(f, a.target.indices)
                # reuse the access printer on a single position
                cols.append(self._index_part(sub, pos, ctx))
            idx_cols.append(cols)
        for a in group:
            self._note_write(a.target)
        parts = []
        for cols in idx_cols:
            if all(c == cols[0] for c in cols) and not self._is_vector(cols[0]):
                parts.append(cols[0])
            else:
                parts.append("np.stack([" + ", ".join(
                    f"np.broadcast_to({c}, ({npts},))" for c in cols) + "], 1).ravel()")
        vals = "np.stack([" + ", ".join(
            f"np.broadcast_to({pr(a.value)}, ({npts},))" for a in group) + "], 1).ravel()"
        return [ind + f"np.add.at({self.fname(f)}, ({', '.join(parts)},), {vals})"]

    def _is_vector(self, code: str) -> bool:
        return "[" in code or ":" in code

    def _index_part(self, a: Access, pos, ctx) -> str:
        f = a.function
        kind, extra = f.index_layout()[pos]
        idx = a.indices[pos]
        if kind == "time":
            return self.time_var(idx, extra)
        halo = extra if kind == "space" else 0
        if isinstance(idx, Number):
            return str(int(idx.value) + halo)
        if isinstance(idx, Dimension) and idx.name == ctx["pdim"]:
            return f"np.arange({ctx.get('n', 0)})"
        code = self.int_code(idx, ctx)
        return f"({code} + {halo})" if halo else code

    def dense_nest(self, top: Iteration, ind, pool_ok=True):
        """Emit a closure for the nest rooted at ``top`` and a call to it."""
        k = self.nest_count
        self.nest_count += 1
        chain = [top]
        while len(chain[-1].body) == 1 and isinstance(chain[-1].body[0], Iteration):
            chain.append(chain[-1].body[0])
        leaf = chain[-1]
        if not leaf.is_leaf:
            raise LoweringError("imperfect dense nests are not supported")
        dims = [it.dim for it in chain if it.kind == "dense"]
        bounds = {}
        src = [f"def _nest{k}(c0, c1):"]
        depth = 1
        for i, it in enumerate(chain):
            pad = "    " * depth
            if it.kind == "block":
                lo, hi = ("c0", "c1") if i == 0 else (str(it.lower), str(it.upper + 1))
                v = _ident(it.dim.name)
                src.append(pad + f"for {v} in range({lo}, {hi}, {it.step}):")
                depth += 1
                continue
            name = it.dim.name
            if it.tile_of is not None:
                b = _ident(it.tile_of.dim.name)
                src.append(pad + f"{name}_lo = {b}; {name}_hi = min({b} + {it.tile_of.step}, "
                                 f"{it.upper + 1})")
            elif i == 0:
                src.append(pad + f"{name}_lo = c0; {name}_hi = c1")
            else:
                src.append(pad + f"{name}_lo = {it.lower}; {name}_hi = {it.upper + 1}")
            bounds[name] = (f"{name}_lo", f"{name}_hi")
        ctx = {"mode": "dense", "dims": dims, "bounds": bounds}
        pad = "    " * depth
        for a in leaf.body:
            src += self.assign(a, ctx, pad)
        self.nest_defs.append(src)
        par = "parallel" in top.properties and pool_ok
        return [ind + f"_run(_nest{k}, {top.lower}, {top.upper + 1}, {top.step}, {par})"]

    def nodes(self, nodes, ind):
        lines = []
        for n in nodes:
            if isinstance(n, Assignment):
                lines += self.assign(n, {"mode": "dense", "dims": [], "bounds": {}}, ind)
            elif n.kind == "time":
                lines += self.time_loop(n, ind)
            elif n.kind == "point":
                lines += self.point_block(n, ind)
            else:
                lines += self.dense_nest(n, ind)
        return lines

    def time_loop(self, it: Iteration, ind):
        saved = self.tvars
        self.tvars = {}
        inner = self.nodes(it.body, ind + "    ")
        tv = self.tvars
        self.tvars = saved
        if it.direction == "backward":
            head = ind + "for t in range(time_M, time_m - 1, -1):"
        else:
            head = ind + "for t in range(time_m, time_M + 1):"
        lines = [head]
        lines += [ind + f"    {name} = {code}" for name, code in tv.values()]
        lines += inner
        checks = []
        for fname, vars_ in sorted(self.written_time.items()):
            for v in sorted(vars_):
                checks.append(f"np.isfinite(f_{_ident(fname)}[{v}]).all()")
        if checks:
            lines.append(ind + "    _step += 1")
            lines.append(ind + "    if nan_every and _step % nan_every == 0 and not (" +
                         " and ".join(checks) + "):")
            lines.append(ind + "        raise InstabilityError(f'non-finite values at t={t}')")
        return lines

    def generate(self) -> str:
        ir = self.ir
        body = ["_step = 0"]
        body += self.nodes(ir.prologue, "")
        body += self.nodes(ir.body, "")
        head = ["def kernel(F, S, time_m, time_M, _run, nan_every=0):"]
        binds = [f"f_{_ident(n)} = F[{n!r}]" for n in sorted(ir.functions)]
        binds += [f"v_{_ident(n)} = S[{n!r}]" for n in sorted(ir.scalars)]
        out = head + ["    " + b for b in binds]
        for d in self.nest_defs:
            out += ["    " + line for line in d]
        out += ["    " + line for line in body]
        out.append("    return None")
        return "\n".join(out) + "\n"


def generate_python(ir: LoopNestIR) -> str:
    return _Gen(ir).generate()


def compile_python(source: str):
    ns = {"np": np, "InstabilityError": InstabilityError}
    exec(compile(source, "<stencilflow-kernel>", "exec"), ns)
    return ns["kernel"]


def run_chunks(nthreads: int):
    """Return the ``_run`` helper used by generated kernels."""
    if nthreads <= 1:
        def _run(fn, lo, hi, step, parallel):
            fn(lo, hi)
        return _run, None
    pool = ThreadPoolExecutor(max_workers=nthreads)

    def _run(fn, lo, hi, step, parallel):
        starts = list(range(lo, hi, step))
        if not parallel or len(starts) < 2:
            fn(lo, hi)
            return
        n = min(nthreads, len(starts))
        cuts = [starts[(len(starts) * i) // n] for i in range(n)] + [hi]
        futs = [pool.submit(fn, a, b) for a, b in zip(cuts, cuts[1:]) if a < b]
        for f in futs:
            f.result()
    return _run, pool


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


_ = Mul, Symbol
