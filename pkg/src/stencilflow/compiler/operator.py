"""The compiled operator: IR + pass pipeline + argument binding + execution."""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import BindingError, ParameterError
from ..symbolic.expr import Access, preorder
from ..symbolic.functions import Constant
from .cost import bytes_per_point, flop_count, points_per_step
from .ir import LoopNestIR, dump, iter_assignments
from .lower import affine_offset, flatten_equations, lower
from .passes import block_loops, cse, factorize, hoist_invariants

__all__ = ["Operator", "Bindings", "ExecutionReport", "PASSES", "autotune"]

PASSES = {"cse": cse, "factorize": factorize, "hoist": hoist_invariants}
DEFAULT_PIPELINE = ("cse", "factorize", "hoist")


@dataclass
class Bindings:
    arrays: dict
    scalars: dict
    time_m: int | None = None
    time_M: int | None = None

    @property
    def nt(self):
        if self.time_m is None:
            return 0
        return self.time_M - self.time_m + 1


@dataclass
class ExecutionReport:
    wall_time: float
    flops: int
    gflops: float
    timesteps: int
    points: int
    backend: str = "numpy"
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


class Operator:
    """Compile ``equations`` into an executable stencil kernel.

    ``opt`` lists the symbolic passes applied in order after lowering; ``tiles``
    optionally blocks the outer space loops.  ``checks`` are callables run on
    the Bindings before every execution (stability gates and the like).
    """

    def __init__(self, equations, name="kernel", opt=DEFAULT_PIPELINE, tiles=None,
                 checks=(), default_time=None):
        self.name = name
        self.equations = flatten_equations(equations)
        self.opt = tuple(opt)
        for p in self.opt:
            if p not in PASSES:
                raise ParameterError(f"unknown pass {p!r}")
        ir = lower(self.equations)
        self.ir_lowered = ir
        for p in self.opt:
            ir = PASSES[p](ir)
        self.ir_optimized = ir
        self.tiles = tuple(tiles) if tiles else None
        self.ir = block_loops(ir, self.tiles) if self.tiles else ir
        self.checks = list(checks)
        self.default_time = default_time
        self._kernel = None
        self._csource = None
        self._metadata = self._compute_metadata()

    # -- metadata -----------------------------------------------------------
    def _compute_metadata(self):
        fl = flop_count(self.ir)
        by = bytes_per_point(self.ir)
        return {"flops": fl["total"], "adds": fl["adds"], "muls": fl["muls"], "bytes": by,
                "oi": fl["total"] / by if by else 0.0,
                "tiles": list(self.tiles) if self.tiles else None,
                "passes": list(self.opt), "points": points_per_step(self.ir)}

    @property
    def metadata(self) -> dict:
        return dict(self._metadata)

    @property
    def flops_per_point(self):
        return self._metadata["flops"]

    @property
    def oi(self):
        return self._metadata["oi"]

    def metadata_json(self) -> str:
        return json.dumps(self.metadata, indent=2, sort_keys=True)

    def dump(self) -> str:
        return dump(self.ir)

    def with_tiles(self, tiles):
        op = Operator.__new__(Operator)
        op.__dict__.update(self.__dict__)
        op.tiles = tuple(tiles) if tiles else None
        op.ir = block_loops(self.ir_optimized, op.tiles) if op.tiles else self.ir_optimized
        op._kernel = None
        op._csource = None
        op._metadata = op._compute_metadata()
        return op

    # -- source -------------------------------------------------------------
    @property
    def python_source(self) -> str:
        from ..backend.engine import generate_python
        return generate_python(self.ir)

    def emit_c(self) -> str:
        if self._csource is None:
            from ..backend.cgen import emit_c99
            self._csource = emit_c99(self)
        return self._csource

    @property
    def kernel(self):
        if self._kernel is None:
            from ..backend.engine import compile_python
            self._kernel = compile_python(self.python_source)
        return self._kernel

    # -- binding ------------------------------------------------------------
    def _time_bounds(self):
        ir = self.ir
        if ir.time_loop is None:
            return None, None
        tdim = ir.time_dim
        lo, hi = -10 ** 18, 10 ** 18
        for a in iter_assignments(ir.body):
            for n in list(preorder(a.value)) + list(preorder(a.target)):
                if not isinstance(n, Access):
                    continue
                f = n.function
                size = None
                if getattr(f, "is_sparse", False):
                    size = f.nt
                elif getattr(f, "is_time_dependent", False) and getattr(f, "save", None):
                    size = f.save
                if size is None:
                    continue
                for d, idx in zip(f.dimensions, n.indices):
                    if d.kind == "time":
                        o = affine_offset(idx, tdim)
                        if o is None:
                            continue
                        lo = max(lo, -o)
                        hi = min(hi, size - 1 - o)
        if lo == -10 ** 18 or hi == 10 ** 18:
            return None, None
        return lo, hi

    def arguments(self, time_m=None, time_M=None, **kwargs) -> Bindings:
        ir = self.ir
        arrays = {}
        for name, f in ir.functions.items():
            if name in kwargs:
                arr = kwargs[name]
                arr = getattr(arr, "data", arr)
                arr = np.asarray(arr)
                if arr.shape != f.data.shape:
                    raise BindingError(
                        f"{name}: expected shape {f.data.shape}, got {arr.shape}")
                arrays[name] = arr
            else:
                arrays[name] = f.data
        spacing = {}
        for f in ir.functions.values():
            g = getattr(f, "grid", None)
            if g is not None:
                spacing.update(g.spacing_map)
        scalars = {}
        for name, sym in ir.scalars.items():
            if name in kwargs:
                scalars[name] = float(kwargs[name])
            elif isinstance(sym, Constant):
                scalars[name] = sym.value
            elif name in spacing:
                scalars[name] = spacing[name]
            else:
                raise BindingError(f"no value bound for symbol {name!r}")
        unknown = set(kwargs) - set(ir.functions) - set(ir.scalars)
        if unknown:
            raise BindingError(f"unknown arguments {sorted(unknown)}")
        if ir.time_loop is not None:
            dm, dM = self.default_time if self.default_time else self._time_bounds()
            time_m = dm if time_m is None else time_m
            time_M = dM if time_M is None else time_M
            if time_m is None or time_M is None:
                raise BindingError("time range required (time_m, time_M)")
        return Bindings(arrays, scalars, time_m, time_M)

    # -- execution ----------------------------------------------------------
    def apply(self, time_m=None, time_M=None, nthreads=1, nan_check=0, backend="numpy",
              **kwargs) -> ExecutionReport:
        b = self.arguments(time_m, time_M, **kwargs)
        return self.execute(b, nthreads=nthreads, nan_check=nan_check, backend=backend)

    def execute(self, b: Bindings, nthreads=1, nan_check=0, backend="numpy") -> ExecutionReport:
        for chk in self.checks:
            chk(b)
        if backend == "c":
            from ..backend.cgen import run_emitted
            t0 = time.perf_counter()
            run_emitted(self.emit_c(), b, self)
            wall = time.perf_counter() - t0
        else:
            from ..backend.engine import run_chunks
            run, pool = run_chunks(nthreads)
            tm = b.time_m if b.time_m is not None else 0
            tM = b.time_M if b.time_M is not None else 0
            t0 = time.perf_counter()
            try:
                self.kernel(b.arrays, b.scalars, tm, tM, run, nan_check)
            finally:
                if pool is not None:
                    pool.shutdown()
            wall = time.perf_counter() - t0
        steps = b.nt if self.ir.time_loop is not None else 1
        flops = self.flops_per_point * self._metadata["points"] * steps
        return ExecutionReport(wall, flops, flops / wall / 1e9 if wall > 0 else 0.0, steps,
                               self._metadata["points"], backend)

    def __repr__(self):
        return f"Operator({self.name}, passes={self.opt}, tiles={self.tiles})"


def autotune(op: Operator, candidates, trial_steps: int = 2, repeats: int = 1, **kwargs):
    """Time each tile candidate on scratch copies of the bound arrays; return the fastest."""
    candidates = list(candidates)
    if not candidates:
        raise ParameterError("autotune needs at least one candidate")
    if trial_steps < 1:
        raise ParameterError("trial_steps must be >= 1")
    base = op.arguments(**kwargs)
    if base.time_m is not None:
        if op.ir.direction == "backward":
            tm, tM = max(base.time_m, base.time_M - trial_steps + 1), base.time_M
        else:
            tm, tM = base.time_m, min(base.time_M, base.time_m + trial_steps - 1)
    else:
        tm = tM = None
    best, best_t = None, None
    for cand in candidates:
        trial = op.with_tiles(cand)
        elapsed = float("inf")
        for _ in range(repeats):
            scratch = Bindings({k: v.copy() for k, v in base.arrays.items()},
                               dict(base.scalars), tm, tM)
            for name, f in trial.ir.functions.items():
                if name not in scratch.arrays:
                    scratch.arrays[name] = f.data.copy()
            rep = trial.execute(scratch)
            elapsed = min(elapsed, rep.wall_time)
        if best_t is None or elapsed < best_t:
            best, best_t = cand, elapsed
    return best


_ = LoopNestIR
