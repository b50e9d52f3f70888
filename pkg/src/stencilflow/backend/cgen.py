"""C99 emission of the loop-nest IR and optional compile-and-run through ctypes."""
from __future__ import annotations

import ctypes
import hashlib
import os
import shutil
import subprocess
import tempfile
from fractions import Fraction

import numpy as np

from ..errors import BindingError, CapabilityError, LoweringError
from ..symbolic.expr import Access, Add, Mul, Number, Temp
from ..symbolic.functions import Dimension
from ..symbolic.printer import CodePrinter
from ..compiler.ir import Assignment, Iteration

__all__ = ["emit_c99", "run_emitted", "find_compiler", "c_signature"]


def _ident(name: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in name)


def _ctype(dtype) -> str:
    dtype = np.dtype(dtype)
    if dtype.kind == "i":
        return "long"
    return "float" if dtype == np.float32 else "double"


def c_signature(ir):
    """Ordered kernel arguments: [(kind, name, ctype)]."""
    args = []
    for name in sorted(ir.functions):
        f = ir.functions[name]
        args.append(("array", name, _ctype(f.data.dtype)))
    for name in sorted(ir.scalars):
        args.append(("scalar", name, "double"))
    args.append(("time", "time_m", "long"))
    args.append(("time", "time_M", "long"))
    return args


class _CGen:
    def __init__(self, op):
        self.op = op
        self.ir = op.ir
        self.tvars = {}

    def int_code(self, e) -> str:
        if isinstance(e, Number):
            v = e.value
            if not (isinstance(v, Fraction) and v.denominator == 1):
                raise LoweringError(f"non-integer index {e}")
            return str(int(v))
        if isinstance(e, Dimension):
            return _ident(e.name)
        if isinstance(e, Access):
            return self.access(e)
        if isinstance(e, Add):
            return "(" + " + ".join(self.int_code(a) for a in e.args) + ")"
        if isinstance(e, Mul):
            return "(" + "*".join(self.int_code(a) for a in e.args) + ")"
        raise LoweringError(f"unsupported index expression {e}")

    def time_var(self, idx, modulo):
        k = (idx.key, modulo)
        if k not in self.tvars:
            name = f"ti{len(self.tvars)}"
            code = self.int_code(idx)
            if modulo:
                code = f"(({code}) % {modulo} + {modulo}) % {modulo}"
            self.tvars[k] = (name, code)
        return self.tvars[k][0]

    def access(self, a: Access) -> str:
        f = a.function
        parts = []
        for (kind, extra), idx in zip(f.index_layout(), a.indices):
            if kind == "time":
                parts.append(self.time_var(idx, extra))
                continue
            halo = extra if kind == "space" else 0
            code = self.int_code(idx)
            parts.append(f"{code} + {halo}" if halo else code)
        return f"F_{_ident(f.name)}({', '.join(parts)})"

    def leaf(self, n):
        if isinstance(n, Access):
            return self.access(n)
        if isinstance(n, Temp):
            return _ident(n.name)
        if isinstance(n, Dimension):
            raise LoweringError(f"dimension {n.name} used as a value")
        return "v_" + _ident(n.name)

    def stmt(self, a: Assignment, ind) -> list:
        pr = CodePrinter(self.leaf, "c")
        val = pr(a.value)
        if isinstance(a.target, Temp):
            return [ind + f"const real {_ident(a.target.name)} = {val};"]
        op = "+=" if a.accumulate else "="
        return [ind + f"{self.access(a.target)} {op} {val};"]

    def loop(self, it: Iteration, ind) -> list:
        if it.kind == "time":
            saved = self.tvars
            self.tvars = {}
            inner = self.nodes(it.body, ind + "  ")
            tv, self.tvars = self.tvars, saved
            if it.direction == "backward":
                head = f"for (long t = time_M; t >= time_m; t -= 1)"
            else:
                head = f"for (long t = time_m; t <= time_M; t += 1)"
            lines = [ind + head, ind + "{"]
            lines += [ind + f"  const long {n} = {c};" for n, c in tv.values()]
            return lines + inner + [ind + "}"]
        v = _ident(it.dim.name)
        if it.tile_of is not None:
            b = _ident(it.tile_of.dim.name)
            head = f"for (long {v} = {b}; {v} <= MIN({b} + {it.tile_of.step - 1}, {it.upper}); " \
                   f"{v} += 1)"
        else:
            head = f"for (long {v} = {it.lower}; {v} <= {it.upper}; {v} += {it.step})"
        lines = []
        if "parallel" in it.properties:
            lines.append(ind + "/* omp parallel for */")
        elif "serial" in it.properties:
            lines.append(ind + "/* serial: scatter updates */")
        lines += [ind + head, ind + "{"]
        lines += self.nodes(it.body, ind + "  ")
        return lines + [ind + "}"]

    def nodes(self, nodes, ind) -> list:
        out = []
        for n in nodes:
            if isinstance(n, Iteration):
                out += self.loop(n, ind)
            else:
                out += self.stmt(n, ind)
        return out

    def emit(self) -> str:
        ir = self.ir
        real = "float" if any(np.dtype(f.data.dtype) == np.float32
                              for f in ir.functions.values()) else "double"
        sig = c_signature(ir)
        params = []
        for kind, name, ct in sig:
            if kind == "array":
                params.append(f"{ct} *restrict {_ident(name)}_vec")
            elif kind == "scalar":
                params.append(f"const double v_{_ident(name)}")
            else:
                params.append(f"const long {name}")
        macros = []
        for name in sorted(ir.functions):
            f = ir.functions[name]
            shape = f.data.shape
            idx = [f"(long)(i{k})" for k in range(len(shape))]
            expr = idx[0]
            for k in range(1, len(shape)):
                expr = f"({expr})*{shape[k]} + {idx[k]}"
            args = ", ".join(f"i{k}" for k in range(len(shape)))
            macros.append(f"#define F_{_ident(name)}({args}) {_ident(name)}_vec[{expr}]")
        body = self.nodes(ir.prologue, "  ") + self.nodes(ir.body, "  ")
        lines = [
            f"/* {self.op.name}: generated stencil kernel */",
            "#include <math.h>",
            "",
            "#define MIN(a, b) ((a) < (b) ? (a) : (b))",
            f"typedef {real} real;",
            "",
            *macros,
            "",
            f"int {_ident(self.op.name)}(" + ",\n    ".join(params) + ")",
            "{",
            *body,
            "  return 0;",
            "}",
            "",
        ]
        return "\n".join(lines)


def emit_c99(op) -> str:
    """Self-contained C99 translation unit holding one kernel function."""
    return _CGen(op).emit()


def find_compiler():
    for cand in (os.environ.get("CC"), "gcc", "cc", "clang"):
        if cand and shutil.which(cand):
            return shutil.which(cand)
    return None


_CACHE = {}


def _build(source: str):
    key = hashlib.sha256(source.encode()).hexdigest()[:16]
    if key in _CACHE:
        return _CACHE[key]
    cc = find_compiler()
    if cc is None:
        raise CapabilityError("no C compiler found (set CC or install gcc)")
    # the loaded library stays mapped after its directory is removed
    with tempfile.TemporaryDirectory(prefix="sf_") as d:
        src = os.path.join(d, f"k_{key}.c")
        lib = os.path.join(d, f"k_{key}.so")
        with open(src, "w") as fh:
            fh.write(source)
        cmd = [cc, "-std=c99", "-O2", "-ffp-contract=off", "-fPIC", "-shared", src, "-o", lib,
               "-lm"]
        res = subprocess.run(cmd, capture_output=True, text=True)
        if res.returncode != 0:
            raise CapabilityError(f"C compilation failed:\n{res.stderr}")
        handle = ctypes.CDLL(lib)
    _CACHE[key] = handle
    return handle


def run_emitted(source: str, bindings, op):
    """Compile ``source`` and run it in place on ``bindings``; returns the arrays."""
    handle = _build(source)
    fn = getattr(handle, _ident(op.name))
    args = []
    for kind, name, ct in c_signature(op.ir):
        if kind == "array":
            arr = bindings.arrays[name]
            want = np.int64 if ct == "long" else (np.float32 if ct == "float" else np.float64)
            if arr.dtype != want or not arr.flags.c_contiguous:
                raise BindingError(f"{name}: C kernels need contiguous {np.dtype(want)} data")
            args.append(ctypes.c_void_p(arr.ctypes.data))
        elif kind == "scalar":
            args.append(ctypes.c_double(bindings.scalars[name]))
        else:
            v = getattr(bindings, name)
            args.append(ctypes.c_long(0 if v is None else v))
    fn.restype = ctypes.c_int
    rc = fn(*args)
    if rc != 0:
        raise CapabilityError(f"kernel returned {rc}")
    return bindings.arrays
