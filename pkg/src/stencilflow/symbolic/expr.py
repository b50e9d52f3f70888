"""Immutable expression trees with exact rational constants.

Nodes are canonicalized at construction: commutative children are flattened
and sorted by a structural key, numeric subtrees fold exactly, like terms and
like powers merge.  Two structurally equal trees compare equal and hash alike.

The structural key starts with a flag telling whether the subtree touches a
time-dependent field.  Sorting on it places time-invariant factors first in
every product, which lets loop-invariant code motion hoist a product prefix
without changing the left-to-right evaluation order.
"""
from __future__ import annotations

import math
from fractions import Fraction
from numbers import Integral, Real

__all__ = [
    "Expr", "Number", "Rational", "Float", "Symbol", "Temp", "Access", "Add", "Mul", "Pow",
    "Derivative", "sympify", "ZERO", "ONE", "preorder", "postorder", "accesses",
    "free_symbols", "substitute", "simplify_fold", "evaluate", "contains",
]

# rank in the structural key
_R_NUM, _R_SYM, _R_ACC, _R_POW, _R_MUL, _R_ADD, _R_DER = range(7)


class Expr:
    """Base node.  Subclasses define ``args``, ``_build_key`` and ``rebuild``."""

    __slots__ = ("_key", "_hash", "_sort")
    args: tuple = ()

    # --- identity -----------------------------------------------------------
    @property
    def key(self):
        k = self._key
        if k is None:
            k = self._key = self._build_key()
        return k

    @property
    def sort_key(self):
        s = getattr(self, "_sort", None)
        return self.key if s is None else s

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr):
            if isinstance(other, (int, Fraction, float)):
                other = sympify(other)
            else:
                return NotImplemented
        return self.key == other.key

    def __hash__(self):
        h = self._hash
        if h is None:
            h = self._hash = hash(self.key)
        return h

    @property
    def time_varying(self) -> bool:
        return bool(self.key[0])

    # --- algebra ------------------------------------------------------------
    def __add__(self, other):
        return Add(self, sympify(other))

    def __radd__(self, other):
        return Add(sympify(other), self)

    def __sub__(self, other):
        return Add(self, Mul(Rational(-1), sympify(other)))

    def __rsub__(self, other):
        return Add(sympify(other), Mul(Rational(-1), self))

    def __mul__(self, other):
        return Mul(self, sympify(other))

    def __rmul__(self, other):
        return Mul(sympify(other), self)

    def __truediv__(self, other):
        return Mul(self, Pow(sympify(other), Rational(-1)))

    def __rtruediv__(self, other):
        return Mul(sympify(other), Pow(self, Rational(-1)))

    def __neg__(self):
        return Mul(Rational(-1), self)

    def __pos__(self):
        return self

    def __pow__(self, other):
        return Pow(self, sympify(other))

    def __rpow__(self, other):
        return Pow(sympify(other), self)

    # --- misc ---------------------------------------------------------------
    @property
    def is_number(self):
        return False

    def rebuild(self, args):
        return self

    def __str__(self):
        from .printer import pretty
        return pretty(self)

    def __repr__(self):
        return str(self)


# ---------------------------------------------------------------------------
# leaves

class Number(Expr):
    __slots__ = ("value",)

    @property
    def is_number(self):
        return True

    def __bool__(self):
        return self.value != 0


class Rational(Number):
    __slots__ = ()

    def __init__(self, value, denominator=1):
        self.value = Fraction(value) / denominator if denominator != 1 else Fraction(value)
        self._key = self._hash = self._sort = None

    def _build_key(self):
        return (0, _R_NUM, 0, self.value)


class Float(Number):
    __slots__ = ()

    def __init__(self, value):
        self.value = float(value)
        self._key = self._hash = self._sort = None

    def _build_key(self):
        return (0, _R_NUM, 1, self.value)


ZERO = Rational(0)
ONE = Rational(1)


def _num(v) -> Number:
    return Float(v) if isinstance(v, float) else Rational(v)


class Symbol(Expr):
    """A named scalar.  ``Dimension`` and ``Constant`` derive from it."""

    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._key = self._hash = self._sort = None

    def _build_key(self):
        return (0, _R_SYM, self.name)


class Temp(Symbol):
    """Compiler temporary; may carry a sort key borrowed from the subtree it replaces."""

    __slots__ = ("sort_override", "tv")

    def __init__(self, name: str, sort_key=None, time_varying=True):
        super().__init__(name)
        self.sort_override = sort_key
        self.tv = time_varying

    def _build_key(self):
        return (1 if self.tv else 0, _R_SYM, "$" + self.name)

    @property
    def sort_key(self):
        return self.key if self.sort_override is None else self.sort_override


class Access(Expr):
    """``function[indices]`` where indices are integer-valued expressions."""

    __slots__ = ("function", "indices", "sort_override")

    def __init__(self, function, indices, sort_key=None):
        self.function = function
        self.indices = tuple(sympify(i) for i in indices)
        self._key = self._hash = self._sort = None
        self.sort_override = sort_key

    @property
    def args(self):
        return self.indices

    @property
    def name(self):
        return self.function.name

    def _build_key(self):
        tv = 1 if getattr(self.function, "is_time_dependent", False) else 0
        return (tv, _R_ACC, self.function.name, tuple(i.key for i in self.indices))

    @property
    def sort_key(self):
        return self.key if self.sort_override is None else self.sort_override

    def rebuild(self, args):
        return Access(self.function, args, self.sort_override)


# ---------------------------------------------------------------------------
# composite nodes

def _sorted(children):
    return tuple(sorted(children, key=lambda c: (c.sort_key, c.key)))


def _split_coeff(term: Expr):
    """term -> (numeric coefficient, rest) with rest free of a leading number."""
    if isinstance(term, Number):
        return term.value, ONE
    if isinstance(term, Mul) and isinstance(term.args[0], Number):
        rest = term.args[1:]
        if len(rest) == 1:
            return term.args[0].value, rest[0]
        return term.args[0].value, Mul._raw(rest)
    return Fraction(1), term


def _times(c, e: Expr) -> Expr:
    if c == 1 and not isinstance(c, float):
        return e
    if c == 0:
        return _num(c) if isinstance(c, float) else ZERO
    if isinstance(e, Number):
        return _num(c * e.value)
    if e == ONE:
        return _num(c)
    if isinstance(e, Mul):
        return Mul._raw((_num(c),) + e.args)
    return Mul._raw((_num(c), e))


class Add(Expr):
    __slots__ = ("args",)

    def __new__(cls, *terms):
        flat = []
        for t in terms:
            t = sympify(t)
            if isinstance(t, Add):
                flat.extend(t.args)
            else:
                flat.append(t)
        const = Fraction(0)
        coeffs: dict = {}
        order = []
        for t in flat:
            if isinstance(t, Number):
                const = const + t.value
                continue
            c, rest = _split_coeff(t)
            k = rest.key
            if k in coeffs:
                coeffs[k] = (coeffs[k][0] + c, rest)
            else:
                coeffs[k] = (c, rest)
                order.append(k)
        out = []
        for k in order:
            c, rest = coeffs[k]
            if c == 0:
                continue
            out.append(_times(c, rest))
        if const != 0 or isinstance(const, float) and not out:
            out.append(_num(const))
        if not out:
            return ZERO
        if len(out) == 1:
            return out[0]
        return cls._raw(out)

    @classmethod
    def _raw(cls, args):
        obj = object.__new__(cls)
        obj.args = _sorted(args)
        obj._key = obj._hash = obj._sort = None
        return obj

    def _build_key(self):
        ks = tuple(a.key for a in self.args)
        return (max(k[0] for k in ks), _R_ADD, ks)

    def rebuild(self, args):
        return Add(*args)


class Mul(Expr):
    __slots__ = ("args",)

    def __new__(cls, *factors):
        flat = []
        for f in factors:
            f = sympify(f)
            if isinstance(f, Mul):
                flat.extend(f.args)
            else:
                flat.append(f)
        coeff = Fraction(1)
        powers: dict = {}
        order = []
        for f in flat:
            if isinstance(f, Number):
                coeff = coeff * f.value
                continue
            if isinstance(f, Pow):
                base, e = f.args[0], f.args[1].value
            else:
                base, e = f, Fraction(1)
            k = base.key
            if k in powers:
                b0, e0 = powers[k]
                powers[k] = (b0, e0 + e)
            else:
                powers[k] = (base, e)
                order.append(k)
        if coeff == 0:
            return _num(coeff) if isinstance(coeff, float) else ZERO
        out = []
        for k in order:
            base, e = powers[k]
            p = Pow(base, _num(e))
            if isinstance(p, Number):
                coeff = coeff * p.value
            elif isinstance(p, Mul):
                # Pow distributed over a product; merge back in
                for q in p.args:
                    if isinstance(q, Number):
                        coeff = coeff * q.value
                    else:
                        out.append(q)
            else:
                out.append(p)
        if not out:
            return _num(coeff)
        if coeff == 1 and not isinstance(coeff, float) and len(out) == 1:
            return out[0]
        if not (coeff == 1 and not isinstance(coeff, float)):
            out.append(_num(coeff))
        if len(out) == 1:
            return out[0]
        return cls._raw(out)

    @classmethod
    def _raw(cls, args):
        obj = object.__new__(cls)
        obj.args = _sorted(args)
        obj._key = obj._hash = obj._sort = None
        return obj

    def _build_key(self):
        ks = tuple(a.key for a in self.args)
        return (max(k[0] for k in ks), _R_MUL, ks)

    def rebuild(self, args):
        return Mul(*args)

    @property
    def coeff(self):
        a0 = self.args[0]
        return a0.value if isinstance(a0, Number) else Fraction(1)


def _is_int(v) -> bool:
    return isinstance(v, Fraction) and v.denominator == 1 or (
        isinstance(v, float) and v.is_integer())


class Pow(Expr):
    __slots__ = ("args",)

    def __new__(cls, base, exp):
        base, exp = sympify(base), sympify(exp)
        if not isinstance(exp, Number):
            raise TypeError("only numeric exponents are supported")
        e = exp.value
        if e == 0:
            return ONE
        if e == 1:
            return base
        if isinstance(base, Number):
            b = base.value
            if isinstance(b, Fraction) and isinstance(e, Fraction) and e.denominator == 1:
                if b == 0 and e < 0:
                    raise ZeroDivisionError("0 raised to a negative power")
                return Rational(b ** int(e))
            if isinstance(b, Fraction) and isinstance(e, Fraction):
                # exact roots only when perfect
                r = _exact_root(b, e)
                if r is not None:
                    return Rational(r)
                return cls._raw(base, exp)
            return Float(float(b) ** float(e))
        if isinstance(base, Pow) and _is_int(e):
            return Pow(base.args[0], _num(base.args[1].value * e))
        if isinstance(base, Mul) and _is_int(e):
            return Mul(*[Pow(f, exp) for f in base.args])
        return cls._raw(base, exp)

    @classmethod
    def _raw(cls, base, exp):
        obj = object.__new__(cls)
        obj.args = (base, exp)
        obj._key = obj._hash = obj._sort = None
        return obj

    @property
    def base(self):
        return self.args[0]

    @property
    def exp(self):
        return self.args[1]

    def _build_key(self):
        bk = self.args[0].key
        return (bk[0], _R_POW, bk, self.args[1].key)

    def rebuild(self, args):
        return Pow(*args)


def _exact_root(b: Fraction, e: Fraction):
    if b < 0:
        return None
    q = e.denominator
    num = round(b.numerator ** (1.0 / q))
    den = round(b.denominator ** (1.0 / q))
    if num ** q == b.numerator and den ** q == b.denominator:
        return Fraction(num, den) ** e.numerator
    return None


class Derivative(Expr):
    """Placeholder for ``d^n expr / d dim^n`` discretized at accuracy ``fd_order``."""

    __slots__ = ("args", "dim", "deriv_order", "fd_order", "side")

    def __init__(self, expr, dim, deriv_order: int, fd_order: int, side: str = "centered"):
        self.args = (sympify(expr),)
        self.dim = dim
        self.deriv_order = int(deriv_order)
        self.fd_order = int(fd_order)
        self.side = side
        self._key = self._hash = self._sort = None

    @property
    def expr(self):
        return self.args[0]

    def _build_key(self):
        ek = self.args[0].key
        return (ek[0], _R_DER, ek, self.dim.name, self.deriv_order, self.fd_order, self.side)

    def rebuild(self, args):
        return Derivative(args[0], self.dim, self.deriv_order, self.fd_order, self.side)


# ---------------------------------------------------------------------------
# helpers

def sympify(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, bool):
        return Rational(int(x))
    if isinstance(x, (Integral, Fraction)):
        return Rational(x)
    if isinstance(x, float):
        return Float(x)
    if isinstance(x, Real):  # numpy scalars
        return Float(float(x)) if not float(x).is_integer() or "float" in type(x).__name__ \
            else Rational(int(x))
    conv = getattr(x, "_as_expr", None)
    if conv is not None:
        return conv()
    raise TypeError(f"cannot convert {type(x).__name__} to an expression")


def preorder(e: Expr):
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(n.args))


def postorder(e: Expr):
    for a in e.args:
        yield from postorder(a)
    yield e


def accesses(e: Expr) -> list:
    seen, out = set(), []
    for n in preorder(e):
        if isinstance(n, Access) and n.key not in seen:
            seen.add(n.key)
            out.append(n)
    return out


def free_symbols(e: Expr) -> set:
    return {n for n in preorder(e) if isinstance(n, Symbol)}


def contains(e: Expr, target: Expr) -> bool:
    k = target.key
    return any(n.key == k for n in preorder(e))


def substitute(e: Expr, bindings) -> Expr:
    """Simultaneous structural substitution; replacements are not re-scanned."""
    if not bindings:
        return e
    table = {sympify(k).key: sympify(v) for k, v in bindings.items()}

    def go(n):
        hit = table.get(n.key)
        if hit is not None:
            return hit
        if not n.args:
            return n
        new = tuple(go(a) for a in n.args)
        if all(a is b for a, b in zip(new, n.args)):
            return n
        return n.rebuild(new)

    return go(e)


def simplify_fold(e: Expr) -> Expr:
    """Rebuild bottom-up so every node is re-canonicalized and numbers folded."""
    if not e.args:
        return e
    return e.rebuild(tuple(simplify_fold(a) for a in e.args))


def evaluate(e: Expr, env=None):
    """Numeric value of ``e``.  ``env`` maps symbols / accesses (or their names) to values.

    Exact when every leaf is a Fraction.
    """
    env = env or {}

    def look(n):
        if n in env:
            return env[n]
        name = getattr(n, "name", None)
        if isinstance(n, Symbol) and name in env:
            return env[name]
        val = getattr(n, "value", None)
        if val is not None and isinstance(n, Symbol):
            return val
        raise KeyError(f"no value for {n}")

    def go(n):
        if isinstance(n, Number):
            return n.value
        if isinstance(n, (Symbol, Access)):
            return look(n)
        if isinstance(n, Add):
            vals = [go(a) for a in n.args]
            acc = vals[0]
            for v in vals[1:]:
                acc = acc + v
            return acc
        if isinstance(n, Mul):
            acc = go(n.args[0])
            for a in n.args[1:]:
                acc = acc * go(a)
            return acc
        if isinstance(n, Pow):
            b, x = go(n.args[0]), n.args[1].value
            if _is_int(x):
                return b ** int(x)
            return float(b) ** float(x)
        raise TypeError(f"cannot evaluate {type(n).__name__}")

    return go(e)


def isfinite_number(v) -> bool:
    return not isinstance(v, float) or math.isfinite(v)
