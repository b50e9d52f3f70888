"""Text renderings of expression trees.

``CodePrinter`` fixes the floating-point evaluation order that both backends
share: every child of a sum or product is rendered as a parenthesized atom and
the atoms are combined left to right in canonical order.  Integer powers
become repeated products and negative powers a reciprocal atom, so replacing
any subtree by a temporary holding its value never changes the result bits.
"""
from __future__ import annotations

from fractions import Fraction

from .expr import Access, Add, Derivative, Float, Mul, Number, Pow, Rational, Symbol

__all__ = ["pretty", "CodePrinter", "float_literal"]


def float_literal(v) -> str:
    f = float(v)
    s = repr(f)
    if "inf" in s or "nan" in s:
        raise ValueError(f"non-finite literal {s}")
    if "." not in s and "e" not in s:
        s += ".0"
    return s


def _pretty_num(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return repr(v)


def pretty(e) -> str:
    """Human-readable, deterministic rendering used for IR dumps and repr."""
    if isinstance(e, Number):
        return _pretty_num(e.value)
    if isinstance(e, Symbol):
        return e.name
    if isinstance(e, Access):
        return f"{e.function.name}[{', '.join(pretty(i) for i in e.indices)}]"
    if isinstance(e, Derivative):
        side = "" if e.side == "centered" else f", {e.side}"
        return f"D{e.deriv_order}[{e.dim.name}; {e.fd_order}{side}]({pretty(e.expr)})"
    if isinstance(e, Add):
        out = ""
        for i, t in enumerate(e.args):
            s = pretty(t)
            if i == 0:
                out = s
            elif s.startswith("-"):
                out += " - " + s[1:]
            else:
                out += " + " + s
        return out
    if isinstance(e, Mul):
        num, den = [], []
        sign = ""
        for f in e.args:
            if isinstance(f, Number):
                v = f.value
                if v == -1:
                    sign = "-"
                    continue
                if v < 0:
                    sign = "-"
                    v = -v
                if isinstance(v, Fraction) and v.denominator != 1:
                    if v.numerator != 1:
                        num.append(str(v.numerator))
                    den.append(str(v.denominator))
                else:
                    num.append(_pretty_num(v))
                continue
            if isinstance(f, Pow) and f.exp.value < 0:
                inv = Pow(f.base, Rational(-f.exp.value)) if isinstance(f.exp, Rational) \
                    else Pow(f.base, Float(-f.exp.value))
                den.append(_atom(inv))
            else:
                num.append(_atom(f))
        s = "*".join(num) if num else "1"
        if den:
            s += "/" + (den[0] if len(den) == 1 else "(" + "*".join(den) + ")")
        return sign + s
    if isinstance(e, Pow):
        return f"{_atom(e.base)}**{_pretty_num(e.exp.value)}"
    return object.__repr__(e)


def _atom(e) -> str:
    s = pretty(e)
    if isinstance(e, (Add, Mul)) or (isinstance(e, Number) and s.startswith("-")):
        return f"({s})"
    if isinstance(e, Number) and "/" in s:
        return f"({s})"
    return s


class CodePrinter:
    """Render an expression as C / Python source text.

    ``leaf`` maps a Symbol or Access to source text.  ``dialect`` chooses the
    spelling of roots and general powers ("c" or "numpy").
    """

    def __init__(self, leaf, dialect: str = "numpy", literal=float_literal):
        self.leaf = leaf
        self.dialect = dialect
        self.literal = literal

    def __call__(self, e) -> str:
        return self.emit(e)

    def emit(self, e) -> str:
        if isinstance(e, Number):
            s = self.literal(e.value)
            return f"({s})" if s.startswith("-") else s
        if isinstance(e, (Symbol, Access)):
            return self.leaf(e)
        if isinstance(e, Add):
            parts = []
            for i, t in enumerate(e.args):
                if isinstance(t, Mul) and isinstance(t.args[0], Number) and t.args[0].value == -1 \
                        and not isinstance(t.args[0].value, float):
                    rest = Mul._raw(t.args[1:]) if len(t.args) > 2 else t.args[1]
                    s = self.atom(rest)
                    parts.append(f"-{s}" if i == 0 else f" - {s}")
                else:
                    s = self.atom(t)
                    parts.append(s if i == 0 else f" + {s}")
            return "".join(parts)
        if isinstance(e, Mul):
            args = e.args
            sign = ""
            if isinstance(args[0], Number) and abs(args[0].value) == 1:
                sign = "-" if args[0].value < 0 else ""
                args = args[1:]
            body = "*".join(self.atom(f) for f in args)
            if sign:
                return f"-({body})" if len(args) > 1 else f"-{body}"
            return body
        if isinstance(e, Pow):
            return self.power(e)
        raise TypeError(f"cannot print {type(e).__name__}")

    def atom(self, e) -> str:
        s = self.emit(e)
        if isinstance(e, (Add, Mul)):
            return f"({s})"
        return s

    def power(self, e) -> str:
        x = e.exp.value
        base = self.atom(e.base)
        if isinstance(x, Fraction) and x.denominator == 1:
            n = abs(int(x))
            prod = "*".join([base] * n)
            if x > 0:
                return f"({prod})" if n > 1 else prod
            one = self.literal(1.0)
            return f"({one}/({prod}))" if n > 1 else f"({one}/{base})"
        if x == Fraction(1, 2):
            return f"sqrt({base})" if self.dialect == "c" else f"np.sqrt({base})"
        lit = self.literal(float(x))
        if self.dialect == "c":
            return f"pow({base}, {lit})"
        return f"np.power({base}, {lit})"
