"""Exact finite-difference weights on integer offsets.

Weights come from the moment (Vandermonde) system

    sum_j w_j * o_j**p == p! * [p == n],   p = 0 .. len(offsets) - 1

solved in exact integer arithmetic with Bareiss fraction-free elimination.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

from .errors import ArityError, OrderError

__all__ = ["WeightSet", "fd_weights", "centered_offsets", "one_sided_offsets"]


@dataclass(frozen=True)
class WeightSet:
    deriv_order: int
    offsets: tuple[int, ...]
    weights: tuple[Fraction, ...]

    @property
    def scale_exponent(self) -> int:
        # weights apply with a factor 1/h**scale_exponent
        return self.deriv_order

    def items(self):
        return zip(self.offsets, self.weights)

    def moment(self, p: int) -> Fraction:
        return sum((w * Fraction(o) ** p for o, w in self.items()), Fraction(0))

    @property
    def accuracy_order(self) -> int:
        """Largest q such that the stencil is exact on all monomials of degree < n + q."""
        n = self.deriv_order
        p = len(self.offsets)
        while self.moment(p) == 0:
            p += 1
            if p > len(self.offsets) + 8:
                break
        return p - n

    def __getitem__(self, offset: int) -> Fraction:
        for o, w in self.items():
            if o == offset:
                return w
        raise KeyError(offset)


def _bareiss_solve(a: list[list[int]], b: list[int]) -> list[Fraction]:
    n = len(a)
    m = [row[:] + [rhs] for row, rhs in zip(a, b)]
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for r in range(k + 1, n):
                if m[r][k] != 0:
                    m[k], m[r] = m[r], m[k]
                    break
            else:
                raise ArityError("singular moment system (repeated offsets?)")
        for i in range(k + 1, n):
            for j in range(k + 1, n + 1):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    if m[n - 1][n - 1] == 0:
        raise ArityError("singular moment system (repeated offsets?)")
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        acc = Fraction(m[i][n])
        for j in range(i + 1, n):
            acc -= m[i][j] * x[j]
        x[i] = acc / m[i][i]
    return x


@lru_cache(maxsize=None)
def _weights(deriv_order: int, offsets: tuple[int, ...]) -> WeightSet:
    n = len(offsets)
    a = [[o ** p for o in offsets] for p in range(n)]
    b = [factorial(deriv_order) if p == deriv_order else 0 for p in range(n)]
    return WeightSet(deriv_order, offsets, tuple(_bareiss_solve(a, b)))


def fd_weights(deriv_order: int, offsets) -> WeightSet:
    """Weights of the ``deriv_order``-th derivative on integer ``offsets``.

    >>> [str(w) for w in fd_weights(2, [-1, 0, 1]).weights]
    ['1', '-2', '1']
    """
    if deriv_order < 0:
        raise OrderError(f"derivative order must be >= 0, got {deriv_order}")
    offs = tuple(sorted(int(o) for o in offsets))
    if len(set(offs)) != len(offs):
        raise ArityError(f"offsets must be distinct: {offsets}")
    if len(offs) < deriv_order + 1:
        raise ArityError(
            f"{len(offs)} offsets cannot support a derivative of order {deriv_order}")
    return _weights(deriv_order, offs)


def centered_offsets(k: int) -> list[int]:
    if k < 2 or k % 2:
        raise OrderError(f"centered stencils need an even order >= 2, got {k}")
    return list(range(-(k // 2), k // 2 + 1))


def one_sided_offsets(deriv_order: int, fd_order: int, side: str) -> list[int]:
    """Offsets for a one-sided stencil of accuracy ``fd_order``."""
    npts = deriv_order + fd_order
    if side == "left":
        return list(range(-(npts - 1), 1))
    if side == "right":
        return list(range(0, npts))
    raise OrderError(f"unknown stencil side {side!r}")
