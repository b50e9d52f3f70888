from fractions import Fraction
from math import factorial

import pytest
from hypothesis import given, settings, strategies as st

from stencilflow.errors import ArityError, OrderError
from stencilflow.fdcoeff import centered_offsets, fd_weights, one_sided_offsets


def test_second_derivative_three_point():
    ws = fd_weights(2, [-1, 0, 1])
    assert ws.weights == (1, -2, 1)
    assert ws.accuracy_order == 2


def test_backward_first_derivative():
    assert fd_weights(1, [-1, 0]).weights == (-1, 1)


def test_fourth_order_second_derivative():
    ws = fd_weights(2, centered_offsets(4))
    expect = [Fraction(-1, 12), Fraction(4, 3), Fraction(-5, 2), Fraction(4, 3), Fraction(-1, 12)]
    assert list(ws.weights) == expect
    assert ws[0] == Fraction(-5, 2)


def test_weights_are_exact_rationals():
    ws = fd_weights(2, centered_offsets(12))
    assert all(isinstance(w, Fraction) for w in ws.weights)


def test_offsets_are_sorted():
    assert fd_weights(1, [1, -1, 0]).offsets == (-1, 0, 1)


def test_one_sided_offsets():
    assert one_sided_offsets(1, 1, "left") == [-1, 0]
    assert one_sided_offsets(1, 2, "right") == [0, 1, 2]
    with pytest.raises(OrderError):
        one_sided_offsets(1, 1, "middle")


@pytest.mark.parametrize("k", [1, 3, 0, -2])
def test_odd_or_small_centered_order_rejected(k):
    with pytest.raises(OrderError):
        centered_offsets(k)


def test_duplicate_offsets_rejected():
    with pytest.raises(ArityError):
        fd_weights(1, [0, 0, 1])


def test_too_few_offsets_rejected():
    with pytest.raises(ArityError):
        fd_weights(2, [0, 1])


def test_negative_derivative_rejected():
    with pytest.raises(OrderError):
        fd_weights(-1, [0, 1])


offset_sets = st.lists(st.integers(-8, 8), min_size=2, max_size=7, unique=True)


@settings(max_examples=60, deadline=None)
@given(offsets=offset_sets, data=st.data())
def test_moment_conditions(offsets, data):
    n = data.draw(st.integers(0, len(offsets) - 1))
    ws = fd_weights(n, offsets)
    for p in range(len(offsets)):
        assert ws.moment(p) == (factorial(n) if p == n else 0)


@settings(max_examples=30, deadline=None)
@given(half=st.integers(1, 6), n=st.integers(1, 4))
def test_centered_symmetry(half, n):
    ws = fd_weights(n, centered_offsets(2 * half)) if n <= 2 * half else None
    if ws is None:
        return
    sign = 1 if n % 2 == 0 else -1
    for o in range(1, half + 1):
        assert ws[o] == sign * ws[-o]


@settings(max_examples=30, deadline=None)
@given(half=st.integers(1, 6))
def test_centered_accuracy_order(half):
    ws = fd_weights(2, centered_offsets(2 * half))
    assert ws.accuracy_order == 2 * half
    assert sum(ws.weights) == 0
