import numpy as np
import pytest

from stencilflow.compiler import passes
from stencilflow.compiler.cost import flop_count, oi_estimate, op_count
from stencilflow.compiler.ir import count_iterations, dump, enumerate_points, leaf_blocks
from stencilflow.compiler.lower import detect_time_direction, lower
from stencilflow.compiler.operator import Operator, autotune
from stencilflow.errors import LoweringError, ParameterError, SchedulingError
from stencilflow.symbolic.derivatives import expand_derivatives
from stencilflow.symbolic.expr import Add, Rational, Symbol
from stencilflow.symbolic.functions import Eq, Function, Grid, TimeFunction
from stencilflow.symbolic.solve import solve_linear
from stencilflow.verify import acoustic_kernel


def _wave(grid, order=2):
    u = TimeFunction("u", grid, space_order=order, time_order=2)
    m = Function("m", grid)
    eq = Eq(u.forward, solve_linear(Eq(m * u.dt2 - u.laplace, 0), u.forward))
    return eq, u, m


GOLDEN_DUMP = """\
for t in [time_m, time_M] <sequential>
  for x in [0, 5] <parallel>
    for y in [0, 4] <parallel vectorizable>
      u[1 + t, x, y] = -u[-1 + t, x, y] + 2*u[t, x, y] + dt**2*((u[t, -1 + x, y] + u[t, 1 + x, y] - 2*u[t, x, y])/h_x**2 + (u[t, x, -1 + y] + u[t, x, 1 + y] - 2*u[t, x, y])/h_y**2)/m[x, y]
"""


def test_canonical_nest_dump():
    g = Grid((6, 5), extent=(5.0, 4.0))
    eq, _, _ = _wave(g)
    assert dump(lower([eq])) == GOLDEN_DUMP


def test_time_invariant_equation_has_no_time_loop():
    g = Grid((6, 5), extent=(5.0, 4.0))
    f, p = Function("f", g), Function("p", g)
    ir = lower([Eq(f, p + 1)])
    assert ir.time_loop is None
    assert dump(ir).startswith("for x in [0, 5]")


def test_direction_detection():
    g = Grid((6, 5), extent=(5.0, 4.0))
    eq, u, _ = _wave(g)
    assert detect_time_direction([eq]) == "forward"
    v = TimeFunction("v", g, space_order=2, time_order=2)
    back = Eq(v.backward, 2 * v - v.forward + v.laplace)
    assert detect_time_direction([back]) == "backward"
    with pytest.raises(SchedulingError):
        detect_time_direction([eq, back])


def test_inconsistent_grids_rejected():
    a = Function("a", Grid((6, 5), extent=(5.0, 4.0)))
    b = Function("b", Grid((4, 4, 4), extent=(3.0, 3.0, 3.0)))
    with pytest.raises(LoweringError):
        lower([Eq(a, b + 1)])


def test_cse_binds_repeated_subtree():
    g = Grid((6, 5), extent=(5.0, 4.0))
    eq, _, _ = _wave(g)
    op = Operator([eq], opt=("cse",))
    text = op.dump()
    assert "r0 = -2*u[t, x, y]" in text
    assert text.count("-2*u[t, x, y]") == 1


def test_factorize_order4_dx2():
    w = TimeFunction("w", Grid((9,), extent=(8.0,)), space_order=4, time_order=1)
    e = expand_derivatives(w.dx2)
    numer = next(a for a in e.args if isinstance(a, Add))
    assert op_count(numer)[1] == 5
    fact = passes.factorize_weights(numer)
    assert op_count(fact)[1] == 3
    env_vals = np.random.default_rng(0).standard_normal(5)
    from stencilflow.symbolic.expr import accesses, evaluate
    env = dict(zip(accesses(numer), env_vals))
    assert evaluate(fact, env) == pytest.approx(evaluate(numer, env), rel=1e-14)


def test_flop_of_sum():
    assert op_count(Symbol("a") + Symbol("b")) == (1, 0)


def test_flop_count_stable_1d():
    g = Grid((11,), extent=(10.0,))
    eq, _, _ = _wave(g)
    counts = {flop_count(Operator([eq], opt=()).ir)["total"] for _ in range(3)}
    assert len(counts) == 1


def test_hoist_prologue():
    g = Grid((6, 5), extent=(5.0, 4.0))
    eq, _, _ = _wave(g)
    text = Operator([eq], opt=("hoist",)).dump()
    prologue = text.split("# main")[0]
    assert "s0 = dt**2" in prologue
    assert "a0[x, y]" in prologue and "/m[x, y]" in prologue


def test_fully_varying_expression_unchanged():
    g = Grid((6, 5), extent=(5.0, 4.0))
    f, p = TimeFunction("f", g, space_order=2, time_order=1), Function("p", g)
    eq = Eq(f.forward, f * p)
    assert Operator([eq], opt=("hoist",)).dump() == Operator([eq], opt=()).dump()


def _run_acoustic(opt=None, tiles=None, steps=12, shape=(24, 20), order=4):
    op, u, model = acoustic_kernel(shape, order, nbl=4, opt=opt, tiles=tiles)
    rng = np.random.default_rng(7)
    u.data[:] = 0
    u.data[0] = u.data[1] = rng.standard_normal(u.data.shape[1:])
    op.apply(time_m=1, time_M=steps, dt=0.9 * model.critical_dt)
    return np.array(u.data)


@pytest.mark.parametrize("opt", [("cse",), ("hoist",), ("cse", "hoist")])
def test_bitwise_passes(opt):
    assert np.array_equal(_run_acoustic(opt=()), _run_acoustic(opt=opt))


def test_factorize_within_tolerance():
    ref = _run_acoustic(opt=())
    got = _run_acoustic(opt=("cse", "factorize", "hoist"))
    assert np.max(np.abs(got - ref)) <= 1e-12 * np.max(np.abs(ref))


def test_blocking_bitwise():
    assert np.array_equal(_run_acoustic(), _run_acoustic(tiles=(5, 7)))
    assert np.array_equal(_run_acoustic(), _run_acoustic(tiles=(100, 100)))


def test_block_one_dimensional_split():
    g = Grid((10,), extent=(9.0,))
    f, p = Function("f", g), Function("p", g)
    ir = passes.block_loops(lower([Eq(f, p + 1)]), (4,))
    outer = ir.body[0]
    assert outer.kind == "block"
    assert [min(b + 3, 9) - b + 1 for b in range(outer.lower, outer.upper + 1, outer.step)] == [4, 4, 2]
    assert count_iterations(outer) == 10
    assert enumerate_points(outer) == [(i,) for i in range(10)]


def test_blocked_points_are_a_permutation():
    g = Grid((20, 20), extent=(19.0, 19.0))
    f, p = Function("f", g), Function("p", g)
    ir = lower([Eq(f, p + 1)])
    blocked = passes.block_loops(ir, (8, 8))
    a, b = enumerate_points(ir.body[0]), enumerate_points(blocked.body[0])
    assert len(b) == 400 and sorted(a) == sorted(b) and a != b


def test_tile_below_one_rejected():
    g = Grid((10,), extent=(9.0,))
    f, p = Function("f", g), Function("p", g)
    with pytest.raises(ParameterError):
        passes.block_loops(lower([Eq(f, p + 1)]), (0,))


def test_autotune():
    op, u, model = acoustic_kernel((20, 20), 4)
    kw = dict(time_m=1, time_M=4, dt=0.9 * model.critical_dt)
    assert autotune(op, [(8, 8)], **kw) == (8, 8)
    before = u.data.copy()
    assert autotune(op, [None, (8, 8)], **kw) in (None, (8, 8))
    assert np.array_equal(u.data, before)
    with pytest.raises(ParameterError):
        autotune(op, [(8, 8)], trial_steps=0, **kw)
    with pytest.raises(ParameterError):
        autotune(op, [], **kw)


def test_oi_increases_with_order():
    ois = [acoustic_kernel((16, 16, 16), k)[0].metadata["oi"] for k in (2, 4, 6, 8)]
    assert all(a < b for a, b in zip(ois, ois[1:]))


def test_pipeline_reduces_flops_3d():
    naive = acoustic_kernel((12, 12, 12), 8, opt=())[0].metadata["flops"]
    cse = acoustic_kernel((12, 12, 12), 8, opt=("cse",))[0].metadata["flops"]
    both = acoustic_kernel((12, 12, 12), 8, opt=("cse", "factorize"))[0].metadata["flops"]
    assert naive > cse > both


def test_metadata_fields():
    op = acoustic_kernel((10, 10), 2)[0]
    md = op.metadata
    assert md["flops"] == md["adds"] + md["muls"]
    assert md["oi"] == pytest.approx(oi_estimate(op.ir))
    assert md["passes"] == ["cse", "factorize", "hoist"]


def test_leaf_blocks_visit_every_assignment():
    g = Grid((6, 5), extent=(5.0, 4.0))
    eq, _, _ = _wave(g)
    leaves = list(leaf_blocks(lower([eq]).body))
    assert len(leaves) == 1
    _ = Rational
