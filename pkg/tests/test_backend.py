import numpy as np
import pytest

from stencilflow.backend.cgen import find_compiler
from stencilflow.backend.gridio import read_grid, write_grid, write_json
from stencilflow.compiler.operator import Operator
from stencilflow.errors import BindingError, InstabilityError, ParameterError
from stencilflow.seismic import AcquisitionGeometry, SeismicModel, adjoint_operator
from stencilflow.symbolic.functions import Eq, Grid, TimeFunction
from stencilflow.verify import acoustic_kernel

needs_cc = pytest.mark.skipif(find_compiler() is None, reason="no C compiler available")


def _seeded(shape=(30, 26), order=4, nbl=4, seed=1, **kw):
    op, u, model = acoustic_kernel(shape, order, nbl=nbl, **kw)
    rng = np.random.default_rng(seed)
    u.data[:] = 0
    inner = tuple(slice(s // 3, 2 * s // 3) for s in u.data.shape[1:])
    u.data[(1,) + inner] = rng.standard_normal([sl.stop - sl.start for sl in inner])
    return op, u, model


def test_zero_in_zero_out():
    op, u, model = acoustic_kernel((16, 16), 4, nbl=3)
    u.data[:] = 0
    op.apply(time_m=1, time_M=10, dt=0.9 * model.critical_dt)
    assert not u.data.any()


def test_impulse_response_one_step():
    op, u, model = acoustic_kernel((9, 9), 2, spacing=1.0)
    dt = 0.5 * model.critical_dt
    m = model.m_values[0, 0]
    u.data[:] = 0
    c = (4, 4)
    u.interior[1][c] = 1.0
    op.apply(time_m=1, time_M=1, dt=dt)
    nxt = u.interior[2]
    assert nxt[c] == pytest.approx(2 - 4 * dt ** 2 / m, rel=1e-14)
    assert nxt[3, 4] == pytest.approx(dt ** 2 / m, rel=1e-14)
    assert nxt[2, 4] == 0.0 and nxt[3, 3] == 0.0


def test_runs_are_deterministic():
    a = _seeded()
    b = _seeded()
    for op, u, model in (a, b):
        op.apply(time_m=1, time_M=20, dt=0.9 * model.critical_dt)
    assert np.array_equal(a[1].data, b[1].data)


def test_report_fields():
    op, u, model = _seeded()
    rep = op.apply(time_m=1, time_M=5, dt=0.9 * model.critical_dt)
    assert rep.timesteps == 5
    assert rep.flops == op.metadata["flops"] * rep.points * 5
    assert rep.wall_time > 0


def test_unknown_argument():
    op, u, model = _seeded()
    with pytest.raises(BindingError):
        op.apply(time_m=1, time_M=2, dt=1e-3, bogus=1.0)


def test_unbound_symbol():
    op, u, model = _seeded()
    with pytest.raises(BindingError):
        op.apply(time_m=1, time_M=2)


def test_nan_detection():
    op, u, model = _seeded()
    u.data[1, 10, 10] = np.nan
    with pytest.raises(InstabilityError):
        op.apply(time_m=1, time_M=5, dt=0.9 * model.critical_dt, nan_check=1)


@needs_cc
def test_c_matches_interpreter_100_steps():
    ref_op, ref_u, model = _seeded()
    c_op, c_u, _ = _seeded()
    dt = 0.9 * model.critical_dt
    ref_op.apply(time_m=1, time_M=100, dt=dt)
    c_op.apply(time_m=1, time_M=100, dt=dt, backend="c")
    scale = np.abs(ref_u.data).max()
    assert scale > 0
    assert np.abs(c_u.data - ref_u.data).max() <= 1e-12 * scale


@needs_cc
def test_c_copy_kernel_exact():
    g = Grid((7, 5), extent=(6.0, 4.0))
    f = TimeFunction("f", g, space_order=2, time_order=1)
    op = Operator([Eq(f.forward, f)], name="copy")
    f.interior[0] = np.random.default_rng(0).standard_normal(g.shape)
    start = f.interior[0].copy()
    op.apply(time_m=0, time_M=3, backend="c")
    assert np.array_equal(f.interior[0], start) and np.array_equal(f.interior[1], start)


@needs_cc
def test_c_rejects_bad_dtype():
    op, u, model = _seeded()
    with pytest.raises(BindingError):
        op.apply(time_m=1, time_M=1, dt=1e-3, backend="c", u=u.data.astype(np.float32))
    with pytest.raises(BindingError):
        op.apply(time_m=1, time_M=1, dt=1e-3, backend="c", u=np.asfortranarray(u.data))


def test_emitted_forward_source():
    op, _, _ = acoustic_kernel((16, 16), 4, nbl=2)
    src = op.emit_c()
    assert "for (long t = time_m; t <= time_M; t += 1)" in src
    assert "/* omp parallel for */" in src
    assert "% 3" in src
    assert src == op.emit_c()


def test_emitted_backward_source():
    model = SeismicModel(np.full((20, 20), 1.5), (10.0, 10.0), nbl=4)
    geo = AcquisitionGeometry([[95.0, 20.0]], [[50.0, 30.0], [120.0, 30.0]], 0.0, 50.0, 1.0)
    op = adjoint_operator(model, geo)[0]
    src = op.emit_c()
    assert "t >= time_m; t -= 1" in src
    assert "/* serial: scatter updates */" in src


def test_sfgd_roundtrip(tmp_path):
    for shape in [(5,), (4, 3), (2, 3, 4)]:
        a = np.random.default_rng(0).standard_normal(shape)
        write_grid(tmp_path / "a.sfgd", a)
        assert np.array_equal(read_grid(tmp_path / "a.sfgd"), a)


def test_sfgd_bad_magic(tmp_path):
    p = tmp_path / "bad.sfgd"
    p.write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(ParameterError):
        read_grid(p)


def test_sfgd_truncated(tmp_path):
    p = tmp_path / "t.sfgd"
    write_grid(p, np.ones((4, 4)))
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(ParameterError):
        read_grid(p)


def test_write_json(tmp_path, capsys):
    write_json(tmp_path / "x.json", {"a": np.float64(1.5), "b": np.arange(2)})
    assert '"a": 1.5' in (tmp_path / "x.json").read_text()
    write_json("-", {"k": 1})
    assert '"k": 1' in capsys.readouterr().out
