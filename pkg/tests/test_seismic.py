import numpy as np
import pytest

from stencilflow.errors import ConfigError, ParameterError, StabilityError, StateError
from stencilflow.seismic import (AcousticSolver, AcquisitionGeometry, SeismicModel,
                                 analytic_2d, build_damping, circle_velocity, critical_dt, fwi,
                                 hankel2_0, j0, model_error, ricker, y0)
from stencilflow.symbolic.functions import Grid
from stencilflow.verify import acoustic_kernel

scipy_special = pytest.importorskip("scipy.special")


def _layered(nbl=10, order=8, shape=(41, 41), top=1.5, bottom=2.5):
    vp = np.full(shape, top)
    vp[:, shape[1] // 2:] = bottom
    return SeismicModel(vp, (10.0, 10.0), nbl=nbl, space_order=order)


def _geometry(model, tn=450.0, f0=0.01, recs=((300.0, 40.0),)):
    return AcquisitionGeometry([[200.0, 40.0]], [list(r) for r in recs], 0.0, tn,
                               0.9 * model.critical_dt, f0=f0)


# -- wavelet ------------------------------------------------------------------

def test_ricker_peak():
    t = np.linspace(0, 0.2, 2001)
    w = ricker(10.0, t)
    assert w.max() == pytest.approx(1.0)
    assert t[np.argmax(w)] == pytest.approx(0.1)


def test_ricker_spectral_peak():
    dt, f0 = 1e-4, 15.0
    t = np.arange(2 ** 15) * dt
    spec = np.abs(np.fft.rfft(ricker(f0, t)))
    f = np.fft.rfftfreq(t.size, dt)
    assert abs(f[np.argmax(spec)] - f0) <= 0.05 * f0


def test_ricker_rejects_bad_frequency():
    with pytest.raises(ParameterError):
        ricker(0.0, [0.0])


# -- model --------------------------------------------------------------------

def test_damping_zero_without_layer():
    assert not build_damping(Grid((20, 20), extent=(19.0, 19.0)), 0).any()


def test_damping_profile():
    g = Grid((40, 30), extent=(39.0, 29.0))
    eta = build_damping(g, 8, vmax=2.0)
    assert not eta[8:-8, 8:-8].any()
    ramp = eta[:9, 15]
    assert np.all(np.diff(ramp) < 0)
    assert eta[0, 15] == eta[:, 15].max()
    assert eta[0, 0] == eta.max()
    np.testing.assert_allclose(eta, eta[::-1, ::-1])


def test_damping_too_wide():
    with pytest.raises(ParameterError):
        build_damping(Grid((10, 10), extent=(9.0, 9.0)), 5)
    with pytest.raises(ParameterError):
        build_damping(Grid((10, 10), extent=(9.0, 9.0)), -1)


@pytest.mark.parametrize("profile", ["linear", "quadratic", "exponential"])
def test_damping_profiles_agree_at_edge(profile):
    g = Grid((30, 30), extent=(29.0, 29.0))
    eta = build_damping(g, 6, profile=profile)
    assert eta[0, 15] > 0 and eta[6, 15] == 0


def test_model_pads_and_slices():
    model = _layered(nbl=5)
    assert model.grid.shape == (51, 51)
    assert model.physical(model.m_values).shape == (41, 41)
    np.testing.assert_allclose(model.physical(model.m_values)[0, 0], 1 / 1.5 ** 2)
    assert model.physical_mask().sum() == 41 * 41


def test_cfl_guard():
    model = _layered(nbl=0, order=4)
    dt = model.critical_dt
    assert dt == pytest.approx(critical_dt((10.0, 10.0), 1 / 2.5 ** 2, 4))
    model.check_dt(dt)
    with pytest.raises(StabilityError):
        model.check_dt(1.01 * dt)


# -- operators ----------------------------------------------------------------

def test_zero_source_gives_zero_data():
    model = _layered()
    geo = _geometry(model, tn=100.0)
    rec, u, _ = AcousticSolver(model, geo).forward(src=np.zeros((1, geo.nt)))
    assert not rec.any() and not u.data.any()


def test_positions_outside_physical_domain():
    model = _layered(nbl=10)
    geo = AcquisitionGeometry([[200.0, 40.0]], [[405.0, 40.0]], 0.0, 10.0, 1.0)
    with pytest.raises(ParameterError):
        AcousticSolver(model, geo)


def test_reflection_arrives_after_direct_wave():
    layered = _layered()
    flat = _layered(bottom=1.5)
    flat.eta.data[:] = layered.eta.data    # same sponge, so only the interface differs
    geo = _geometry(layered)
    rec_l = AcousticSolver(layered, geo).forward()[0][0]
    rec_f = AcousticSolver(flat, geo).forward()[0][0]
    t = geo.time_axis
    # direct wave: 100 m at 1.5 m/ms plus the 100 ms wavelet delay
    assert np.abs(rec_f[(t > 130) & (t < 200)]).max() > 0.5 * np.abs(rec_f).max()
    # reflected path 2*sqrt(50^2 + 160^2) m; the 10 Hz wavelet is ~1e-4 of peak 110 ms early
    t_refl = 2 * np.hypot(50.0, 160.0) / 1.5 + 100.0
    diff = np.abs(rec_l - rec_f)
    assert diff[t < t_refl - 110].max() < 1e-3 * np.abs(rec_f).max()
    assert diff[(t > t_refl - 40) & (t < t_refl + 60)].max() > 1e-2 * np.abs(rec_f).max()


def test_dot_product_small():
    rng = np.random.default_rng(4)
    model = _layered(nbl=6, order=4, shape=(30, 30))
    geo = AcquisitionGeometry([[150.0, 100.0]], [[x, 50.0] for x in (30.0, 120.0, 250.0)],
                              0.0, 150.0, 0.9 * model.critical_dt, f0=0.015)
    s = AcousticSolver(model, geo)
    x = rng.standard_normal((1, geo.nt))
    y = rng.standard_normal((3, geo.nt))
    a = np.sum(s.forward(x)[0] * y)
    b = np.sum(x * s.adjoint(y)[0])
    assert abs(a - b) <= 1e-12 * abs(a)


def test_gradient_vanishes_on_exact_data():
    model = _layered(nbl=6, order=4, shape=(30, 30))
    geo = _geometry(model, tn=150.0, recs=((50.0, 30.0), (250.0, 30.0)))
    s = AcousticSolver(model, geo)
    d = s.forward()[0]
    res = s.objective_and_gradient(d)
    assert res.objective == 0.0
    assert not res.gradient.any()


def test_gradient_needs_saved_history():
    model = _layered(nbl=6, order=4, shape=(30, 30))
    geo = _geometry(model, tn=60.0, recs=((250.0, 30.0),))
    s = AcousticSolver(model, geo)
    rec, u, _ = s.forward(save=False)
    with pytest.raises(StateError):
        s.gradient(rec, u)


def test_wavefield_decays_in_damping_layer():
    op, u, model = acoustic_kernel((50, 50), 4, nbl=15)
    x = np.arange(u.data.shape[1]) - u.data.shape[1] / 2
    bump = np.exp(-(x[:, None] ** 2 + x[None, :] ** 2) / 8.0)
    u.data[:] = 0
    u.data[0] = u.data[1] = bump
    e0 = np.linalg.norm(bump)
    norms = []
    for k in range(30):
        op.apply(time_m=1 + 20 * k, time_M=20 * (k + 1), dt=0.9 * model.critical_dt)
        norms.append(np.linalg.norm(u.data[(20 * (k + 1) + 1) % 3]))
    assert max(norms) < 2 * e0
    assert norms[-1] < 0.1 * e0


# -- analytic solution ----------------------------------------------------------

def test_bessel_and_hankel_against_reference():
    z = np.array([1e-3, 0.5, 3.0, 16.9, 17.1, 40.0, 250.0, 3.0 - 0.7j, 25.0 - 0.02j])
    ref = scipy_special.hankel2(0, z)
    np.testing.assert_allclose(hankel2_0(z), ref, rtol=1e-10)
    zr = z[:7].real
    np.testing.assert_allclose(j0(zr), scipy_special.j0(zr), rtol=1e-10, atol=1e-13)
    np.testing.assert_allclose(y0(zr), scipy_special.y0(zr), rtol=1e-10)
    assert j0(np.array([0.0]))[0] == 1.0


def test_hankel_rejects_branch_cut():
    with pytest.raises(ParameterError):
        hankel2_0(np.array([0.0]))
    with pytest.raises(ParameterError):
        hankel2_0(np.array([-2.0 + 0j]))


def test_analytic_time_shift():
    dt, nt, k = 0.5, 600, 40
    w = ricker(0.02, np.arange(nt) * dt)
    shifted = np.concatenate([np.zeros(k), w[:-k]])
    recs = [[150.0, 0.0], [0.0, 300.0]]
    a = analytic_2d(1.5, w, [0.0, 0.0], recs, dt, nt)
    b = analytic_2d(1.5, shifted, [0.0, 0.0], recs, dt, nt)
    assert np.abs(b[:, k:] - a[:, :-k]).max() <= 1e-10 * np.abs(a).max()


def test_analytic_is_causal():
    dt, nt = 0.5, 600
    w = ricker(0.02, np.arange(nt) * dt)
    tr = analytic_2d(1.5, w, [0.0, 0.0], [[300.0, 0.0]], dt, nt)[0]
    # the wavelet starts at about 1e-3 of its peak, so allow that much before r/c
    assert np.abs(tr[: int(150 / dt)]).max() < 1e-4 * np.abs(tr).max()


def test_analytic_source_on_receiver():
    with pytest.raises(ConfigError):
        analytic_2d(1.5, np.ones(10), [1.0, 1.0], [[1.0, 1.0]], 0.1, 10)


# -- inversion ------------------------------------------------------------------

def _fwi_setup(shape=(31, 31)):
    true = SeismicModel(circle_velocity(shape, 2.0, 2.4, radius=5), (10.0, 10.0), nbl=8,
                        space_order=4)
    start = SeismicModel(np.full(shape, 2.0), (10.0, 10.0), nbl=8, space_order=4)
    dt = 0.9 * min(true.critical_dt, start.critical_dt)
    ext = 10.0 * (shape[0] - 1)
    geos = [AcquisitionGeometry([[x, 20.0]], [[r, ext - 20.0] for r in np.linspace(20, ext - 20, 9)],
                                0.0, 250.0, dt, f0=0.015) for x in (60.0, ext - 60.0)]
    data = [AcousticSolver(true, g).forward()[0] for g in geos]
    return true, start, geos, data


def test_fwi_at_true_model_is_stationary():
    true, _, geos, data = _fwi_setup()
    m0 = true.m_values.copy()
    res = fwi(true, geos, data, n_iter=2, step=0.01, m_true=true.physical(m0))
    assert res.objectives == [0.0, 0.0, 0.0]
    assert np.array_equal(true.m_values, m0)
    assert res.history[0]["model_error"] == 0.0


def test_fwi_zero_step_keeps_model():
    true, start, geos, data = _fwi_setup()
    m0 = start.m_values.copy()
    res = fwi(start, geos, data, n_iter=2, step=0.0)
    assert len(set(res.objectives)) == 1 and res.objectives[0] > 0
    assert np.array_equal(start.m_values, m0)
    assert isinstance(res.history[0]["step"], float)


def test_fwi_reduces_objective():
    true, start, geos, data = _fwi_setup()
    mt = true.physical(true.m_values)
    lo, hi = float(mt.min()), float(mt.max())
    res = fwi(start, geos, data, n_iter=4, step=0.1 * (hi - lo), m_bounds=(lo, hi), m_true=mt)
    assert res.objectives[-1] < res.objectives[0]
    assert res.history[-1]["model_error"] < res.history[0]["model_error"]
    assert all(lo <= v <= hi for v in (res.models[-1].min(), res.models[-1].max()))


def test_fwi_argument_checks():
    true, start, geos, data = _fwi_setup((21, 21))
    with pytest.raises(ParameterError):
        fwi(start, geos, data[:1], n_iter=1, step=0.1)
    with pytest.raises(ParameterError):
        fwi(start, geos, data, n_iter=1, step=-1.0)


def test_model_error_and_circle():
    v = circle_velocity((21, 21), 2.0, 3.0, radius=3)
    assert v[10, 10] == 3.0 and v[0, 0] == 2.0
    assert model_error(np.ones(4), np.ones(4)) == 0.0
    assert model_error(np.zeros(4), np.full(4, 2.0)) == 2.0
