import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stencilflow.backend.gridio import read_grid
from stencilflow.cli import main
from stencilflow.errors import FitError
from stencilflow.verify import (GradientTestConfig, adjoint_test, brute_force_gradient,
                                fit_slope, gradient_test)


@settings(max_examples=50, deadline=None)
@given(p=st.floats(0.5, 12), c=st.floats(1e-3, 1e3))
def test_fit_recovers_power_law(p, c):
    h = np.array([1.0, 0.8, 0.5, 0.25, 0.1])
    fit = fit_slope(h, c * h ** p)
    assert fit.slope == pytest.approx(p, abs=1e-9)
    assert fit.residual < 1e-12


@pytest.mark.parametrize("steps, errs", [
    ([1.0], [1.0]),
    ([1.0, 0.5], [1.0, 0.25]),
    ([1.0, 0.5, 0.7], [1.0, 0.3, 0.5]),
    ([1.0, 0.5, 0.25], [1.0, 0.0, 0.1]),
    ([1.0, 0.5, 0.25], [1.0, 0.5]),
])
def test_fit_rejects_bad_input(steps, errs):
    with pytest.raises(FitError):
        fit_slope(steps, errs)


def test_adjoint_small_table():
    rows = adjoint_test(orders=(2, 4), dims=(2,), shape2=(24, 24), nbl=4)
    assert [r["order"] for r in rows] == [2, 4]
    assert all(r["relative_error"] < 1e-12 for r in rows)


def test_gradient_test_with_zero_perturbation():
    cfg = GradientTestConfig(shape=(21, 21), nbl=6, order=4, hs=(1e-2, 1e-1, 1.0))
    res = gradient_test(cfg, dm=np.zeros(cfg.shape))
    assert np.all(np.asarray(res["eps0"]) == 0) and np.all(np.asarray(res["eps1"]) == 0)
    assert res["slope0"] is None and res["slope1"] is None


def test_brute_force_small():
    res = brute_force_gradient(shape=(4, 4), nsteps=6)
    assert res["relative_error"] < 1e-5


# -- command line ---------------------------------------------------------------

def test_cli_emit(capsys):
    assert main(["emit", "--kernel", "acoustic", "--order", "4"]) == 0
    out = capsys.readouterr().out
    assert "int acoustic(" in out and "for (long t = time_m" in out


def test_cli_emit_ir(capsys):
    assert main(["emit", "--kernel", "acoustic", "--ir"]) == 0
    assert "# main" in capsys.readouterr().out


def test_cli_run_poisson(tmp_path, capsys):
    code = main(["run", "poisson", "--steps", "30", "--out-dir", str(tmp_path),
                 "--json", str(tmp_path / "r.json")])
    assert code == 0
    rep = json.loads((tmp_path / "r.json").read_text())
    assert rep["residual_decreasing"] is True and len(rep["residuals"]) == 30
    assert read_grid(tmp_path / "p_final.sfgd").shape == (50, 50)


def test_cli_run_convection(capsys):
    assert main(["run", "convection", "--steps", "20"]) == 0


def test_cli_rejects_single_precision_verification(capsys):
    assert main(["verify", "time", "--precision", "f32"]) == 2
    assert "double precision" in capsys.readouterr().err


def test_cli_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_cli_bad_grid(capsys):
    assert main(["run", "poisson", "--grid", "10x"]) == 2
