import math

import numpy as np
import pytest

import toftomo as tt


def rb(khz=9.05, n_max=12):
    return tt.OscillatorSpec(tt.RB87_MASS, 2 * math.pi * khz * 1e3, n_max)


def test_version_and_config():
    assert tt.__version__ == tt.version()
    cfg = tt.default_config()
    assert cfg["trap"]["n_max"] == 25
    assert cfg["processing"]["rl_filter_floor"] == 0.69
    assert tt.resolve_config({"mle": {"tolerance": 1e-6}})["mle"]["tolerance"] == 1e-6
    with pytest.raises(tt.ConfigError, match="trap.lamda"):
        tt.resolve_config({"trap": {"lamda": 0.0}})


def test_one_phonon_wigner_minimum():
    rho = tt.DensityMatrix.fock(1, 4)
    value, x, p = tt.wigner_minimum(rho)
    assert value == pytest.approx(-1 / math.pi, abs=1e-6)
    axis = np.linspace(-6, 6, 241)
    w = tt.wigner(rho, axis, axis)
    assert w.shape == (241, 241)
    assert w.min() == pytest.approx(-1 / math.pi, abs=1e-6)


def test_density_matrix_round_trip_and_validation():
    m = np.diag([0.25, 0.75, 0.0]).astype(complex)
    rho = tt.DensityMatrix(m)
    assert np.allclose(rho.matrix, m)
    assert rho.populations() == pytest.approx([0.25, 0.75, 0.0])
    with pytest.raises(ValueError):
        tt.DensityMatrix(np.diag([0.5, 0.7, -0.2]).astype(complex))


def test_noiseless_reconstruction():
    spec = rb()
    truth = tt.prepare_state([0.26, 0.651, 0.089], tt.TrapModel(spec), 0.0, 2.0)
    u = np.linspace(-8, 8, 161)
    th, uu, w = tt.synthesize_dataset(truth, tt.uniform_angles(16), list(u))
    r = tt.reconstruct(th, uu, w, u[1] - u[0], spec, tol=1e-6, max_iter=5000)
    assert tt.fidelity(truth, r["rho"]) > 0.99
    trace = np.array(r["log_likelihood"])
    assert np.all(np.diff(trace) >= -1e-9)


def test_ballistic_anchor_and_fit():
    e = 1.380649e-23 * 0.256e-6 / 2
    s = tt.ballistic_sigma(e, 0.5e-3, 0.0)
    assert 2.3e-6 <= s <= 2.5e-6
    t = np.linspace(0, 1.2e-3, 120)
    y = np.exp(-t / 0.63e-3) * np.cos(2 * math.pi * 7840 * t + 0.3)
    fit = tt.fit_damped_sinusoid(list(t), list(y))
    f = fit["values"][fit["names"].index("frequency_hz")]
    assert f == pytest.approx(7840, rel=1e-3)
