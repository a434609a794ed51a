import math

import numpy as np
import pytest
from scipy.special import ndtr

from levyfp.coefficients import CoefficientField, CoefficientFieldND, TensorField, VectorFieldSpec
from levyfp.errors import DomainError, ParameterError, SimulationError, StepError
from levyfp.grid import Grid1D, GridND
from levyfp.harness.metrics import ks_against_grid, ks_critical
from levyfp.sde_montecarlo import (
    BLOCK,
    Ensemble,
    density_estimate,
    em_step,
    initial_positions,
    silverman_bandwidth,
    simulate,
    write_checkpoints,
)
from levyfp.spectral_measure import SpectralMeasure, VectorNoise
from levyfp.stable_noise import StableParams, stable_density_oracle

C_DW = CoefficientField.make({"kind": "double_well"}, {"kind": "sinusoidal", "a": 1.0, "b": 0.5}, (-50, 50))


def test_worker_count_does_not_change_results():
    n = 2 * BLOCK + 123
    sp = StableParams(1.5, 0.2, 0.0, 0.5)
    a = simulate({"kind": "gaussian", "var": 0.25}, C_DW, sp, 0.05, 0.01, n, seed=4, workers=1).final
    b = simulate({"kind": "gaussian", "var": 0.25}, C_DW, sp, 0.05, 0.01, n, seed=4, workers=3).final
    assert a.positions.tobytes() == b.positions.tobytes()
    c = simulate({"kind": "gaussian", "var": 0.25}, C_DW, sp, 0.05, 0.01, n, seed=5).final
    assert not np.array_equal(a.positions, c.positions)


def test_constant_coefficients_match_oracle():
    sp = StableParams(1.5, 0.4, 0.1, 0.8)
    c = CoefficientField.make(0.3, 1.5)
    n = 200_000
    traj = simulate(0.0, c, sp, 1.0, 0.05, n, seed=1)
    g = Grid1D(2048.0, 2**16)
    d = stable_density_oracle(sp.pushforward(0.3, 1.5), 1.0, g)
    ks = ks_against_grid(traj.final.live, d.values, g)
    assert ks <= ks_critical(n)


def test_euler_step_gaussian_ou_moments():
    # exact Euler recursion for dX = -X dt + dB_{D=0.5}: var_{j+1} = (1 - dt)^2 var_j + dt
    sp = StableParams(2.0, 0.0, 0.0, 0.5)
    c = CoefficientField.make({"kind": "linear", "lam": 1.0}, 1.0)
    n, dt, steps = 400_000, 0.1, 10
    traj = simulate(0.0, c, sp, steps * dt, dt, n, seed=2)
    v = 0.0
    for _ in range(steps):
        v = (1 - dt) ** 2 * v + dt
    x = traj.final.positions
    assert abs(x.var() - v) <= 5 * v * math.sqrt(2 / n)
    assert abs(x.mean()) <= 5 * math.sqrt(v / n)


def test_ito_point_is_pre_step():
    # with sigma(x) = x and x0 = 1 one pre-point step has exactly the law 1 + dL
    sp = StableParams(1.5, 0.0, 0.0, 1.0)
    c = CoefficientField.make(0.0, lambda x, t: x)
    e0 = Ensemble(np.ones(1000), seed=3)
    pre = em_step(e0, c, sp, 0.1)
    post = em_step(e0, c, sp, 0.1, point="post")
    free = em_step(e0, CoefficientField.make(0.0, 1.0), sp, 0.1)
    assert np.array_equal(pre.positions, free.positions)
    assert not np.array_equal(post.positions, pre.positions)


def test_escape_budget():
    sp = StableParams(0.8, 0.0, 0.0, 1.0)
    c = CoefficientField.make(0.0, 1.0, (-2.0, 2.0))
    with pytest.raises(SimulationError, match="escaped fraction"):
        simulate(0.0, c, sp, 1.0, 0.1, 10_000, seed=0)
    traj = simulate(0.0, c, sp, 1.0, 0.1, 10_000, seed=0, escape_budget=1.0)
    e = traj.final
    assert e.n_escaped > 0
    assert np.all(np.abs(e.positions[e.escaped]) > 2.0)
    assert e.live.size == e.n - e.n_escaped


def test_escaped_particles_are_frozen():
    sp = StableParams(1.0, 0.0, 0.0, 1.0)
    c = CoefficientField.make(0.0, 1.0, (-1.0, 1.0))
    e = Ensemble(np.zeros(5000), seed=1)
    e1 = em_step(e, c, sp, 1.0)
    e2 = em_step(e1, c, sp, 1.0)
    assert np.array_equal(e2.positions[e1.escaped], e1.positions[e1.escaped])


def test_nonfinite_coefficient_raises():
    c = CoefficientField.make(lambda x, t: np.where(x > 0.5, np.nan, 0.0), 1.0)
    with pytest.raises(StepError) as ei:
        em_step(Ensemble(np.array([0.0, 1.0])), c, StableParams(1.5), 0.1)
    assert ei.value.state == 1.0


def test_checkpoints_snap_and_lookup():
    traj = simulate(0.0, CoefficientField.make(), StableParams(1.5), 1.0, 0.1, 100, seed=0, checkpoints=[0.0, 0.3])
    assert traj.times == pytest.approx([0.0, 0.3, 1.0])
    assert traj.at(0.3).step == 3
    with pytest.raises(KeyError):
        traj.at(0.5)
    with pytest.raises(ParameterError):
        simulate(0.0, CoefficientField.make(), StableParams(1.5), 1.0, 0.1, 100, seed=0, checkpoints=[2.0])


def test_initial_positions():
    assert np.all(initial_positions(1.5, 10, 0) == 1.5)
    g = initial_positions({"kind": "gaussian", "mean": 1.0, "var": 4.0}, 100_000, 0)
    assert abs(g.mean() - 1.0) < 0.03 and abs(g.std() - 2.0) < 0.03
    u = initial_positions({"kind": "uniform", "low": -1, "high": 1}, 1000, 0)
    assert u.min() >= -1 and u.max() <= 1
    assert initial_positions([1.0, 2.0], 5, 0, dim=2).shape == (5, 2)
    with pytest.raises(ParameterError):
        initial_positions({"kind": "bogus"}, 10, 0)


def test_histogram_of_gaussian():
    g = Grid1D(6.0, 64)
    x = initial_positions({"kind": "gaussian", "var": 1.0}, 400_000, 7)
    h = density_estimate(x, g, outside="drop")
    ref = (ndtr(g.x + g.h / 2) - ndtr(g.x - g.h / 2)) / g.h
    assert h.l1(ref) <= 0.02
    assert h.mass == pytest.approx(1 - h.n_dropped / h.n_total)
    with pytest.raises(DomainError):
        density_estimate(x, Grid1D(3.0, 64))
    w = density_estimate(x, g, outside="wrap")
    assert w.mass == pytest.approx(1.0)


def test_smoothing():
    g = Grid1D(6.0, 128)
    x = initial_positions({"kind": "gaussian", "var": 1.0}, 20_000, 8)
    raw = density_estimate(x, g, outside="drop")
    sm = density_estimate(x, g, smoothing="silverman", outside="drop")
    assert sm.bandwidth == pytest.approx(silverman_bandwidth(x))
    assert sm.mass == pytest.approx(raw.mass)
    ref = np.exp(-g.x**2 / 2) / math.sqrt(2 * math.pi)
    assert sm.l1(ref) < raw.l1(ref)


def test_two_dimensional_ensemble():
    noise = VectorNoise(1.5, SpectralMeasure.isotropic(0.5))
    c = CoefficientFieldND(VectorFieldSpec("constant", 2, {"value": [0.0, 0.0]}), TensorField(np.eye(2)))
    traj = simulate([0.0, 0.0], c, noise, 0.2, 0.05, 50_000, seed=3)
    x = traj.final.positions
    assert x.shape == (50_000, 2)
    g = GridND((8.0, 8.0), (32, 32))
    h = density_estimate(traj.final, g, outside="drop")
    assert h.values.shape == (32, 32)
    # isotropy: the two coordinates have the same law
    from scipy.stats import ks_2samp
    assert ks_2samp(x[:, 0], x[:, 1]).pvalue > 1e-3
    with pytest.raises(ParameterError):
        simulate(0.0, CoefficientField.make(), noise, 0.2, 0.05, 10, seed=0)


def test_write_checkpoints(tmp_path):
    traj = simulate(0.0, CoefficientField.make(), StableParams(1.5), 0.2, 0.1, 7, seed=0, checkpoints=[0.1])
    write_checkpoints(traj, tmp_path / "c.csv")
    rows = np.loadtxt(tmp_path / "c.csv", delimiter=",", skiprows=1)
    assert rows.shape == (14, 3)
    assert set(rows[:, 1].astype(int)) == set(range(7))
