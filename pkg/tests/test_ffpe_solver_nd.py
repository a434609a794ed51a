import math

import numpy as np
import pytest

from levyfp.coefficients import CoefficientField, CoefficientFieldND, ScalarFieldND, TensorField, VectorFieldSpec
from levyfp.errors import NotAdmissibleError, ParameterError
from levyfp.ffpe_solver_1d import solve
from levyfp.ffpe_solver_nd import GeneratorSymbolND, apply_generator_nd, exact_propagator_nd, solve_nd
from levyfp.grid import DensityField, Grid1D, GridND, gaussian_density, point_mass
from levyfp.spectral_measure import SpectralMeasure, VectorNoise
from levyfp.stable_noise import StableParams, isotropic_radial_density, periodized_isotropic_density
from levyfp.harness.metrics import radial_asymmetry


def const2(m=(0.0, 0.0), M=((1.0, 0.0), (0.0, 1.0)), s=None):
    mod = None if s is None else ScalarFieldND("constant", {"value": s})
    return CoefficientFieldND(VectorFieldSpec("constant", 2, {"value": list(m)}), TensorField(M, mod))


def gauss2(g, var=0.5):
    X = g.mesh
    v = np.exp(-(X[..., 0] ** 2 + X[..., 1] ** 2) / (2 * var)) / (2 * math.pi * var)
    return DensityField(g, v / (v.sum() * g.cell_volume))


SKEW = SpectralMeasure.discrete([((1.0, 0.0), 0.6), ((0.0, 1.0), 0.3), ((-0.6, -0.8), 0.5)])


# ------------------------------------------------------------------ radial oracle


def test_radial_density_gaussian_limit():
    r = np.array([0.0, 0.3, 1.0, 2.5, 6.0])
    D, t = 0.7, 1.3
    ref = np.exp(-r**2 / (4 * D * t)) / (4 * math.pi * D * t)
    assert np.allclose(isotropic_radial_density(2.0, D, t, r), ref, rtol=1e-10, atol=1e-14)


def test_radial_density_cauchy_both_branches():
    # alpha = 1: p(r) = c / (2 pi (r^2 + c^2)^(3/2)), c = D t
    c = 0.8
    r = np.array([0.0, 0.5, 2.0, 8.0, 20.0, 200.0])
    ref = c / (2 * math.pi * (r**2 + c**2) ** 1.5)
    out = isotropic_radial_density(1.0, 0.8, 1.0, r)
    assert np.allclose(out, ref, rtol=1e-8)


def test_radial_density_normalised():
    r = np.linspace(0, 400, 400001)
    p = isotropic_radial_density(1.5, 0.5, 1.0, r)
    mass = np.trapezoid(2 * math.pi * r * p, r)
    # tail beyond 400 carries about 400^-1.5 * const
    assert abs(mass - 1.0) <= 2e-4


def test_periodized_density_unit_mass():
    g = GridND((6.0, 6.0), (64, 64))
    v = periodized_isotropic_density(g, 1.5, 0.5, 1.0, images=5)
    assert abs(v.sum() * g.cell_volume - 1.0) <= 1e-12
    assert radial_asymmetry(v, g, (0.5, 1.0, 2.0))[0] <= 1e-3


# ------------------------------------------------------------------ generator


@pytest.mark.parametrize("measure", [SpectralMeasure.isotropic(0.7), SKEW])
def test_plane_wave_identity_nd(measure):
    g = GridND((math.pi, math.pi), (32, 32))
    noise = VectorNoise(1.4, measure, (0.2, -0.3))
    M = np.array([[1.2, 0.3], [-0.1, 0.9]])
    c = const2((0.5, -0.4), M)
    rng = np.random.default_rng(3)
    for _ in range(20):
        j = rng.integers(-15, 16, 2)
        kv = 2 * np.pi * j / (2 * np.pi)
        e = np.exp(-1j * (g.mesh @ kv))
        out = apply_generator_nd(e, c, noise, grid=g)
        ref = (1j * kv @ np.array([0.5, -0.4]) + noise.symbol(kv, M)) * e
        assert np.max(np.abs(out - ref)) <= 1e-12 * max(1.0, np.max(np.abs(ref)))


def test_fast_and_general_paths_agree():
    g = GridND((8.0, 8.0), (64, 64))
    noise = VectorNoise(1.6, SKEW, (0.1, 0.0))
    c = const2((0.2, 0.1), ((1.0, 0.2), (0.0, 1.0)))
    p = gauss2(g)
    a = apply_generator_nd(p, c, noise, fast=True)
    b = apply_generator_nd(p, c, noise, fast=False)
    assert np.max(np.abs(a - b)) <= 1e-12


def test_modulation_enters_as_power_alpha():
    g = GridND((8.0, 8.0), (64, 64))
    noise = VectorNoise(1.5, SpectralMeasure.isotropic(0.5))
    p = gauss2(g)
    a = apply_generator_nd(p, const2(s=2.0), noise, fast=False)
    b = apply_generator_nd(p, const2(), noise)
    assert np.max(np.abs(a - 2.0**1.5 * b)) <= 1e-12


def test_variable_modulation_conserves_mass():
    g = GridND((8.0, 8.0), (64, 64))
    noise = VectorNoise(1.5, SKEW)
    c = CoefficientFieldND(VectorFieldSpec("linear", 2, {"lam": 1.0}),
                           TensorField(((1.0, 0.0), (0.0, 1.0)), ScalarFieldND("sinusoidal", {"a": 1.0, "b": 0.5})))
    v = apply_generator_nd(gauss2(g), c, noise)
    assert abs(v.sum() * g.cell_volume) <= 1e-13


# ------------------------------------------------------------------ solver


def test_embedding_matches_scalar_solver():
    sp = StableParams(1.3, 0.6, 0.2, 0.7)
    g = Grid1D(32.0, 512)
    p0 = gaussian_density(g, 0.0, 0.5)
    ref = solve(p0, CoefficientField.make(0.3, 1.2), sp, 1.0, dt=0.01).final
    gn = GridND((32.0,), (512,))
    q0 = DensityField(gn, p0.values)
    noise = VectorNoise(1.3, SpectralMeasure.from_scalar(StableParams(1.3, 0.6, 0.0, 0.7)), (0.2,))
    c = CoefficientFieldND(VectorFieldSpec("constant", 1, {"value": [0.3]}), TensorField([[1.2]]))
    out = solve_nd(q0, c, noise, 1.0, dt=0.01).final
    assert np.abs(out.values - ref.values).sum() * g.h <= 1e-12


def test_isotropic_solve_radial_and_oracle():
    g = GridND((12.0, 12.0), (128, 128))
    noise = VectorNoise(1.5, SpectralMeasure.isotropic(0.5))
    c = const2()
    p0 = exact_propagator_nd(point_mass(g, [0.0, 0.0]), noise, [0.0, 0.0], np.eye(2), 0.25)
    res = solve_nd(p0, c, noise, 1.0)
    v = res.final.values
    assert res.log.mass_drift_max <= 1e-12
    assert radial_asymmetry(v, g, (0.5, 1.0, 2.0, 3.0))[0] <= 1e-6
    ref = periodized_isotropic_density(g, 1.5, 0.5, 1.0)
    assert np.abs(v - ref).sum() * g.cell_volume <= 1e-3


def test_exact_propagator_semigroup_and_solver():
    g = GridND((10.0, 10.0), (64, 64))
    noise = VectorNoise(1.7, SKEW, (0.1, 0.2))
    M = np.array([[1.0, 0.3], [0.0, 0.8]])
    p0 = gauss2(g)
    one = exact_propagator_nd(p0, noise, [0.1, -0.2], M, 0.6)
    two = exact_propagator_nd(exact_propagator_nd(p0, noise, [0.1, -0.2], M, 0.2), noise, [0.1, -0.2], M, 0.4)
    assert one.l1(two) <= 1e-12
    num = solve_nd(p0, const2((0.1, -0.2), M), noise, 0.6).final
    assert num.l1(one) <= 1e-6
    ex = solve_nd(p0, const2((0.1, -0.2), M), noise, 0.6, exact=True)
    assert ex.meta["method"] == "exact" and ex.final.l1(one) == 0.0


def test_flipped_measure_mirrors_density():
    g = GridND((10.0, 10.0), (64, 64))
    noise = VectorNoise(1.5, SKEW)
    p0 = gauss2(g)
    a = exact_propagator_nd(p0, noise, [0, 0], np.eye(2), 1.0).values
    b = exact_propagator_nd(p0, VectorNoise(1.5, SKEW.flipped()), [0, 0], np.eye(2), 1.0).values
    # x -> -x maps grid index j to (n - j) mod n
    mirrored = np.roll(b[::-1, ::-1], 1, axis=(0, 1))
    assert np.max(np.abs(a - mirrored)) <= 1e-12


def test_dimension_mismatch():
    g = GridND((4.0, 4.0, 4.0), (8, 8, 8))
    noise = VectorNoise(1.5, SpectralMeasure.isotropic(0.5))
    with pytest.raises(ParameterError):
        apply_generator_nd(np.zeros(g.n), const2(), noise, grid=g)


@pytest.mark.parametrize("fn", ["symbol", "apply", "solve", "exact"])
def test_alpha_one_asymmetric_rejected(fn):
    g = GridND((4.0, 4.0), (16, 16))
    noise = VectorNoise(1.0, SKEW)
    p0 = gauss2(g, 1.0)
    c = const2()
    call = {
        "symbol": lambda: GeneratorSymbolND(noise, g, np.eye(2)),
        "apply": lambda: apply_generator_nd(p0, c, noise),
        "solve": lambda: solve_nd(p0, c, noise, 1.0),
        "exact": lambda: exact_propagator_nd(p0, noise, [0, 0], np.eye(2), 1.0),
    }[fn]
    with pytest.raises(NotAdmissibleError):
        call()


def test_alpha_one_symmetric_allowed():
    g = GridND((8.0, 8.0), (32, 32))
    sym = SpectralMeasure.discrete([((1.0, 0.0), 0.5), ((-1.0, 0.0), 0.5), ((0.0, 1.0), 0.2), ((0.0, -1.0), 0.2)])
    res = solve_nd(gauss2(g, 1.0), const2(), VectorNoise(1.0, sym), 0.2)
    assert abs(res.final.mass - 1.0) <= 1e-12
