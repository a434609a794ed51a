import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import ks_2samp

from levyfp.errors import DomainError, NotAdmissibleError, ParameterError, RefinementError
from levyfp.grid import Grid1D
from levyfp.stable_noise import (
    StableParams,
    char_exponent,
    omega,
    required_half_width,
    sample_increments,
    stable_density_oracle,
    tail_mass,
)

# 30-digit quadrature of (1/pi) int_0^inf Re[exp(t psi(k)) exp(-ikx)] dk,
# psi(k) = -|k|^1.5 (1 - 0.7 i tan(3 pi/4)), t = 2 (mpmath.quad, scratch run)
QUAD_REF = {-5.0: 0.021012245170307488688, 0.0: 0.14553325352812003596, 5.0: 0.016427631520589839261}

admissible = st.builds(
    StableParams,
    alpha=st.floats(0.1, 2.0).filter(lambda a: abs(a - 1.0) > 1e-3),
    beta=st.floats(-1.0, 1.0),
    gamma=st.floats(-5.0, 5.0),
    d_scale=st.floats(0.0, 5.0),
)


# ------------------------------------------------------------------ params


def test_params_validation():
    with pytest.raises(ParameterError):
        StableParams(0.0)
    with pytest.raises(ParameterError):
        StableParams(2.1)
    with pytest.raises(ParameterError):
        StableParams(1.5, beta=1.5)
    with pytest.raises(ParameterError):
        StableParams(1.5, d_scale=-1.0)


def test_alpha_two_drops_skewness():
    assert StableParams(2.0, beta=0.7).beta == 0.0


def test_admissibility_flag():
    assert StableParams(1.0, 0.0).solver_admissible
    assert not StableParams(1.0, 0.3).solver_admissible
    assert StableParams(1.0001, 0.3).solver_admissible
    with pytest.raises(NotAdmissibleError):
        StableParams(1.0, -0.2).require_admissible()


def test_params_round_trip():
    p = StableParams(1.3, -0.4, 0.2, 0.7)
    assert StableParams.from_dict(p.to_dict()) == p


def test_pushforward():
    p = StableParams(1.5, 0.3, 0.2, 0.5).pushforward(m=1.0, sigma=2.0)
    assert p.gamma == pytest.approx(1.4)
    assert p.d_scale == pytest.approx(0.5 * 2.0**1.5)


# ------------------------------------------------------------------ exponent


def test_gaussian_exponent():
    assert char_exponent(StableParams(2.0, 0.0, 0.0, 1.0), 1.0, 1.0) == pytest.approx(-1.0 + 0j, abs=1e-15)


def test_half_index_totally_skewed():
    v = char_exponent(StableParams(0.5, 1.0, 0.0, 1.0), 1.0, 1.0)
    assert v.real == pytest.approx(-1.0, abs=1e-15)
    assert v.imag == pytest.approx(1.0, abs=1e-15)


def test_exponent_matches_transcription():
    # dt [i k gamma - D |k|^a (1 - i b sgn(k) tan(pi a / 2))] at a=1.5, b=0.5, gamma=0.3, D=2, k=-2, dt=0.1
    ref = complex(-0.565685424949238, 0.222842712474619)
    v = char_exponent(StableParams(1.5, 0.5, 0.3, 2.0), -2.0, 0.1)
    assert abs(v - ref) <= 1e-14


def test_exponent_zero_at_origin():
    for p in (StableParams(1.5, 0.5, 0.3, 2.0), StableParams(1.0, 0.5, 1.0, 1.0), StableParams(0.4, -1.0)):
        assert char_exponent(p, 0.0, 3.0) == 0


def test_exponent_hermitian_and_dissipative_batch():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        a = rng.uniform(0.05, 2.0)
        p = StableParams(a, rng.uniform(-1, 1), rng.uniform(-3, 3), rng.uniform(0, 3))
        k = rng.standard_normal() * 10 ** rng.uniform(-3, 3)
        dt = rng.uniform(0, 2)
        v, w = char_exponent(p, k, dt), char_exponent(p, -k, dt)
        assert v == np.conj(w)
        assert v.real <= 0.0


@settings(max_examples=200, deadline=None)
@given(admissible, st.floats(-1e3, 1e3), st.floats(0.0, 10.0))
def test_exponent_properties(p, k, dt):
    v = char_exponent(p, k, dt)
    assert v == np.conj(char_exponent(p, -k, dt))
    assert v.real <= 0.0


def test_alpha_one_log_branch():
    p = StableParams(1.0, 0.5, 0.0, 1.0)
    k = np.array([0.5, 2.0])
    v = char_exponent(p, k)
    ref = -np.abs(k) * (1 - 1j * 0.5 * np.sign(k) * 0.5 * np.pi * np.log(np.abs(k)))
    assert np.allclose(v, ref, rtol=0, atol=1e-15)
    with pytest.raises(DomainError):
        char_exponent(p, 1e-20)
    with pytest.raises(DomainError):
        omega(1.0)


def test_negative_lag_rejected():
    with pytest.raises(ParameterError):
        char_exponent(StableParams(1.5), 1.0, -1.0)


# ------------------------------------------------------------------ sampling


def test_gaussian_variance_clt():
    n = 10**6
    x = sample_increments(StableParams(2.0, 0.0, 0.0, 1.0), 1.0, n, seed=1)
    s = 5 * math.sqrt(2.0 / n)
    assert 2 * (1 - s) <= x.var() <= 2 * (1 + s)


def test_degenerate_point_mass():
    x = sample_increments(StableParams(1.3, 0.2, 3.0, 0.0), 0.5, 1000, seed=2)
    assert np.all(x == 1.5)


def test_empirical_cf():
    n = 10**6
    p = StableParams(1.5, 0.5, 0.0, 1.0)
    x = sample_increments(p, 1.0, n, seed=3)
    for k in (0.5, 1.0, 2.0):
        ecf = np.mean(np.exp(1j * k * x))
        assert abs(ecf - np.exp(char_exponent(p, k, 1.0))) <= 4 / math.sqrt(n)


def test_empirical_cf_alpha_one_skewed():
    n = 10**6
    p = StableParams(1.0, 0.3, 0.2, 1.0)
    x = sample_increments(p, 0.5, n, seed=4)
    for k in (0.5, 1.0, 2.0):
        ecf = np.mean(np.exp(1j * k * x))
        assert abs(ecf - np.exp(char_exponent(p, k, 0.5))) <= 4 / math.sqrt(n)


def test_alpha_one_large_skew_not_samplable():
    with pytest.raises(ParameterError):
        sample_increments(StableParams(1.0, 0.9), 1.0, 10, seed=0)


def test_sampler_determinism():
    p = StableParams(1.7, -0.3, 0.1, 0.8)
    a = sample_increments(p, 0.1, 5000, seed=9)
    assert np.array_equal(a, sample_increments(p, 0.1, 5000, seed=9))
    assert not np.array_equal(a, sample_increments(p, 0.1, 5000, seed=10))


@pytest.mark.parametrize("alpha,beta", [(0.7, 0.4), (1.5, -0.6), (1.9, 0.0)])
def test_self_similarity(alpha, beta):
    n, lam, dt, g = 10**5, 3.0, 0.2, 0.4
    p = StableParams(alpha, beta, g, 1.0)
    big = sample_increments(p, lam * dt, n, seed=21)
    small = sample_increments(p, dt, n, seed=22)
    scaled = lam ** (1 / alpha) * (small - g * dt) + g * lam * dt
    assert ks_2samp(big, scaled).pvalue > 1e-3


def test_invalid_sampling_args():
    with pytest.raises(ParameterError):
        sample_increments(StableParams(1.5), 0.0, 10, seed=0)
    with pytest.raises(ParameterError):
        sample_increments(StableParams(1.5), 1.0, 0, seed=0)


# ------------------------------------------------------------------ oracle


def test_oracle_gaussian():
    g = Grid1D(40.0, 4096)
    d = stable_density_oracle(StableParams(2.0, 0.0, 0.0, 1.0), 1.0, g)
    ref = np.exp(-g.x**2 / 4) / math.sqrt(4 * math.pi)
    assert np.max(np.abs(d.values - ref)) <= 1e-8


def test_oracle_cauchy():
    # unit-mass renormalisation shifts values by about p * (tail mass off the grid); keep that < 1e-6
    g = Grid1D(2.0**18, 2**21)
    d = stable_density_oracle(StableParams(1.0, 0.0, 0.0, 1.0), 1.0, g)
    assert np.max(np.abs(d.values - 1 / (math.pi * (1 + g.x**2)))) <= 1e-6


def test_oracle_against_quadrature():
    g = Grid1D(10240.0, 2**17)
    d = stable_density_oracle(StableParams(1.5, 0.7, 0.0, 1.0), 2.0, g)
    for x, ref in QUAD_REF.items():
        j = int(round((x - g.x[0]) / g.h))
        assert g.x[j] == x
        assert abs(d.values[j] - ref) <= 1e-6


def test_oracle_mass_and_symmetry():
    p = StableParams(1.3, 0.0, 0.0, 1.0)
    g = Grid1D(required_half_width(p, 1.0) * 1.1, 2**16)
    d = stable_density_oracle(p, 1.0, g)
    assert abs(d.mass - 1.0) <= 1e-8
    v = d.values
    # x_j and x_{n-j} are mirror images; x_0 has no partner
    assert np.max(np.abs(v[1:] - v[1:][::-1])) <= 1e-10
    assert np.all(v >= 0)


def test_oracle_shift():
    p = StableParams(1.5, 0.0, 0.0, 1.0)
    g = Grid1D(2048.0, 2**15)
    a = stable_density_oracle(p, 1.0, g, x0=0.0).values
    b = stable_density_oracle(p, 1.0, g, x0=1.0).values
    s = int(round(1.0 / g.h))
    assert np.max(np.abs(a[: -s] - b[s:])) <= 1e-9


def test_oracle_refinement_error():
    p = StableParams(1.2, 0.0, 0.0, 1.0)
    with pytest.raises(RefinementError) as ei:
        stable_density_oracle(p, 1.0, Grid1D(20.0, 1024))
    need = ei.value.required_half_width
    assert need == pytest.approx(required_half_width(p, 1.0))
    assert "required half-width" in str(ei.value)
    assert tail_mass(p, 1.0, need) == pytest.approx(1e-5, rel=1e-6)


def test_oracle_rejects_alpha_one_skewed():
    with pytest.raises(NotAdmissibleError):
        stable_density_oracle(StableParams(1.0, 0.5), 1.0, Grid1D(100.0, 1024))
