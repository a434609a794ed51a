import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levyfp.errors import NotAdmissibleError, ParameterError
from levyfp.rng import stream
from levyfp.spectral_measure import (
    SpectralMeasure,
    VectorNoise,
    directional_symbol,
    draw_vector_increments,
    principal_power,
    symbol_even_odd,
)
from levyfp.stable_noise import StableParams, char_exponent


def test_principal_power_branch():
    a = 1.3
    for x in (-2.0, 0.7):
        assert complex(principal_power(x, a)) == pytest.approx(complex(1j * x) ** a, abs=1e-14)
    assert principal_power(0.0, a) == 0


def test_measure_validation():
    with pytest.raises(ParameterError):
        SpectralMeasure.discrete([((1.0, 0.1), 1.0)])
    with pytest.raises(ParameterError):
        SpectralMeasure.discrete([((1.0,), -1.0)])
    with pytest.raises(ParameterError):
        SpectralMeasure.isotropic(-1.0)


def test_even_odd_split():
    m = SpectralMeasure.discrete([((1.0, 0.0), 3.0), ((-1.0, 0.0), 1.0), ((0.0, 1.0), 2.0)])
    U, wp, wm = m.even_odd()
    d = {tuple(u): (a, b) for u, a, b in zip(U, wp, wm)}
    assert d[(1.0, 0.0)] == (2.0, 1.0)
    assert d[(-1.0, 0.0)] == (2.0, -1.0)
    assert d[(0.0, 1.0)] == (1.0, 1.0)
    assert d[(0.0, -1.0)] == (1.0, -1.0)
    assert m.has_odd_part
    sym = SpectralMeasure.discrete([((1.0, 0.0), 1.0), ((-1.0, 0.0), 1.0)])
    assert not sym.has_odd_part


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0.1, 2.0).filter(lambda a: abs(a - 1) > 1e-3),
    st.floats(-1, 1),
    st.floats(0.0, 3.0),
    st.floats(-50, 50),
)
def test_embedding_reproduces_scalar_exponent(alpha, beta, D, k):
    p = StableParams(alpha, beta, 0.0, D)
    v = directional_symbol(SpectralMeasure.from_scalar(p), None, np.array([k]), alpha)
    ref = char_exponent(p, k)
    assert abs(complex(v) - ref) <= 1e-12 * max(1.0, abs(ref))


def test_even_odd_matches_principal_form():
    rng = np.random.default_rng(5)
    ang = rng.uniform(0, 2 * np.pi, 5)
    m = SpectralMeasure.discrete([((math.cos(a), math.sin(a)), w) for a, w in zip(ang, rng.uniform(0, 2, 5))])
    k = rng.standard_normal((50, 2)) * 3
    S = np.array([[1.0, 0.3], [-0.2, 0.8]])
    for alpha in (0.6, 1.4, 1.9):
        full = directional_symbol(m, S, k, alpha)
        e, o = symbol_even_odd(m, S, k, alpha)
        assert np.max(np.abs(full - (e + o))) <= 1e-12 * np.max(np.abs(full))
        # flipping every direction conjugates the symbol
        assert np.allclose(directional_symbol(m.flipped(), S, k, alpha), np.conj(full), atol=1e-12)


def test_isotropic_symbol():
    m = SpectralMeasure.isotropic(0.5)
    k = np.array([[3.0, 4.0]])
    assert directional_symbol(m, None, k, 1.5)[0] == pytest.approx(-0.5 * 5**1.5)
    assert directional_symbol(m, 2.0, k, 1.5)[0] == pytest.approx(-0.5 * 10**1.5)


def test_alpha_one_asymmetric_rejected():
    m = SpectralMeasure.discrete([((1.0, 0.0), 1.0)])
    with pytest.raises(NotAdmissibleError):
        directional_symbol(m, None, np.ones((1, 2)), 1.0)
    with pytest.raises(NotAdmissibleError):
        VectorNoise(1.0, m).require_admissible()
    with pytest.raises(NotAdmissibleError):
        draw_vector_increments(VectorNoise(1.0, m), 0.1, 10, stream(0))
    sym = SpectralMeasure.discrete([((1.0, 0.0), 1.0), ((-1.0, 0.0), 1.0)])
    assert np.allclose(directional_symbol(sym, None, np.array([[2.0, 5.0]]), 1.0), -4.0)


def test_vector_noise_round_trip():
    n = VectorNoise(1.5, SpectralMeasure.discrete([((0.6, 0.8), 1.0)]), (0.1, 0.2))
    assert VectorNoise.from_dict(n.to_dict()) == n
    assert SpectralMeasure.from_dict(SpectralMeasure.isotropic(0.3).to_dict()) == SpectralMeasure.isotropic(0.3)


@pytest.mark.parametrize(
    "measure",
    [SpectralMeasure.isotropic(0.5), SpectralMeasure.discrete([((1.0, 0.0), 0.7), ((0.0, -1.0), 0.4), ((-0.6, 0.8), 0.3)])],
)
def test_vector_increments_match_symbol(measure):
    noise = VectorNoise(1.5, measure, (0.2, -0.1))
    n, dt = 400_000, 0.5
    x = draw_vector_increments(noise, dt, n, stream(7))
    for k in ([0.5, 0.0], [0.3, -0.7], [-1.0, 0.4]):
        k = np.array(k)
        ecf = np.mean(np.exp(1j * x @ k))
        assert abs(ecf - np.exp(dt * noise.symbol(k))) <= 4 / math.sqrt(n)
