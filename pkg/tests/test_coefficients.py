import warnings

import numpy as np
import pytest

from levyfp.coefficients import (
    CoefficientField,
    CoefficientFieldND,
    FieldSpec,
    TensorField,
    VectorFieldSpec,
    field_from,
)
from levyfp.errors import ConfigError, ParameterError


def test_builtin_kinds():
    x = np.array([-1.0, 0.0, 2.0])
    assert np.array_equal(FieldSpec("double_well")(x), x - x**3)
    assert np.allclose(FieldSpec("sinusoidal", {"a": 1.0, "b": 0.5})(x), 1 + 0.5 * np.sin(x))
    assert np.array_equal(FieldSpec("linear", {"lam": 2.0})(x), -2 * x)
    assert np.array_equal(FieldSpec("quadratic", {"a": 1.0, "b": 2.0})(x), 1 + 2 * x**2)
    assert np.array_equal(FieldSpec("constant", {"value": 0.3})(x), np.full(3, 0.3))


def test_field_from_variants():
    assert field_from(2).constant_value == 2.0
    assert field_from({"kind": "linear", "lam": 3}).params == {"lam": 3.0}
    f = field_from(lambda x, t: x + t)
    assert f(np.array([1.0]), 2.0)[0] == 3.0
    with pytest.raises(ConfigError):
        f.to_dict()
    with pytest.raises(ParameterError):
        field_from("x")


def test_field_from_dict_rejects():
    with pytest.raises(ConfigError):
        FieldSpec.from_dict({"kind": "cubic"})
    with pytest.raises(ConfigError):
        FieldSpec.from_dict({"kind": "linear", "lam": "1"})


def test_coefficient_round_trip_with_infinite_domain():
    c = CoefficientField.make({"kind": "double_well"}, {"kind": "sinusoidal", "a": 1.0, "b": 0.5}, (-50, np.inf))
    d = c.to_dict()
    assert d["domain"] == [-50.0, None]
    assert CoefficientField.from_dict(d) == c
    assert not c.is_constant
    assert CoefficientField.make(0.1, 2.0).is_constant


def test_inside():
    c = CoefficientField.make(domain=(-1, 1))
    assert list(c.inside(np.array([-2.0, -1.0, 0.0, 1.0, 1.5]))) == [False, True, True, True, False]


def test_lipschitz_warning():
    c = CoefficientField.make({"kind": "double_well"}, 1.0, lipschitz=1.0)
    with pytest.warns(RuntimeWarning):
        s = c.check_lipschitz(np.linspace(-3, 3, 101))
    assert s > 20
    c2 = CoefficientField.make(0.0, {"kind": "sinusoidal"}, lipschitz=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert c2.check_lipschitz(np.linspace(-3, 3, 101)) <= 0.5


def test_nd_fields():
    drift = VectorFieldSpec.from_dict({"kind": "constant", "value": [1.0, -1.0]}, 2)
    sig = TensorField([[1.0, 0.5], [0.0, 2.0]])
    c = CoefficientFieldND(drift, sig, None)
    x = np.zeros((4, 2))
    assert c.m(x).shape == (4, 2)
    assert c.is_constant
    assert np.array_equal(sig.constant_matrix(), [[1.0, 0.5], [0.0, 2.0]])
    assert CoefficientFieldND.from_dict(c.to_dict(), 2) == c
    with pytest.raises(ConfigError):
        VectorFieldSpec.from_dict({"kind": "constant", "value": [1.0]}, 2)
    with pytest.raises(ParameterError):
        TensorField([[1.0, 2.0]])
    with pytest.raises(ParameterError):
        CoefficientFieldND(VectorFieldSpec("linear", 3, {"lam": 1.0}), sig)


def test_nd_sinusoidal_modulation():
    t = TensorField.from_dict({"matrix": [[1, 0], [0, 1]], "modulation": {"kind": "sinusoidal", "a": 1, "b": 0.5, "axis": 1}})
    x = np.array([[0.0, np.pi / 2]])
    assert t.scale(x)[0] == pytest.approx(1.5)
    assert not t.is_constant
    with pytest.raises(ParameterError):
        t.constant_scale()
