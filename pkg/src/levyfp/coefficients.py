"""Drift and noise-modulation fields shared by the Monte Carlo and PDE sides.

Built-in kinds (used by the harness config):

drift  : ``constant`` (value), ``linear`` (m = -lam x), ``double_well`` (m = x - x^3)
sigma  : ``constant`` (value), ``sinusoidal`` (a + b sin x), ``quadratic`` (a + b x^2)
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ParameterError


@dataclass(frozen=True)
class FieldSpec:
    """Named scalar field of ``(x, t)`` with parameters."""

    kind: str
    params: dict = field(default_factory=dict)

    def __call__(self, x, t=0.0):
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.kind == "constant":
            return np.full(x.shape, float(p.get("value", 0.0)))
        if self.kind == "linear":
            return -float(p.get("lam", 1.0)) * x
        if self.kind == "double_well":
            return x - x * x * x
        if self.kind == "sinusoidal":
            return float(p.get("a", 1.0)) + float(p.get("b", 0.5)) * np.sin(x)
        if self.kind == "quadratic":
            return float(p.get("a", 1.0)) + float(p.get("b", 1.0)) * x * x
        if self.kind == "callable":
            return np.asarray(p["fn"](x, t), dtype=float) * np.ones(x.shape)
        raise ConfigError(f"unknown field kind {self.kind!r}")

    @property
    def is_constant(self):
        return self.kind == "constant"

    @property
    def constant_value(self):
        return float(self.params.get("value", 0.0)) if self.is_constant else None

    def to_dict(self):
        if self.kind == "callable":
            raise ConfigError("callable fields are not serialisable")
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("kind", None)
        if kind not in ("constant", "linear", "double_well", "sinusoidal", "quadratic"):
            raise ConfigError(f"unknown field kind {kind!r}")
        for k, v in d.items():
            if not isinstance(v, (int, float)):
                raise ConfigError(f"field parameter {k!r} must be numeric")
        return cls(kind, {k: float(v) for k, v in d.items()})


def field_from(obj):
    """Accept a number, callable ``f(x, t)``, dict or :class:`FieldSpec`."""
    if isinstance(obj, FieldSpec):
        return obj
    if isinstance(obj, (int, float)):
        return FieldSpec("constant", {"value": float(obj)})
    if isinstance(obj, dict):
        return FieldSpec.from_dict(obj)
    if callable(obj):
        return FieldSpec("callable", {"fn": obj})
    raise ParameterError(f"cannot build a field from {obj!r}")


@dataclass(frozen=True)
class CoefficientField:
    """Drift ``m(x, t)`` and modulation ``sigma(x, t) >= 0`` of ``dX = m dt + sigma dL``.

    ``domain`` bounds the region where evaluations are trusted; Monte Carlo
    particles leaving it are absorbed and counted.  ``lipschitz`` is a user
    declaration only; :meth:`check_lipschitz` samples slopes and warns.
    """

    drift: FieldSpec
    sigma: FieldSpec
    domain: tuple = (-np.inf, np.inf)
    lipschitz: float = None

    @classmethod
    def make(cls, drift=0.0, sigma=1.0, domain=(-np.inf, np.inf), lipschitz=None):
        return cls(field_from(drift), field_from(sigma), tuple(float(v) for v in domain), lipschitz)

    def m(self, x, t=0.0):
        return self.drift(x, t)

    def s(self, x, t=0.0):
        return self.sigma(x, t)

    @property
    def is_constant(self):
        return self.drift.is_constant and self.sigma.is_constant

    def inside(self, x):
        lo, hi = self.domain
        return (x >= lo) & (x <= hi)

    def check_lipschitz(self, x, t=0.0):
        """Warn if finite-difference slopes on ``x`` exceed the declared constant."""
        x = np.sort(np.asarray(x, dtype=float))
        slopes = []
        for f in (self.m, self.s):
            y = f(x, t)
            slopes.append(np.max(np.abs(np.diff(y) / np.diff(x))))
        worst = float(max(slopes))
        if self.lipschitz is not None and worst > self.lipschitz:
            warnings.warn(
                f"sampled slope {worst:.4g} exceeds declared Lipschitz constant {self.lipschitz:.4g}",
                RuntimeWarning,
            )
        return worst

    def to_dict(self):
        return {
            "drift": self.drift.to_dict(),
            "sigma": self.sigma.to_dict(),
            "domain": _bounds_out(self.domain),
            "lipschitz": self.lipschitz,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            FieldSpec.from_dict(d["drift"]),
            FieldSpec.from_dict(d["sigma"]),
            _bounds_in(d.get("domain", [None, None])),
            d.get("lipschitz"),
        )


def _bounds_out(b):
    # JSON has no infinity; unbounded sides serialise as null
    return [None if not np.isfinite(v) else float(v) for v in b]


def _bounds_in(b):
    lo, hi = b
    return (-np.inf if lo is None else float(lo), np.inf if hi is None else float(hi))


# ------------------------------------------------------------------ d-D


@dataclass(frozen=True)
class VectorFieldSpec:
    """Drift ``m(x, t)`` on points of shape ``(..., d)``: constant, linear (-lam x) or callable."""

    kind: str
    dim: int
    params: dict = field(default_factory=dict)

    def __call__(self, x, t=0.0):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.broadcast_to(np.asarray(self.params.get("value", [0.0] * self.dim), float), x.shape).copy()
        if self.kind == "linear":
            return -float(self.params.get("lam", 1.0)) * x
        if self.kind == "callable":
            return np.asarray(self.params["fn"](x, t), dtype=float)
        raise ConfigError(f"unknown vector field kind {self.kind!r}")

    @property
    def is_constant(self):
        return self.kind == "constant"

    def to_dict(self):
        if self.kind == "callable":
            raise ConfigError("callable fields are not serialisable")
        out = {"kind": self.kind}
        for k, v in self.params.items():
            out[k] = list(v) if isinstance(v, (list, tuple)) else v
        return out

    @classmethod
    def from_dict(cls, d, dim):
        d = dict(d)
        kind = d.pop("kind", None)
        if kind == "constant":
            v = [float(c) for c in d.get("value", [0.0] * dim)]
            if len(v) != dim:
                raise ConfigError("constant drift has the wrong dimension")
            return cls(kind, dim, {"value": v})
        if kind == "linear":
            return cls(kind, dim, {"lam": float(d.get("lam", 1.0))})
        raise ConfigError(f"unknown vector field kind {kind!r}")


@dataclass(frozen=True)
class ScalarFieldND:
    """Scalar modulation ``s(x) >= 0`` on points ``(..., d)``: constant, sinusoidal along an axis, or callable."""

    kind: str
    params: dict = field(default_factory=dict)

    def __call__(self, x, t=0.0):
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.kind == "constant":
            return np.full(x.shape[:-1], float(p.get("value", 1.0)))
        if self.kind == "sinusoidal":
            return float(p.get("a", 1.0)) + float(p.get("b", 0.5)) * np.sin(x[..., int(p.get("axis", 0))])
        if self.kind == "callable":
            return np.asarray(p["fn"](x, t), dtype=float)
        raise ConfigError(f"unknown scalar field kind {self.kind!r}")

    @property
    def is_constant(self):
        return self.kind == "constant"

    def to_dict(self):
        if self.kind == "callable":
            raise ConfigError("callable fields are not serialisable")
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("kind", None)
        if kind not in ("constant", "sinusoidal"):
            raise ConfigError(f"unknown scalar field kind {kind!r}")
        return cls(kind, {k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class TensorField:
    """``sigma(x, t) = s(x, t) * M`` with a constant matrix ``M`` and scalar modulation ``s >= 0``."""

    matrix: tuple
    modulation: ScalarFieldND = None

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if m.shape[0] != m.shape[1] or not np.all(np.isfinite(m)):
            raise ParameterError("sigma matrix must be square and finite")
        object.__setattr__(self, "matrix", tuple(tuple(r) for r in m))

    @property
    def M(self):
        return np.array(self.matrix)

    @property
    def dim(self):
        return len(self.matrix)

    @property
    def is_constant(self):
        return self.modulation is None or self.modulation.is_constant

    def scale(self, x, t=0.0):
        x = np.asarray(x, dtype=float)
        if self.modulation is None:
            return np.ones(x.shape[:-1])
        return self.modulation(x, t)

    def constant_scale(self):
        if not self.is_constant:
            raise ParameterError("sigma is not constant")
        return 1.0 if self.modulation is None else float(self.modulation.params.get("value", 1.0))

    def constant_matrix(self):
        return self.constant_scale() * self.M

    def to_dict(self):
        return {"matrix": [list(r) for r in self.matrix], "modulation": None if self.modulation is None else self.modulation.to_dict()}

    @classmethod
    def from_dict(cls, d):
        mod = d.get("modulation")
        return cls(d["matrix"], None if mod is None else ScalarFieldND.from_dict(mod))


@dataclass(frozen=True)
class CoefficientFieldND:
    """``dX = m(X, t) dt + sigma(X, t) . dL`` in R^d with a box domain ``[lo_i, hi_i]``."""

    drift: VectorFieldSpec
    sigma: TensorField
    domain: tuple = None

    def __post_init__(self):
        if self.drift.dim != self.sigma.dim:
            raise ParameterError("drift and sigma dimensions differ")
        if self.domain is None:
            object.__setattr__(self, "domain", tuple((-np.inf, np.inf) for _ in range(self.dim)))

    @property
    def dim(self):
        return self.drift.dim

    @property
    def is_constant(self):
        return self.drift.is_constant and self.sigma.is_constant

    def m(self, x, t=0.0):
        return self.drift(x, t)

    def inside(self, x):
        ok = np.ones(x.shape[:-1], dtype=bool)
        for i, (lo, hi) in enumerate(self.domain):
            ok &= (x[..., i] >= lo) & (x[..., i] <= hi)
        return ok

    def to_dict(self):
        return {"drift": self.drift.to_dict(), "sigma": self.sigma.to_dict(), "domain": [_bounds_out(b) for b in self.domain]}

    @classmethod
    def from_dict(cls, d, dim):
        dom = d.get("domain")
        return cls(
            VectorFieldSpec.from_dict(d["drift"], dim),
            TensorField.from_dict(d["sigma"]),
            None if dom is None else tuple(_bounds_in(b) for b in dom),
        )
