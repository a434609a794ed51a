"""Spectral measures of stable Levy vectors and their Fourier symbols.

A discrete measure is a list of atoms ``(u_i, w_i)`` with unit directions and
nonnegative weights.  ``w_i`` is the scale rate of a totally skewed
(``beta = +1``) scalar stable jump process acting along ``u_i``, so the
drift-free cumulant rate is

    phi(k) = - sum_i w_i |k.u_i|^alpha (1 - i sgn(k.u_i) tan(pi alpha / 2)).

Written with the principal power ``(i x)^alpha`` this is
``- sum_i (w_i / cos(pi alpha/2)) (i k.(-u_i))^alpha``, i.e. a signed measure
``w_i / cos(pi alpha/2)`` carried by the antipodes ``-u_i``; the normalisation
keeps weights nonnegative for every ``alpha`` and makes the 1-D embedding
``w(+1) = D p, w(-1) = D (1-p)`` reproduce ``beta = 2p - 1`` exactly.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotAdmissibleError, ParameterError
from .stable_noise import StableParams, draw_increments

UNIT_TOL = 1e-12


def principal_power(x, alpha):
    """``(i x)^alpha`` for real ``x`` via ``|x|^alpha [theta(x) e^{i a pi/2} + theta(-x) e^{-i a pi/2}]``."""
    x = np.asarray(x, dtype=float)
    ph = 0.5 * math.pi * alpha
    pos = np.heaviside(x, 0.0)
    neg = np.heaviside(-x, 0.0)
    return np.abs(x) ** alpha * (pos * complex(math.cos(ph), math.sin(ph)) + neg * complex(math.cos(ph), -math.sin(ph)))


@dataclass(frozen=True, eq=False)
class SpectralMeasure:
    """``Isotropic(D)`` or ``Discrete([(u_i, w_i)])`` on the unit sphere of R^dim."""

    kind: str
    dim: int
    d_scale: float = 0.0
    directions: np.ndarray = field(default=None, compare=False)
    weights: np.ndarray = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind == "isotropic":
            if not self.d_scale >= 0:
                raise ParameterError("isotropic scale must be >= 0")
            return
        if self.kind != "discrete":
            raise ParameterError(f"unknown measure kind {self.kind!r}")
        u = np.atleast_2d(np.asarray(self.directions, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if u.shape != (w.size, self.dim):
            raise ParameterError(f"directions shape {u.shape} incompatible with {w.size} weights in R^{self.dim}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ParameterError("discrete weights must be finite and >= 0")
        if np.any(np.abs(np.linalg.norm(u, axis=1) - 1.0) > UNIT_TOL):
            raise ParameterError("directions must be unit vectors (to 1e-12)")
        object.__setattr__(self, "directions", u)
        object.__setattr__(self, "weights", w)

    def __eq__(self, other):
        return isinstance(other, SpectralMeasure) and self.to_dict() == other.to_dict()

    __hash__ = None

    @classmethod
    def isotropic(cls, d_scale, dim=2):
        return cls("isotropic", int(dim), float(d_scale))

    @classmethod
    def discrete(cls, atoms, dim=None):
        """Build from ``[(direction, weight), ...]``."""
        u = np.array([np.atleast_1d(np.asarray(a, float)) for a, _ in atoms])
        w = np.array([float(b) for _, b in atoms])
        return cls("discrete", int(dim or u.shape[1]), 0.0, u, w)

    @classmethod
    def from_scalar(cls, params):
        """1-D embedding of scalar parameters: ``w(+1) = D p``, ``w(-1) = D (1-p)``, ``p = (1+beta)/2``."""
        p = 0.5 * (1.0 + params.beta)
        return cls.discrete([((1.0,), params.d_scale * p), ((-1.0,), params.d_scale * (1.0 - p))], dim=1)

    def even_odd(self):
        """Even and odd parts on the symmetrised support.

        Returns ``(U, w_plus, w_minus)`` with ``2 w_plus(u) = w(u) + w(-u)`` and
        ``2 w_minus(u) = w(u) - w(-u)`` for every ``u`` in ``U = supp w  u  -supp w``.
        """
        if self.kind != "discrete":
            raise ParameterError("even/odd split is defined for discrete measures")
        keys, vals = [], []

        def find(v):
            for i, q in enumerate(keys):
                if np.array_equal(q, v):
                    return i
            keys.append(v)
            vals.append(0.0)
            return len(keys) - 1

        for u, w in zip(self.directions, self.weights):
            vals[find(u)] += w
            find(-u)
        U = np.array(keys)
        W = np.array(vals)
        Wm = np.array([W[find(-u)] for u in U])
        return U, 0.5 * (W + Wm), 0.5 * (W - Wm)

    @property
    def has_odd_part(self):
        if self.kind == "isotropic":
            return False
        return bool(np.any(self.even_odd()[2] != 0.0))

    def flipped(self):
        """The measure with every direction reversed."""
        if self.kind == "isotropic":
            return self
        return SpectralMeasure("discrete", self.dim, 0.0, -self.directions, self.weights.copy())

    def power_form_atoms(self, alpha):
        """Atoms ``(v, s)`` of the signed measure in ``-int (i k.v)^alpha dS(v)`` form."""
        c = math.cos(0.5 * math.pi * alpha)
        return [(-u, w / c) for u, w in zip(self.directions, self.weights)]

    def to_dict(self):
        if self.kind == "isotropic":
            return {"kind": "isotropic", "dim": self.dim, "d_scale": self.d_scale}
        return {
            "kind": "discrete",
            "dim": self.dim,
            "atoms": [{"direction": [float(c) for c in u], "weight": float(w)} for u, w in zip(self.directions, self.weights)],
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("kind") == "isotropic":
            return cls.isotropic(d["d_scale"], d.get("dim", 2))
        atoms = [(a["direction"], a["weight"]) for a in d["atoms"]]
        return cls.discrete(atoms, d.get("dim"))


def _contract(sigma, k, dim):
    """``sigma^T k`` for wavevectors ``k`` with trailing axis ``dim``."""
    k = np.asarray(k, dtype=float)
    if sigma is None:
        return k
    s = np.asarray(sigma, dtype=float)
    if s.ndim == 0:
        return s * k
    if s.shape != (dim, dim):
        raise ParameterError(f"sigma shape {s.shape} does not match dimension {dim}")
    return k @ s


def directional_symbol(measure, sigma, k, alpha):
    """Drift-free cumulant rate ``phi(sigma^T k)`` of the measure at wavevectors ``k``.

    ``k`` has trailing axis of length ``measure.dim`` (a scalar array is
    accepted when ``dim == 1``).  Discrete measures use the principal power
    ``(i x)^alpha``; ``alpha = 1`` is allowed only for measures without odd part.
    """
    dim = measure.dim
    k = np.asarray(k, dtype=float)
    if dim == 1 and (k.ndim == 0 or k.shape[-1] != 1):
        k = k[..., None]
    kk = _contract(sigma, k, dim)
    if measure.kind == "isotropic":
        return -measure.d_scale * np.linalg.norm(kk, axis=-1) ** alpha + 0j
    if alpha == 1.0:
        if measure.has_odd_part:
            raise NotAdmissibleError(1.0, "asymmetric measure", "directional_symbol")
        even, _ = symbol_even_odd(measure, sigma, k, alpha)
        return even + 0j
    c = math.cos(0.5 * math.pi * alpha)
    out = np.zeros(kk.shape[:-1], dtype=complex)
    for u, w in zip(measure.directions, measure.weights):
        out -= (w / c) * principal_power(kk @ (-u), alpha)
    return out


def symbol_even_odd(measure, sigma, k, alpha):
    """Split the symbol into the real even part (from ``w_plus``) and imaginary odd part (from ``w_minus``)."""
    dim = measure.dim
    k = np.asarray(k, dtype=float)
    if dim == 1 and (k.ndim == 0 or k.shape[-1] != 1):
        k = k[..., None]
    kk = _contract(sigma, k, dim)
    U, wp, wm = measure.even_odd()
    even = np.zeros(kk.shape[:-1])
    odd = np.zeros(kk.shape[:-1], dtype=complex)
    t = 0.0 if alpha in (1.0, 2.0) else math.tan(0.5 * math.pi * alpha)
    if alpha == 1.0 and np.any(wm != 0):
        raise NotAdmissibleError(1.0, "asymmetric measure", "symbol_even_odd")
    for u, a, b in zip(U, wp, wm):
        x = kk @ u
        ax = np.abs(x) ** alpha
        even -= a * ax
        if b != 0.0:
            odd += 1j * t * b * np.sign(x) * ax
    return even, odd


@dataclass(frozen=True)
class VectorNoise:
    """d-dimensional stable forcing: index, spectral measure, centre rate vector."""

    alpha: float
    measure: SpectralMeasure
    gamma: tuple = None

    def __post_init__(self):
        if not (0 < self.alpha <= 2):
            raise ParameterError("alpha must lie in (0, 2]")
        g = np.zeros(self.measure.dim) if self.gamma is None else np.asarray(self.gamma, float)
        if g.shape != (self.measure.dim,):
            raise ParameterError("gamma has the wrong dimension")
        object.__setattr__(self, "gamma", tuple(float(v) for v in g))

    @property
    def dim(self):
        return self.measure.dim

    @property
    def solver_admissible(self):
        return self.alpha != 1.0 or not self.measure.has_odd_part

    def require_admissible(self, where="solver"):
        if not self.solver_admissible:
            raise NotAdmissibleError(self.alpha, "asymmetric measure", where)

    def symbol(self, k, sigma=None):
        """Full cumulant rate ``i k.sigma gamma + phi(sigma^T k)``."""
        k = np.asarray(k, dtype=float)
        g = np.asarray(self.gamma)
        if sigma is not None:
            g = np.asarray(sigma, float) @ g if np.ndim(sigma) == 2 else float(sigma) * g
        return 1j * (k @ g) + directional_symbol(self.measure, sigma, k, self.alpha)

    def to_dict(self):
        return {"alpha": self.alpha, "measure": self.measure.to_dict(), "gamma": list(self.gamma)}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["alpha"]), SpectralMeasure.from_dict(d["measure"]), d.get("gamma"))


def draw_vector_increments(noise, dt, size, gen):
    """Increments ``(size, dim)`` of the vector forcing over ``dt``.

    Discrete measures superpose independent totally skewed scalar jumps along
    each direction; the isotropic law is drawn as ``sqrt(A) G`` with ``A`` a
    positive ``alpha/2``-stable variable and ``G`` Gaussian.
    """
    a, meas = noise.alpha, noise.measure
    out = np.tile(np.asarray(noise.gamma) * dt, (size, 1))
    if meas.kind == "isotropic":
        if meas.d_scale == 0.0:
            return out
        v = 2.0 * (meas.d_scale * dt) ** (2.0 / a)
        if a == 2.0:
            amp = np.ones(size)
        else:
            amp = draw_increments(StableParams(a / 2, 1.0, 0.0, math.cos(math.pi * a / 4)), 1.0, size, gen)
        g = gen.standard_normal((size, meas.dim))
        return out + np.sqrt(amp * v)[:, None] * g
    if a == 1.0 and meas.has_odd_part:
        raise NotAdmissibleError(1.0, "asymmetric measure", "draw_vector_increments")
    beta = 0.0 if a == 1.0 else 1.0
    for u, w in zip(meas.directions, meas.weights):
        if w == 0.0:
            continue
        s = draw_increments(StableParams(a, beta, 0.0, w), dt, size, gen)
        out += s[:, None] * u[None, :]
    return out
