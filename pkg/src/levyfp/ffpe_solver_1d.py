"""Pseudo-spectral solver for the scalar fractional Fokker-Planck equation

    dp/dt = -d/dx[(gamma sigma + m) p] + D F^-1[ -|k|^alpha (1 - i beta sgn(k) w) F[sigma^alpha p] ],

``w = tan(pi alpha / 2)``, on a periodic grid (transform convention in
:mod:`levyfp.grid`).  Products are formed in physical space, derivatives and
fractional operators are Fourier multipliers.  For constant coefficients the
operator acts on ``exp(-i k x)`` as multiplication by the characteristic
exponent, which the tests use as the normative sign check.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientField
from .errors import ParameterError
from .grid import DensityField, Grid1D
from .stable_noise import StableParams, char_exponent, omega
from .timestepping import RK4_RADIUS, check_dt, integrate, POS_ABORT, POS_WARN

DEALIAS = 2.0 / 3.0


@dataclass
class GeneratorSymbol:
    """Fourier multipliers of the operator on a grid.

    ``drift`` is the multiplier of ``-d/dx`` (``i k``); ``frac`` is
    ``-|k|^alpha + i beta w sgn(k) |k|^alpha``.  Odd parts vanish at the
    Nyquist wavenumber.  Both are given on ``grid.k`` (``rfft`` layout) and
    on ``grid.k_full``.
    """

    params: StableParams
    grid: Grid1D
    drift: np.ndarray = field(init=False)
    frac: np.ndarray = field(init=False)
    drift_full: np.ndarray = field(init=False)
    frac_full: np.ndarray = field(init=False)

    def __post_init__(self):
        self.params.require_admissible("GeneratorSymbol")
        self.drift, self.frac = self._build(self.grid.k)
        self.drift_full, self.frac_full = self._build(self.grid.k_full)

    def _build(self, k):
        a, b = self.params.alpha, self.params.beta
        ak = np.abs(k) ** a
        w = 0.0 if b == 0.0 else omega(a)
        nyq = np.isclose(np.abs(k), self.grid.k_max, rtol=1e-12, atol=0.0)
        drift = np.where(nyq, 0.0, 1j * k)
        frac = -ak + 1j * np.where(nyq, 0.0, b * w * np.sign(k) * ak)
        return drift, frac

    def dealias_mask(self, full=False):
        k = self.grid.k_full if full else self.grid.k
        return (np.abs(k) <= DEALIAS * self.grid.k_max).astype(float)

    def constant(self, a, s, full=False):
        """Combined multiplier for constant drift ``a`` and amplitude ``s = D sigma^alpha``."""
        if full:
            return a * self.drift_full + s * self.frac_full
        return a * self.drift + s * self.frac


def _fields(coeffs, params, x, t):
    sig = coeffs.s(x, t)
    if np.any(sig < 0):
        raise ParameterError("sigma must be >= 0")
    a = coeffs.m(x, t) + params.gamma * sig
    s = params.d_scale * sig**params.alpha
    return a, s


def apply_generator(p, coeffs, params, t=0.0, grid=None, dealias=True, symbol=None, fast=True):
    """Time derivative ``L p`` of the density (real) or of a complex test field.

    Parameters
    ----------
    p : DensityField or array
    coeffs : CoefficientField
    params : StableParams
    t : float
    grid : Grid1D, required when ``p`` is an array
    dealias : bool
        Apply the 2/3 rule to products with non-constant coefficients.
    symbol : GeneratorSymbol, optional
        Precomputed multipliers (reused across calls by :func:`solve`).
    fast : bool
        Use a single combined multiplier when both coefficients are constant.

    Raises
    ------
    NotAdmissibleError
        For ``alpha = 1`` with ``beta != 0``.
    """
    params.require_admissible("apply_generator")
    if isinstance(p, DensityField):
        grid, v = p.grid, p.values
    else:
        v = np.asarray(p)
    if grid is None:
        raise ParameterError("grid is required for array input")
    sym = symbol if symbol is not None else GeneratorSymbol(params, grid)
    cplx = np.iscomplexobj(v)
    if fast and coeffs.is_constant:
        sig = coeffs.sigma.constant_value
        if sig < 0:
            raise ParameterError("sigma must be >= 0")
        a = coeffs.drift.constant_value + params.gamma * sig
        s = params.d_scale * sig**params.alpha
        return grid.apply_multiplier(v, sym.constant(a, s), sym.constant(a, s, full=True) if cplx else None)
    a, s = _fields(coeffs, params, grid.x, t)
    md, mf = sym.drift, sym.frac
    mdf, mff = sym.drift_full, sym.frac_full
    if dealias:
        if not coeffs.drift.is_constant or (params.gamma != 0 and not coeffs.sigma.is_constant):
            md, mdf = md * sym.dealias_mask(), mdf * sym.dealias_mask(True)
        if not coeffs.sigma.is_constant:
            mf, mff = mf * sym.dealias_mask(), mff * sym.dealias_mask(True)
    out = grid.apply_multiplier(a * v, md, mdf if cplx else None)
    out = out + grid.apply_multiplier(s * v, mf, mff if cplx else None)
    return out


def spectral_radius(coeffs, params, grid, t=0.0):
    """Bound on the operator's spectral radius used for the RK4 step limit."""
    a, s = _fields(coeffs, params, grid.x, t)
    al, b = params.alpha, params.beta
    w = 0.0 if b == 0.0 else omega(al)
    kmax = grid.k_max
    frac = float(np.max(s)) * kmax**al * math.sqrt(1.0 + (b * w) ** 2)
    adv = kmax * float(np.max(np.abs(a)))
    da = float(np.max(np.abs(np.gradient(a, grid.h)))) if not np.all(a == a[0]) else 0.0
    return frac + adv + da


def admissible_dt(coeffs, params, grid, t=0.0):
    """Largest ``dt`` allowed by the RK4 bound ``dt * rho <= 2.5``."""
    rho = spectral_radius(coeffs, params, grid, t)
    return math.inf if rho == 0 else RK4_RADIUS / rho


@dataclass
class SolveResult:
    """Density checkpoints and run diagnostics."""

    densities: list
    log: object
    meta: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.densities[-1]

    @property
    def times(self):
        return [d.time for d in self.densities]

    def metadata(self):
        g = self.final.grid
        return {"grid": g.to_dict(), **self.log.to_dict(), **self.meta}

    def write_csv(self, path):
        """CSV ``t,x,p`` (``t,x,y,p`` for 2-D grids)."""
        g = self.final.grid
        with open(path, "w") as fh:
            if isinstance(g, Grid1D):
                fh.write("t,x,p\n")
                for d in self.densities:
                    np.savetxt(fh, np.column_stack([np.full(g.n, d.time), g.x, d.values]), fmt="%.17g", delimiter=",")
            else:
                names = ["x", "y", "z"][: g.d]
                fh.write(",".join(["t"] + names + ["p"]) + "\n")
                pts = g.mesh.reshape(-1, g.d)
                for d in self.densities:
                    block = np.column_stack([np.full(len(pts), d.time), pts, d.values.ravel()])
                    np.savetxt(fh, block, fmt="%.17g", delimiter=",")

    def write_metadata(self, path):
        with open(path, "w") as fh:
            json.dump(self.metadata(), fh, indent=2, sort_keys=True)


def clip_renormalize(field_):
    """Clip negative values and rescale to the original mass; returns ``(field, clipped_mass)``."""
    v = field_.values
    neg = float(-v[v < 0].sum() * field_.cell)
    c = np.maximum(v, 0.0)
    c *= field_.mass / (c.sum() * field_.cell)
    return DensityField(field_.grid, c, field_.time, dict(field_.meta, clipped_mass=neg)), neg


def solve(p0, coeffs, params, t_final, dt=None, checkpoints=(), exact=False, dealias=True,
          clip_output=False, pos_warn=POS_WARN, pos_abort=POS_ABORT):
    """Integrate the density from ``p0.time`` to ``t_final`` with RK4.

    Parameters
    ----------
    p0 : DensityField
    coeffs : CoefficientField
        Treated as time-independent for the stability bound (evaluated at ``p0.time``).
    params : StableParams
    t_final : float
    dt : float, optional
        Requested step; lowered to fit an integer number of steps.  Defaults
        to 0.8 of the admissible step.
    exact : bool
        Dispatch constant-coefficient problems to :func:`exact_linear_propagator`.
    clip_output : bool
        Clip negatives of the returned densities and renormalise (logged in meta).

    Raises
    ------
    StabilityError
        If ``dt`` exceeds the RK4 bound; the message names the admissible step.
    PositivityError
        If ``min p < -pos_abort * max p`` during the run.
    """
    params.require_admissible("solve")
    grid = p0.grid
    if exact and coeffs.is_constant:
        sig = coeffs.sigma.constant_value
        out = [exact_linear_propagator(p0, params, coeffs.drift.constant_value, sig, t - p0.time)
               for t in sorted(set([c for c in checkpoints if p0.time < c < t_final] + [t_final]))]
        from .timestepping import StepLog

        return SolveResult(out, StepLog(t_final - p0.time, 1), {"method": "exact"})
    rho = spectral_radius(coeffs, params, grid, p0.time)
    adm = RK4_RADIUS / rho if rho > 0 else math.inf
    if dt is None:
        dt = 0.8 * adm if math.isfinite(adm) else t_final - p0.time
    check_dt(dt, rho)
    sym = GeneratorSymbol(params, grid)

    def rhs(y, t):
        return apply_generator(y, coeffs, params, t, grid, dealias, sym)

    states, log = integrate(rhs, p0.values, p0.time, t_final, dt, grid.h, checkpoints, pos_warn, pos_abort)
    dens = [DensityField(grid, y, t, check_mass=False) for t, y in states]
    meta = {"method": "rk4", "admissible_dt": adm, "dealias": bool(dealias)}
    if clip_output:
        clipped = []
        for i, d in enumerate(dens):
            dens[i], c = clip_renormalize(d)
            clipped.append(c)
        meta["clipped_mass"] = clipped
    return SolveResult(dens, log, meta)


def exact_linear_propagator(p0, params, m, sigma, t):
    """Propagate ``p0`` by ``t`` for constant ``m`` and ``sigma`` via ``exp(t psi(k))``."""
    params.require_admissible("exact_linear_propagator")
    if sigma < 0:
        raise ParameterError("sigma must be >= 0")
    grid = p0.grid
    eff = params.pushforward(m, sigma)
    k = grid.k
    mult = np.exp(char_exponent(eff, k, t))
    nyq = np.isclose(k, grid.k_max, rtol=1e-12, atol=0.0)
    # the Nyquist mode of a real field is its own conjugate; keep its real part only
    mult = np.where(nyq, mult.real, mult)
    v = grid.apply_multiplier(p0.values, mult)
    return DensityField(grid, v, p0.time + t, check_mass=False)
