"""Pseudo-spectral fractional Fokker-Planck solver in d dimensions.

The forcing is a stable vector with spectral measure ``Sigma`` (isotropic or
discrete) and the noise gain is ``sigma(x) = s(x) M``.  Since the symbol is
positively homogeneous of degree ``alpha``,

    phi((s M)^T k) = s^alpha phi(M^T k),

so the fractional term is ``F^-1[ phi(M^T k) F[s^alpha p] ]`` with the
coefficient applied in physical space first, as in 1-D.  The drift term is
``-div[(m + sigma gamma) p]`` with spectral derivatives.
"""

import math

import numpy as np

from .coefficients import CoefficientFieldND
from .errors import ParameterError
from .ffpe_solver_1d import DEALIAS, SolveResult, clip_renormalize
from .grid import DensityField, GridND
from .spectral_measure import VectorNoise, directional_symbol
from .timestepping import POS_ABORT, POS_WARN, RK4_RADIUS, StepLog, check_dt, integrate


def _nyquist_planes(grid, k):
    return [np.isclose(np.abs(k[..., i]), grid.k_max[i], rtol=1e-12, atol=0.0) for i in range(grid.d)]


def _real_safe(grid, k, mult, noise, M):
    """Make ``mult`` consistent with real fields on Nyquist planes.

    A Nyquist coefficient stands for both ``+k_N`` and ``-k_N``; there the
    multiplier is replaced by the mean real part of the two representatives.
    """
    out = mult.copy()
    for i, plane in enumerate(_nyquist_planes(grid, k)):
        if not plane.any():
            continue
        kk = k[plane].copy()
        kk[:, i] = -kk[:, i]
        other = directional_symbol(noise.measure, M, kk, noise.alpha)
        out[plane] = 0.5 * (mult[plane].real + other.real)
    return out


class GeneratorSymbolND:
    """Multipliers on the ``rfftn`` layout (and the full layout for complex tests).

    ``drift[i]`` is the multiplier of ``-d/dx_i`` (``i k_i``) with Nyquist
    planes zeroed; ``frac`` is ``phi(M^T k)``.
    """

    def __init__(self, noise, grid, M):
        noise.require_admissible("GeneratorSymbolND")
        self.noise, self.grid = noise, grid
        self.M = np.asarray(M, dtype=float)
        if self.M.shape != (grid.d, grid.d) or noise.dim != grid.d:
            raise ParameterError(f"measure/sigma dimension does not match the {grid.d}-D grid")
        self.drift, self.frac = self._build(grid.k)
        self._full = None

    def _build(self, k):
        planes = _nyquist_planes(self.grid, k)
        drift = [np.where(planes[i], 0.0, 1j * k[..., i]) for i in range(self.grid.d)]
        frac = directional_symbol(self.noise.measure, self.M, k, self.noise.alpha)
        return drift, _real_safe(self.grid, k, frac, self.noise, self.M)

    @property
    def full(self):
        if self._full is None:
            self._full = self._build(self.grid.k_full)
        return self._full

    def dealias_mask(self, full=False):
        k = self.grid.k_full if full else self.grid.k
        m = np.ones(k.shape[:-1])
        for i in range(self.grid.d):
            m *= np.abs(k[..., i]) <= DEALIAS * self.grid.k_max[i]
        return m


def _fields(coeffs, noise, X, t):
    s = coeffs.sigma.scale(X, t)
    if np.any(s < 0):
        raise ParameterError("sigma modulation must be >= 0")
    g = coeffs.sigma.M @ np.asarray(noise.gamma)
    a = coeffs.m(X, t) + s[..., None] * g
    return a, s**noise.alpha


def _check(coeffs, noise, grid):
    if not isinstance(coeffs, CoefficientFieldND) or not isinstance(noise, VectorNoise):
        raise ParameterError("expected CoefficientFieldND and VectorNoise")
    if coeffs.dim != grid.d or noise.dim != grid.d:
        raise ParameterError(f"dimension mismatch: grid {grid.d}, coefficients {coeffs.dim}, noise {noise.dim}")


def apply_generator_nd(p, coeffs, noise, t=0.0, grid=None, dealias=True, symbol=None, fast=True):
    """Time derivative of a density (real) or complex test field on a :class:`GridND`."""
    noise.require_admissible("apply_generator_nd")
    if isinstance(p, DensityField):
        grid, v = p.grid, p.values
    else:
        v = np.asarray(p)
    if grid is None:
        raise ParameterError("grid is required for array input")
    _check(coeffs, noise, grid)
    sym = symbol if symbol is not None else GeneratorSymbolND(noise, grid, coeffs.sigma.M)
    cplx = np.iscomplexobj(v)
    drift, frac = (sym.full if cplx else (sym.drift, sym.frac))
    if fast and coeffs.is_constant:
        s = coeffs.sigma.constant_scale()
        a = np.asarray(coeffs.drift.params.get("value"), float) + s * (coeffs.sigma.M @ np.asarray(noise.gamma))
        mult = sum(a[i] * drift[i] for i in range(grid.d)) + s**noise.alpha * frac
        return grid.apply_multiplier(v, mult, mult if cplx else None)
    a, sa = _fields(coeffs, noise, grid.mesh, t)
    mask = sym.dealias_mask(cplx) if dealias else None
    out = 0.0
    for i in range(grid.d):
        mi = drift[i] if mask is None or coeffs.drift.is_constant else drift[i] * mask
        out = out + grid.apply_multiplier(a[..., i] * v, mi, mi if cplx else None)
    mf = frac if mask is None or coeffs.sigma.is_constant else frac * mask
    return out + grid.apply_multiplier(sa * v, mf, mf if cplx else None)


def spectral_radius_nd(coeffs, noise, grid, symbol, t=0.0):
    a, sa = _fields(coeffs, noise, grid.mesh, t)
    rho = float(np.max(sa)) * float(np.max(np.abs(symbol.frac)))
    for i in range(grid.d):
        ai = a[..., i]
        rho += grid.k_max[i] * float(np.max(np.abs(ai)))
        if not np.all(ai == ai.flat[0]):
            rho += float(np.max(np.abs(np.gradient(ai, grid.h[i], axis=i))))
    return rho


def solve_nd(p0, coeffs, noise, t_final, dt=None, checkpoints=(), exact=False, dealias=True,
             clip_output=False, pos_warn=POS_WARN, pos_abort=POS_ABORT):
    """RK4 integration on a :class:`GridND`; arguments as in the 1-D :func:`solve`."""
    noise.require_admissible("solve_nd")
    grid = p0.grid
    _check(coeffs, noise, grid)
    if exact and coeffs.is_constant:
        m = np.asarray(coeffs.drift.params.get("value"), float)
        sig = coeffs.sigma.constant_matrix()
        times = sorted(set([c for c in checkpoints if p0.time < c < t_final] + [t_final]))
        out = [exact_propagator_nd(p0, noise, m, sig, t - p0.time) for t in times]
        return SolveResult(out, StepLog(t_final - p0.time, 1), {"method": "exact"})
    sym = GeneratorSymbolND(noise, grid, coeffs.sigma.M)
    rho = spectral_radius_nd(coeffs, noise, grid, sym, p0.time)
    adm = RK4_RADIUS / rho if rho > 0 else math.inf
    if dt is None:
        dt = 0.8 * adm if math.isfinite(adm) else t_final - p0.time
    check_dt(dt, rho)

    def rhs(y, t):
        return apply_generator_nd(y, coeffs, noise, t, grid, dealias, sym)

    states, log = integrate(rhs, p0.values, p0.time, t_final, dt, grid.cell_volume, checkpoints, pos_warn, pos_abort)
    dens = [DensityField(grid, y, t, check_mass=False) for t, y in states]
    meta = {"method": "rk4", "admissible_dt": adm, "dealias": bool(dealias)}
    if clip_output:
        clipped = []
        for i, d in enumerate(dens):
            dens[i], c = clip_renormalize(d)
            clipped.append(c)
        meta["clipped_mass"] = clipped
    return SolveResult(dens, log, meta)


def exact_propagator_nd(p0, noise, m, sigma, t):
    """``p_hat(k, t) = p_hat_0(k) exp(t [i k.(m + sigma gamma) + phi(sigma^T k)])`` for constant coefficients."""
    noise.require_admissible("exact_propagator_nd")
    grid = p0.grid
    sigma = np.asarray(sigma, dtype=float)
    k = grid.k
    drift = np.asarray(m, float) + sigma @ np.asarray(noise.gamma)
    planes = _nyquist_planes(grid, k)
    kd = sum(np.where(planes[i], 0.0, k[..., i] * drift[i]) for i in range(grid.d))
    frac = _real_safe(grid, k, directional_symbol(noise.measure, sigma, k, noise.alpha), noise, sigma)
    mult = np.exp(t * (1j * kd + frac))
    v = grid.apply_multiplier(p0.values, mult)
    return DensityField(grid, v, p0.time + t, check_mass=False)

