"""alpha-stable forcing: parameters, characteristic exponent, sampling, densities.

The increment of the driving Levy motion over a lag ``dt`` has cumulant
generating function ``dt * psi(k)`` with

    psi(k) = i k gamma - D |k|^alpha (1 - i beta sgn(k) omega(k, alpha)),
    omega = tan(pi alpha / 2)        (alpha != 1)
    omega = (pi / 2) log|k|          (alpha == 1)

Everything else in the package consumes :class:`StableParams` only through
:func:`char_exponent`.  For ``alpha != 1`` this is the classical
``S1`` parametrisation with scale ``D**(1/alpha)``; ``alpha = 2`` gives a
Gaussian of variance ``2 D dt``.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy.fft as sfft
from scipy.special import erfcinv, gamma as gamma_fn

from . import rng as _rng
from .errors import DomainError, NotAdmissibleError, ParameterError, RefinementError
from .grid import DensityField, Grid1D

# |k| range trusted for the alpha=1 skewed log|k| branch
LOG_K_RANGE = (1e-12, 1e12)
CLIP_EPS = 1e-12
CF_TARGET = 30.0
CF_FLOOR = 15.0


@dataclass(frozen=True)
class StableParams:
    """Levy forcing per unit time: index, skewness, centre rate, scale rate."""

    alpha: float
    beta: float = 0.0
    gamma: float = 0.0
    d_scale: float = 1.0

    def __post_init__(self):
        a, b, d = float(self.alpha), float(self.beta), float(self.d_scale)
        if not (0.0 < a <= 2.0):
            raise ParameterError(f"alpha must lie in (0, 2], got {a}")
        if not (-1.0 <= b <= 1.0):
            raise ParameterError(f"beta must lie in [-1, 1], got {b}")
        if not (d >= 0.0) or not math.isfinite(d):
            raise ParameterError(f"d_scale must be finite and >= 0, got {d}")
        if not math.isfinite(float(self.gamma)):
            raise ParameterError("gamma must be finite")
        object.__setattr__(self, "alpha", a)
        # Brownian limit carries no skewness
        object.__setattr__(self, "beta", 0.0 if a == 2.0 else b)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "d_scale", d)

    @property
    def solver_admissible(self):
        return self.alpha != 1.0 or self.beta == 0.0

    def require_admissible(self, where="solver"):
        if not self.solver_admissible:
            raise NotAdmissibleError(self.alpha, self.beta, where)

    def pushforward(self, m=0.0, sigma=1.0):
        """Parameters of ``m dt + sigma dL`` for constant ``m`` and ``sigma >= 0``."""
        if sigma < 0:
            raise ParameterError("sigma must be >= 0")
        self.require_admissible("pushforward")
        return StableParams(self.alpha, self.beta, self.gamma * sigma + m, self.d_scale * sigma**self.alpha)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in ("alpha", "beta", "gamma", "d_scale") if k in d})


def omega(alpha, k=None):
    """Skewness factor: ``tan(pi alpha/2)``, or ``(pi/2) log|k|`` at alpha = 1."""
    if alpha == 1.0:
        if k is None:
            raise DomainError("omega(k, 1) needs k")
        return 0.5 * np.pi * np.log(np.abs(k))
    if alpha == 2.0:
        return 0.0
    return math.tan(0.5 * math.pi * alpha)


def char_exponent(params, k, dt=1.0, log_k_range=LOG_K_RANGE):
    """Cumulant generating function ``dt * psi(k)`` of the increment over ``dt``.

    Vectorised over ``k``.  The value at ``k = 0`` is exactly 0.
    """
    if dt < 0:
        raise ParameterError("dt must be >= 0")
    k = np.asarray(k, dtype=float)
    a, b = params.alpha, params.beta
    ak = np.abs(k)
    s = np.sign(k)
    if a == 1.0 and b != 0.0:
        nz = ak > 0
        lo, hi = log_k_range
        if np.any(nz & ((ak < lo) | (ak > hi))):
            raise DomainError(f"alpha=1 skewed branch evaluated outside |k| in [{lo}, {hi}]")
        w = np.zeros_like(ak)
        w[nz] = 0.5 * np.pi * np.log(ak[nz])
    elif b == 0.0:
        w = 0.0
    else:
        w = omega(a)
    frac = params.d_scale * ak**a * (1.0 - 1j * b * s * w)
    return dt * (1j * k * params.gamma - frac)


def generator_symbol(params, k):
    """``psi(k)`` for solver use; rejects the alpha = 1 skewed case."""
    params.require_admissible("generator_symbol")
    return char_exponent(params, k, 1.0)


# ---------------------------------------------------------------- sampling


def _cms_standard(alpha, beta, size, gen):
    """Chambers-Mallows-Stuck draw from S1(alpha, beta, scale 1, loc 0)."""
    v = gen.uniform(-0.5 * np.pi, 0.5 * np.pi, size)
    w = gen.standard_exponential(size)
    if alpha == 1.0:
        hb = 0.5 * np.pi + beta * v
        return (2 / np.pi) * (hb * np.tan(v) - beta * np.log((0.5 * np.pi * w * np.cos(v)) / hb))
    t = beta * math.tan(0.5 * math.pi * alpha)
    b = math.atan(t) / alpha
    s = (1.0 + t * t) ** (0.5 / alpha)
    av = alpha * (v + b)
    return s * np.sin(av) / np.cos(v) ** (1 / alpha) * (np.cos(v - av) / w) ** ((1 - alpha) / alpha)


def draw_increments(params, dt, size, gen):
    """Increments of the forcing over ``dt`` drawn from an existing generator."""
    if dt <= 0:
        raise ParameterError("dt must be > 0")
    a, b = params.alpha, params.beta
    loc = params.gamma * dt
    if params.d_scale == 0.0:
        return np.full(size, loc)
    if a == 2.0:
        return loc + math.sqrt(2.0 * params.d_scale * dt) * gen.standard_normal(size)
    if a == 1.0:
        # psi's log-branch matches S1 at alpha=1 with beta_S1 = -beta pi^2/4
        b1 = -b * np.pi**2 / 4
        if abs(b1) > 1:
            raise ParameterError(
                f"alpha=1 with |beta|={abs(b)} > 4/pi^2 has no valid distribution; cannot sample"
            )
        c = params.d_scale * dt
        return c * _cms_standard(1.0, b1, size, gen) + (2 / np.pi) * b1 * c * math.log(c) + loc
    c = (params.d_scale * dt) ** (1.0 / a)
    return c * _cms_standard(a, b, size, gen) + loc


def sample_increments(params, dt, n, seed, stream_id=0):
    """``n`` i.i.d. increments of the forcing over ``dt`` from stream ``(seed, stream_id)``."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    return draw_increments(params, dt, int(n), _rng.stream(seed, _rng.INIT_STREAM, stream_id))


# ------------------------------------------------------------- densities


def tail_constant(alpha):
    """``C_alpha`` in ``P(X > x) ~ C_alpha (1 + beta) c^alpha x^-alpha``."""
    if alpha == 1.0:
        return 1.0 / math.pi
    return gamma_fn(alpha) * math.sin(0.5 * math.pi * alpha) / math.pi


def tail_mass(params, t, half_width):
    """Asymptotic two-sided mass beyond ``half_width`` from the centre."""
    if params.alpha == 2.0:
        return float(math.erfc(half_width / (2 * math.sqrt(params.d_scale * t))))
    return 2.0 * tail_constant(params.alpha) * params.d_scale * t * half_width ** (-params.alpha)


def required_half_width(params, t, tail_tol=1e-5):
    """Half-width (about 0) leaving at most ``tail_tol`` probability outside.

    Uses the power-law tail ``|x|^(-1-alpha)`` and, for the core, a Gaussian
    with matching scale, whichever is wider.
    """
    dt_scale = params.d_scale * t
    if dt_scale == 0.0:
        return abs(params.gamma * t)
    r_gauss = 2.0 * math.sqrt(dt_scale ** (2.0 / params.alpha)) * float(erfcinv(tail_tol))
    if params.alpha == 2.0:
        r = r_gauss
    else:
        r = (2.0 * tail_constant(params.alpha) * dt_scale / tail_tol) ** (1.0 / params.alpha)
        r = max(r, r_gauss)
    return abs(params.gamma * t) + r


def stable_density_oracle(params, t, grid, x0=0.0, tail_tol=1e-5, clip_eps=CLIP_EPS, max_points=2**24):
    """Transition density ``p(x - x0, t)`` of the constant-coefficient process.

    Fourier inversion of ``exp(t psi(k))`` by the trapezoid rule on an
    internal grid four times wider than ``grid`` (and finer if ``grid`` does
    not resolve the characteristic function), sampled back at the grid
    points.  Values below ``clip_eps`` are set to zero and the result is
    renormalised to unit mass on the grid.

    Raises :class:`RefinementError` naming the needed half-width when the
    grid would leave more than ``tail_tol`` of the mass outside.
    """
    params.require_admissible("stable_density_oracle")
    if t <= 0:
        raise ParameterError("t must be > 0")
    need = required_half_width(params, t, tail_tol)
    # distance from x0 to the nearer grid edge
    reach = grid.half_width - abs(x0 - grid.center)
    if reach < need:
        raise RefinementError(
            f"grid half-width {grid.half_width:g} leaves tail mass > {tail_tol:g}; "
            f"required half-width >= {need + abs(x0 - grid.center):.6g}",
            required_half_width=need + abs(x0 - grid.center),
        )
    widen = 4
    refine = 1
    dts = params.d_scale * t
    # resolve the CF down to exp(-30) at the internal Nyquist wavenumber if memory allows
    while dts * (np.pi * refine / grid.h) ** params.alpha < CF_TARGET and widen * refine * grid.n * 2 <= max_points:
        refine *= 2
    if dts * (np.pi * refine / grid.h) ** params.alpha < CF_FLOOR:
        raise RefinementError(
            f"grid spacing {grid.h:g} does not resolve the density: exp(t psi) at the Nyquist "
            f"wavenumber exceeds exp(-{CF_FLOOR:g})"
        )
    n_int = widen * refine * grid.n
    h_int = grid.h / refine
    L_int = widen * grid.half_width
    k = 2.0 * np.pi * sfft.rfftfreq(n_int, h_int)
    # internal grid starts at left edge xl; density evaluated at xl + j h_int - x0
    xl = grid.center - L_int
    cf = np.exp(char_exponent(params, k, t)) * np.exp(-1j * k * (xl - x0))
    vals = sfft.irfft(np.conj(cf), n=n_int) * (n_int / (2.0 * L_int))
    start = (widen - 1) * grid.n * refine // 2
    p = vals[start : start + grid.n * refine : refine].copy()
    p[p < clip_eps] = 0.0
    p /= p.sum() * grid.h
    return DensityField(grid, p, t, meta={"tail_tol": tail_tol, "internal_points": n_int})


def isotropic_radial_density(alpha, scale_rate, t, r, n_nodes=64, k_cut=None, series_terms=40, r_switch=None):
    """Radial density of the isotropic 2-D stable law with CF ``exp(-t D |k|^alpha)``.

    Hankel inversion ``(1/2pi) int k J0(kr) exp(-t D k^alpha) dk`` by
    composite Gauss-Legendre quadrature for moderate ``r`` and the convergent
    asymptotic tail series for large ``r``.
    """
    from scipy.special import j0, gammaln

    r = np.asarray(r, dtype=float)
    c = (scale_rate * t) ** (1.0 / alpha)
    rho = r / c
    if k_cut is None:
        k_cut = (60.0) ** (1.0 / alpha)
    if r_switch is None:
        r_switch = 12.0 if alpha < 1.8 else 40.0
    out = np.empty_like(rho)
    near = rho <= r_switch
    if np.any(near):
        # panel count follows the J0 oscillation period at the largest radius
        panels = int(max(64, k_cut * max(rho[near].max(), 1.0) / 2.0))
        xg, wg = np.polynomial.legendre.leggauss(n_nodes)
        edges = np.linspace(0.0, k_cut, panels + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        kk = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
        ww = (half[:, None] * wg[None, :]).ravel()
        f = ww * kk * np.exp(-(kk**alpha))
        rn = rho[near].ravel()
        res = np.empty_like(rn)
        for s in range(0, rn.size, 256):
            res[s : s + 256] = j0(np.outer(rn[s : s + 256], kk)) @ f
        out[near] = res.reshape(rho[near].shape) / (2.0 * np.pi)
    far = ~near
    if np.any(far):
        x = rho[far]
        n = np.arange(1, series_terms + 1)[:, None]
        logmag = 2 * gammaln(1 + n * alpha / 2) + n * alpha * math.log(2) - gammaln(n + 1) - n * alpha * np.log(x)
        sn = np.sin(n * math.pi * alpha / 2) * (-1.0) ** (n + 1)
        terms = sn * np.exp(logmag)
        # divergent for alpha > 1: stop at the smallest term
        stop = np.argmin(logmag, axis=0)
        keep = n - 1 <= stop[None, :]
        out[far] = (terms * keep).sum(axis=0) * x**-2.0 / np.pi**2
    return out / c**2


def periodized_isotropic_density(grid, alpha, scale_rate, t, images=20, dr=None):
    """Isotropic 2-D density summed over the periodic images of ``grid``.

    ``sum_m p(|x - x0 + 2 L m|)`` over ``|m_i| <= images``, with the radial
    profile from :func:`isotropic_radial_density` tabulated and interpolated
    (linearly near the origin, log-log in the tail).  Mass carried by the
    images left out is added back as a uniform level so the result integrates
    to one over the cell.
    """
    if grid.d != 2:
        raise ParameterError("periodized_isotropic_density needs a 2-D grid")
    c = (scale_rate * t) ** (1.0 / alpha)
    Lx, Ly = grid.half_widths
    r_max = math.hypot((2 * images + 1) * Lx, (2 * images + 1) * Ly)
    r_in = 12.0 * c
    dr = dr or 1e-3 * c
    r_lin = np.arange(0.0, r_in + dr, dr)
    p_lin = isotropic_radial_density(alpha, scale_rate, t, r_lin)
    r_log = np.geomspace(r_in, r_max * 1.01, 4000)
    p_log = np.log(isotropic_radial_density(alpha, scale_rate, t, r_log))
    lr_log = np.log(r_log)

    def prof(r):
        out = np.empty_like(r)
        inner = r <= r_in
        out[inner] = np.interp(r[inner], r_lin, p_lin)
        out[~inner] = np.exp(np.interp(np.log(r[~inner]), lr_log, p_log))
        return out

    X = grid.mesh - np.asarray(grid.center)
    acc = np.zeros(grid.n)
    for mx in range(-images, images + 1):
        dx = X[..., 0] + 2 * Lx * mx
        for my in range(-images, images + 1):
            dy = X[..., 1] + 2 * Ly * my
            acc += prof(np.hypot(dx, dy))
    area = 4 * Lx * Ly
    missing = 1.0 - acc.sum() * grid.cell_volume
    return acc + missing / area
