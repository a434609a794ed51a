"""Empirical increment cumulant rates, stable-symbol fits and Kramers-Moyal maps.

For increments ``dX`` over a lag ``dt`` conditioned on the start position,
``dK(k | x) = log E[exp(i k dX) | x]``.  Under the stable model

    dK(k | x) ~ dt [ i k C1(x) - S(x) |k|^alpha (1 - i beta sgn(k) tan(pi alpha / 2)) ],

with ``S(x) = D sigma(x)^alpha``.  Estimates are stored on positive
wavenumbers; ``k = 0`` and ``k < 0`` follow from ``dK(0) = 0`` and Hermitian
symmetry.
"""

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import EstimationError, ParameterError
from .stable_noise import omega

MIN_SAMPLES = 1000
MASK_Z = 5.0


@dataclass
class CumulantEstimate:
    """Per-bin estimates of ``dK`` on positive wavenumbers ``k``.

    ``se`` is the CLT standard error of ``dK`` (``None`` for exact input),
    ``mask`` marks usable entries and ``bin_ok`` marks bins above the sample
    floor.
    """

    k: np.ndarray
    dK: np.ndarray
    dt: float
    se: np.ndarray = None
    mask: np.ndarray = None
    edges: np.ndarray = None
    x_mean: np.ndarray = None
    counts: np.ndarray = None
    bin_ok: np.ndarray = None
    fit: object = None

    def __post_init__(self):
        self.k = np.asarray(self.k, dtype=float)
        self.dK = np.atleast_2d(np.asarray(self.dK, dtype=complex))
        nb = self.dK.shape[0]
        if self.mask is None:
            self.mask = np.ones(self.dK.shape, dtype=bool)
        if self.bin_ok is None:
            self.bin_ok = np.ones(nb, dtype=bool)
        if self.edges is None:
            self.edges = np.array([-np.inf, np.inf])
        if self.x_mean is None:
            self.x_mean = np.full(nb, np.nan)

    @property
    def n_bins(self):
        return self.dK.shape[0]

    @property
    def centers(self):
        e = self.edges
        with np.errstate(invalid="ignore"):
            c = 0.5 * (e[:-1] + e[1:])
        return np.where(np.isfinite(c), c, self.x_mean)

    def full(self):
        """``(k_full, dK_full, mask_full)`` on ``[-k[::-1], 0, k]`` using ``dK(-k) = conj dK(k)``."""
        kf = np.concatenate([-self.k[::-1], [0.0], self.k])
        z = np.zeros((self.n_bins, 1), dtype=complex)
        dk = np.concatenate([np.conj(self.dK[:, ::-1]), z, self.dK], axis=1)
        m = np.concatenate([self.mask[:, ::-1], np.ones((self.n_bins, 1), bool), self.mask], axis=1)
        m &= self.bin_ok[:, None]
        return kf, dk, m

    def to_csv(self, path):
        """CSV ``x_bin,k,re_dK,im_dK,mask`` on the symmetric wavenumber grid."""
        kf, dk, m = self.full()
        xc = self.centers
        with open(path, "w") as fh:
            fh.write("x_bin,k,re_dK,im_dK,mask\n")
            for b in range(self.n_bins):
                for j in range(len(kf)):
                    fh.write("%.17g,%.17g,%.17g,%.17g,%d\n" % (xc[b], kf[j], dk[b, j].real, dk[b, j].imag, m[b, j]))


def _bin_of(x, edges):
    j = np.searchsorted(edges, x, side="right") - 1
    j[x == edges[-1]] = len(edges) - 2
    return j


def empirical_delta_K(increments, k, dt, x_start=None, bins=None, min_samples=MIN_SAMPLES):
    """Estimate ``dK(k | x)`` per conditioning bin.

    Parameters
    ----------
    increments : array (N,)
        Increments ``dX`` over the lag ``dt``.
    k : array
        Positive wavenumbers; sorted internally.  The complex log is unwrapped
        along this grid starting from ``k = 0``.
    dt : float
    x_start : array (N,), optional
        Conditioning positions.  Without it all samples share one bin.
    bins : int or array of edges, optional
        Equal-width bins over the range of ``x_start`` when an int.
    min_samples : int
        Bins with fewer samples are masked entirely.

    Returns
    -------
    CumulantEstimate
        Entries with ``|Z| < 5 SE(Z)`` are masked, and so is everything beyond
        them along increasing ``k``.
    """
    k = np.sort(np.asarray(k, dtype=float).ravel())
    if k.size == 0:
        raise EstimationError("empty k-grid")
    if np.any(k <= 0):
        raise EstimationError("k-grid must be positive; k=0 and k<0 are implied")
    dx = np.asarray(increments, dtype=float).ravel()
    if x_start is None:
        edges = np.array([-np.inf, np.inf])
        idx = np.zeros(dx.size, dtype=np.int64)
        xs = np.zeros(dx.size)
    else:
        xs = np.asarray(x_start, dtype=float).ravel()
        if xs.shape != dx.shape:
            raise ParameterError("x_start and increments differ in length")
        if bins is None:
            edges = np.array([-np.inf, np.inf])
        elif np.ndim(bins) == 0:
            edges = np.linspace(xs.min(), xs.max(), int(bins) + 1)
        else:
            edges = np.asarray(bins, dtype=float)
        idx = _bin_of(xs, edges)
    nb = len(edges) - 1
    inside = (idx >= 0) & (idx < nb)
    idx, dx, xs = idx[inside], dx[inside], xs[inside]
    counts = np.bincount(idx, minlength=nb)
    bin_ok = counts >= min_samples
    if not bin_ok.any():
        raise EstimationError(f"every bin has fewer than {min_samples} samples")
    safe = np.maximum(counts, 1)
    x_mean = np.bincount(idx, weights=xs, minlength=nb) / safe
    if x_start is None:
        x_mean[:] = np.nan
    Z = np.empty((nb, k.size), dtype=complex)
    for j, kj in enumerate(k):
        ph = kj * dx
        Z[:, j] = (np.bincount(idx, np.cos(ph), nb) + 1j * np.bincount(idx, np.sin(ph), nb)) / safe
    absz = np.abs(Z)
    se_z = np.sqrt(np.maximum(1.0 - absz**2, 0.0) / safe[:, None])
    phase = np.unwrap(np.concatenate([np.zeros((nb, 1)), np.angle(Z)], axis=1), axis=1)[:, 1:]
    with np.errstate(divide="ignore"):
        dK = np.log(absz) + 1j * phase
        se = se_z / absz
    ok = absz >= MASK_Z * se_z
    mask = np.logical_and.accumulate(ok, axis=1) & bin_ok[:, None]
    return CumulantEstimate(k, dK, float(dt), se, mask, edges, x_mean, counts, bin_ok)


def increments_from_ensembles(e0, e1):
    """``(dX, x_start, dt)`` for particles live in both ensembles."""
    live = ~(e0.escaped | e1.escaped)
    return e1.positions[live] - e0.positions[live], e0.positions[live], e1.time - e0.time


def increments_from_trajectory(traj, start=0):
    """Pool increments of all consecutive checkpoint pairs (equal lags) from ``start`` on.

    Pooling is valid for time-homogeneous coefficients: every pair samples the
    same conditional increment law.
    """
    cps = traj.checkpoints[start:]
    if len(cps) < 2:
        raise EstimationError("need at least two checkpoints")
    lags = np.diff([e.time for e in cps])
    if np.ptp(lags) > 1e-9 * lags.max():
        raise EstimationError("checkpoint lags are not uniform")
    parts = [increments_from_ensembles(a, b) for a, b in zip(cps[:-1], cps[1:])]
    dx = np.concatenate([q[0] for q in parts])
    xs = np.concatenate([q[1] for q in parts])
    return dx, xs, float(lags.mean())


# ------------------------------------------------------------------ fitting


@dataclass
class StableFit:
    """Result of :func:`fit_stable_symbol`; per-bin arrays follow the estimate's bins."""

    alpha_hat: float
    beta_hat: float
    alpha_raw: float
    beta_raw: float
    alpha_se: float
    beta_se: float
    c1: np.ndarray
    c1_se: np.ndarray
    scale: np.ndarray
    x_bin: np.ndarray
    x_mean: np.ndarray
    counts: np.ndarray
    used: np.ndarray
    flags: list = field(default_factory=list)

    def to_dict(self):
        per_bin = []
        for b in np.flatnonzero(self.used):
            per_bin.append({
                "x_bin": float(self.x_bin[b]),
                "x_mean": None if not np.isfinite(self.x_mean[b]) else float(self.x_mean[b]),
                "n": None if self.counts is None else int(self.counts[b]),
                "c1": float(self.c1[b]),
                "c1_se": float(self.c1_se[b]),
                "scale": float(self.scale[b]),
            })
        return {
            "alpha_hat": self.alpha_hat,
            "beta_hat": self.beta_hat,
            "alpha_raw": self.alpha_raw,
            "beta_raw": self.beta_raw,
            "alpha_se": self.alpha_se,
            "beta_se": self.beta_se,
            "flags": list(self.flags),
            "per_bin": per_bin,
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


def _wls(A, y, w):
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(A * sw[:, None], y * sw, rcond=None)
    r = (y - A @ coef) * sw
    dof = max(len(y) - A.shape[1], 1)
    s2 = float(r @ r) / dof
    try:
        cov = np.linalg.inv((A * w[:, None]).T @ A)
    except np.linalg.LinAlgError:
        cov = np.full((A.shape[1], A.shape[1]), np.nan)
    # exact inputs have no residual scatter; report the formal errors then
    return coef, np.sqrt(np.abs(np.diag(cov)) * (s2 if s2 > 0 else 1.0))


def fit_stable_symbol(est, band=(1e-3, 1.0), noise_z=MASK_Z, alpha2_tol=0.05, alpha1_tol=0.05):
    """Fit ``alpha, beta`` globally and ``C1, S = D sigma^alpha`` per bin.

    ``alpha`` comes from a weighted regression of ``log(-Re dK)`` on
    ``log k`` with one intercept per bin, over entries with ``-Re dK`` in
    ``band`` (lower edge raised to ``noise_z`` standard errors).  With
    ``alpha`` fixed, ``Im dK = dt (C1 k + beta tan(pi alpha/2) S k^alpha)``
    is linear in ``C1`` (per bin) and ``beta`` (global).

    Raises
    ------
    EstimationError
        If the k-grid spans less than a decade or has fewer than 8 points,
        if ``Re dK`` is positive beyond ``noise_z`` standard errors on an
        unmasked entry, or if no entries fall in the band.
    """
    k = est.k
    if k.size < 8 or k.max() < 10 * k.min():
        raise EstimationError("k-grid needs >= 8 points spanning at least one decade")
    usable = est.mask & est.bin_ok[:, None]
    se = est.se if est.se is not None else np.zeros(est.dK.shape)
    re = est.dK.real
    bad = usable & (re > noise_z * se) & (re > 0)
    if bad.any():
        b, j = np.argwhere(bad)[0]
        raise EstimationError(f"Re dK = {re[b, j]:.3g} > 0 at k={k[j]:.4g} (bin {b}): not a valid cumulant rate")
    y = -re
    lo = np.maximum(band[0], noise_z * se)
    sel = usable & (y >= lo) & (y <= band[1])
    bins_used = sel.sum(axis=1) >= 2
    sel &= bins_used[:, None]
    if not bins_used.any():
        raise EstimationError("no bin has two or more entries inside the regression band")
    ub = np.flatnonzero(bins_used)
    col = {b: i for i, b in enumerate(ub)}
    rows = np.argwhere(sel)
    lk = np.log(k[rows[:, 1]])
    ly = np.log(y[rows[:, 0], rows[:, 1]])
    wt = np.ones(len(rows)) if est.se is None else (y[rows[:, 0], rows[:, 1]] / np.maximum(se[rows[:, 0], rows[:, 1]], 1e-300)) ** 2
    A = np.zeros((len(rows), len(ub) + 1))
    A[np.arange(len(rows)), [col[b] for b in rows[:, 0]]] = 1.0
    A[:, -1] = lk
    coef, cse = _wls(A, ly, wt)
    alpha_raw = float(coef[-1])
    alpha = float(min(max(alpha_raw, 1e-6), 2.0))
    flags = []
    if alpha != alpha_raw:
        flags.append(f"alpha clamped from {alpha_raw:.6g}")
    nb = est.n_bins
    scale = np.full(nb, np.nan)
    scale[ub] = np.exp(coef[:-1] - (alpha - alpha_raw) * 0.0) / est.dt

    # odd part: Im dK / dt = C1_b k + beta * w * S_b k^alpha
    w_al = 0.0 if abs(alpha - 2.0) < 1e-12 else math.tan(0.5 * math.pi * alpha)
    skew_ok = abs(alpha - 2.0) >= alpha2_tol
    rows_i = np.argwhere(sel)
    kk = k[rows_i[:, 1]]
    yi = est.dK.imag[rows_i[:, 0], rows_i[:, 1]] / est.dt
    wi = np.ones(len(rows_i)) if est.se is None else (est.dt / np.maximum(se[rows_i[:, 0], rows_i[:, 1]], 1e-300)) ** 2
    B = np.zeros((len(rows_i), len(ub) + (1 if skew_ok else 0)))
    B[np.arange(len(rows_i)), [col[b] for b in rows_i[:, 0]]] = kk
    if skew_ok:
        B[:, -1] = w_al * scale[rows_i[:, 0]] * kk**alpha
    cb, cbse = _wls(B, yi, wi)
    c1 = np.full(nb, np.nan)
    c1_se = np.full(nb, np.nan)
    c1[ub] = cb[: len(ub)]
    c1_se[ub] = cbse[: len(ub)]
    if skew_ok:
        beta_raw, beta_se = float(cb[-1]), float(cbse[-1])
    else:
        beta_raw, beta_se = 0.0, float("nan")
        flags.append("skewness unidentifiable at alpha=2")
    beta = float(min(max(beta_raw, -1.0), 1.0))
    if beta != beta_raw:
        flags.append(f"beta clamped from {beta_raw:.6g}")
    if abs(alpha - 1.0) < alpha1_tol and beta != 0.0:
        flags.append("alpha near 1 with nonzero skewness: the skew term is ill-conditioned")
    used = np.zeros(nb, dtype=bool)
    used[ub] = True
    fit = StableFit(alpha, beta, alpha_raw, beta_raw, float(cse[-1]), beta_se, c1, c1_se, scale,
                    est.centers, est.x_mean, est.counts, used, flags)
    est.fit = fit
    return fit


def symbol_estimate(params, k, dt=1.0, scale_field=None, drift=None, x=None):
    """Exact :class:`CumulantEstimate` built from the stable model (for tests and demos)."""
    from .stable_noise import char_exponent

    k = np.asarray(k, dtype=float)
    dK = np.atleast_2d(char_exponent(params, k, dt))
    return CumulantEstimate(k, dK, dt)


def dt_halving_diagnostic(pairs, k, bins=None, min_samples=MIN_SAMPLES, band=(1e-3, 1.0)):
    """Fit each ``(e0, e1)`` ensemble pair and report how the fit moves with the lag.

    Returns a list of dicts ``{dt, alpha_hat, beta_hat, c1, scale}`` sorted by
    lag, plus the largest relative change of ``alpha_hat`` between
    consecutive lags under ``max_alpha_change``.
    """
    rows = []
    for e0, e1 in pairs:
        dx, xs, lag = increments_from_ensembles(e0, e1)
        est = empirical_delta_K(dx, k, lag, xs, bins, min_samples)
        f = fit_stable_symbol(est, band)
        rows.append({"dt": lag, "alpha_hat": f.alpha_hat, "beta_hat": f.beta_hat, "c1": f.c1.tolist(), "scale": f.scale.tolist()})
    rows.sort(key=lambda r: r["dt"])
    a = [r["alpha_hat"] for r in rows]
    change = max((abs(a[i + 1] - a[i]) / abs(a[i]) for i in range(len(a) - 1)), default=0.0)
    return {"levels": rows, "max_alpha_change": change}


# ------------------------------------------------------------------ Kramers-Moyal


@dataclass
class KramersMoyal:
    """Coefficients ``A_n`` keyed by order ``n``; fractional orders hold magnitudes only."""

    coeffs: dict
    flags: dict = field(default_factory=dict)

    @property
    def orders(self):
        return sorted(self.coeffs)


def _is_int(n):
    return float(n).is_integer()


def _rational(v):
    return isinstance(v, (int, Fraction)) and not isinstance(v, bool)


def _check_finite(d):
    for n, v in d.items():
        if not (np.isfinite(n) and np.all(np.isfinite(np.asarray(v, dtype=float)))):
            raise ParameterError(f"non-finite entry for order {n}")


def km_from_cumulants(C):
    """``A_n = (-1)^n C_n / Gamma(n+1)``.

    For integer ``n`` this is the signed factorial map; ``int`` or
    :class:`~fractions.Fraction` values are mapped in exact arithmetic.  For
    fractional ``n`` the stored value is ``C_n / Gamma(n+1)``: the sign is
    carried by the Fourier symbol of the solver, and the order is flagged
    accordingly.
    """
    _check_finite(C)
    out, flags = {}, {}
    for n, c in C.items():
        n = float(n)
        if _is_int(n) and _rational(c):
            out[n] = Fraction(c) * (-1) ** int(n) / math.factorial(int(n))
            continue
        c = np.asarray(c, dtype=float)
        if _is_int(n):
            out[n] = (-1.0) ** int(n) * c / math.factorial(int(n))
        else:
            out[n] = c / math.gamma(n + 1.0)
            flags[n] = "symbol-level, not sign-mapped"
    return KramersMoyal(out, flags)


def cumulants_from_km(km):
    """Inverse of :func:`km_from_cumulants`."""
    _check_finite(km.coeffs)
    out = {}
    for n, a in km.coeffs.items():
        if _is_int(n) and _rational(a):
            out[n] = Fraction(a) * (-1) ** int(n) * math.factorial(int(n))
            continue
        a = np.asarray(a, dtype=float)
        if _is_int(n):
            out[n] = (-1.0) ** int(n) * a * math.factorial(int(n))
        else:
            out[n] = a * math.gamma(n + 1.0)
    return out


def cumulants_from_fit(fit):
    """``{1: C1 per bin, alpha: S per bin}`` from a :class:`StableFit` (rates per unit time)."""
    return {1.0: fit.c1, float(fit.alpha_hat): fit.scale}
