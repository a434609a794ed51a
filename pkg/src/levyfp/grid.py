"""Uniform periodic grids, density fields and Fourier multipliers.

Transform convention
--------------------
The forward transform is ``F[f](k) = int exp(+ikx) f(x) dx`` so that the
transform of a density is its characteristic function, and the inverse uses
``exp(-ikx)``.  A plane-wave density component ``exp(-ik x)`` therefore
carries wavenumber ``k``.  numpy/scipy FFTs use the opposite sign, so a
multiplier ``s(k)`` in our convention is applied as ``conj(s)`` on scipy's
``rfft`` coefficients (``s(-k) = conj(s(k))`` for real operators).
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import ParameterError

MASS_TOL = 1e-8


def _check_pow2(n):
    if n < 8 or n & (n - 1):
        raise ParameterError(f"grid size must be a power of two >= 8, got {n}")


@dataclass(frozen=True)
class Grid1D:
    """Periodic grid ``x_j = center - L + j h``, ``j = 0..n-1``, ``h = 2L/n``."""

    half_width: float
    n: int
    center: float = 0.0

    def __post_init__(self):
        _check_pow2(int(self.n))
        if not self.half_width > 0:
            raise ParameterError("half_width must be positive")

    @property
    def h(self):
        return 2.0 * self.half_width / self.n

    @property
    def x(self):
        return self.center - self.half_width + self.h * np.arange(self.n)

    @property
    def k(self):
        """Nonnegative wavenumbers matching the ``rfft`` layout."""
        return 2.0 * np.pi * sfft.rfftfreq(self.n, self.h)

    @property
    def k_full(self):
        """Signed wavenumbers in FFT order (for complex fields)."""
        return 2.0 * np.pi * sfft.fftfreq(self.n, self.h)

    @property
    def k_max(self):
        return np.pi / self.h

    def forward(self, f):
        """Discrete ``sum_j f_j exp(+i k_m x_j')`` with ``x'`` measured from the left edge."""
        return sfft.ifft(f, norm="forward")

    def inverse(self, fh):
        return sfft.fft(fh, norm="forward")

    def apply_multiplier(self, f, mult, mult_full=None):
        """Apply the Fourier multiplier ``mult(k)`` (given on :attr:`k`).

        Real ``f`` uses the rfft path.  Complex ``f`` needs the multiplier on
        the full signed grid, ``mult_full``.
        """
        if np.iscomplexobj(f):
            if mult_full is None:
                raise ValueError("complex input requires the multiplier on k_full")
            return self.inverse(mult_full * self.forward(f))
        return sfft.irfft(np.conj(mult) * sfft.rfft(f), n=self.n)

    def to_dict(self):
        return {"half_width": self.half_width, "n": self.n, "center": self.center}


@dataclass(frozen=True)
class GridND:
    """Tensor-product periodic grid; axis ``i`` has ``n[i]`` points on ``center[i] +- L[i]``."""

    half_widths: tuple
    n: tuple
    center: tuple = None

    def __post_init__(self):
        hw = tuple(float(v) for v in self.half_widths)
        n = tuple(int(v) for v in self.n)
        if len(hw) != len(n):
            raise ParameterError("half_widths and n differ in length")
        for v in n:
            _check_pow2(v)
        c = tuple(float(v) for v in self.center) if self.center is not None else (0.0,) * len(n)
        object.__setattr__(self, "half_widths", hw)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "center", c)

    @property
    def d(self):
        return len(self.n)

    @property
    def h(self):
        return tuple(2.0 * L / n for L, n in zip(self.half_widths, self.n))

    @property
    def cell_volume(self):
        return float(np.prod(self.h))

    @property
    def axes(self):
        return [c - L + h * np.arange(n) for c, L, h, n in zip(self.center, self.half_widths, self.h, self.n)]

    @property
    def mesh(self):
        """Coordinates with shape ``n + (d,)``."""
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    @property
    def k(self):
        """Wavevectors on the rfftn layout, shape ``(n0, ..., n_{d-1}//2+1, d)``."""
        ks = [2.0 * np.pi * sfft.fftfreq(n, h) for n, h in zip(self.n[:-1], self.h[:-1])]
        ks.append(2.0 * np.pi * sfft.rfftfreq(self.n[-1], self.h[-1]))
        return np.stack(np.meshgrid(*ks, indexing="ij"), axis=-1)

    @property
    def k_full(self):
        ks = [2.0 * np.pi * sfft.fftfreq(n, h) for n, h in zip(self.n, self.h)]
        return np.stack(np.meshgrid(*ks, indexing="ij"), axis=-1)

    @property
    def k_max(self):
        return tuple(np.pi / h for h in self.h)

    def apply_multiplier(self, f, mult, mult_full=None):
        if np.iscomplexobj(f):
            if mult_full is None:
                raise ValueError("complex input requires the multiplier on k_full")
            return sfft.fftn(mult_full * sfft.ifftn(f, norm="forward"), norm="forward")
        return sfft.irfftn(np.conj(mult) * sfft.rfftn(f), s=self.n)

    def to_dict(self):
        return {"half_widths": list(self.half_widths), "n": list(self.n), "center": list(self.center)}


@dataclass
class DensityField:
    """Density samples on a :class:`Grid1D` (or :class:`GridND`) at a given time."""

    grid: object
    values: np.ndarray
    time: float = 0.0
    meta: dict = field(default_factory=dict)
    check_mass: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        shape = (self.grid.n,) if isinstance(self.grid, Grid1D) else tuple(self.grid.n)
        if self.values.shape != shape:
            raise ParameterError(f"values shape {self.values.shape} does not match grid {shape}")
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("density contains non-finite values")
        if self.check_mass and abs(self.mass - 1.0) > MASS_TOL:
            raise ParameterError(f"density mass {self.mass!r} not within {MASS_TOL} of 1")

    @property
    def cell(self):
        return self.grid.h if isinstance(self.grid, Grid1D) else self.grid.cell_volume

    @property
    def mass(self):
        return float(self.values.sum() * self.cell)

    def l1(self, other):
        other = other.values if isinstance(other, DensityField) else np.asarray(other)
        return float(np.abs(self.values - other).sum() * self.cell)


def gaussian_density(grid, mean=0.0, var=1.0, time=0.0):
    """Gaussian sampled on a 1-D grid and rescaled to unit grid mass.

    The rescaling only matters on grids too coarse to resolve ``var``.
    """
    x = grid.x
    p = np.exp(-((x - mean) ** 2) / (2 * var))
    return DensityField(grid, p / (p.sum() * grid.h), time)


def point_mass(grid, x0=0.0, time=0.0):
    """Dirac-like density: all mass in the cell nearest ``x0``."""
    if isinstance(grid, Grid1D):
        p = np.zeros(grid.n)
        j = int(np.rint((x0 - grid.x[0]) / grid.h)) % grid.n
        p[j] = 1.0 / grid.h
        return DensityField(grid, p, time)
    x0 = np.broadcast_to(np.asarray(x0, float), (grid.d,))
    p = np.zeros(grid.n)
    idx = tuple(int(np.rint((x0[i] - grid.axes[i][0]) / grid.h[i])) % grid.n[i] for i in range(grid.d))
    p[idx] = 1.0 / grid.cell_volume
    return DensityField(grid, p, time)


def cell_average(field_or_values, grid=None):
    """Average of the trigonometric interpolant over each grid cell.

    Multiplies every Fourier mode by ``prod_i sinc(k_i h_i / 2)``; this is the
    quantity a histogram with cells centred on the grid points estimates.
    """
    if isinstance(field_or_values, DensityField):
        grid, v = field_or_values.grid, field_or_values.values
    else:
        v = np.asarray(field_or_values, dtype=float)
    if isinstance(grid, Grid1D):
        mult = np.sinc(grid.k * grid.h / (2 * np.pi))
    else:
        k = grid.k
        mult = np.ones(k.shape[:-1])
        for i, h in enumerate(grid.h):
            mult = mult * np.sinc(k[..., i] * h / (2 * np.pi))
    return grid.apply_multiplier(v, mult)


def evaluate_interpolant(field_or_values, points, grid=None, chunk=256):
    """Evaluate the trigonometric interpolant of grid values at arbitrary points.

    ``points`` has shape ``(P,)`` for 1-D grids or ``(P, d)``.  The Nyquist
    mode is split evenly between ``+k_N`` and ``-k_N`` so the interpolant of
    real data is real.
    """
    if isinstance(field_or_values, DensityField):
        grid, v = field_or_values.grid, field_or_values.values
    else:
        v = np.asarray(field_or_values, dtype=float)
    if isinstance(grid, Grid1D):
        axes, ns, lefts = [grid.k_full], [grid.n], [grid.x[0]]
        pts = np.asarray(points, dtype=float).reshape(-1, 1)
    else:
        axes = [2.0 * np.pi * sfft.fftfreq(n, h) for n, h in zip(grid.n, grid.h)]
        ns, lefts = grid.n, [a[0] for a in grid.axes]
        pts = np.asarray(points, dtype=float).reshape(-1, grid.d)
    c = sfft.ifftn(v)
    # weight 1/2 on each Nyquist slab, then add the mirrored +k_N copy
    for i, n in enumerate(ns):
        sl = [slice(None)] * len(ns)
        sl[i] = n // 2
        c[tuple(sl)] *= 0.5
    grids = np.meshgrid(*axes, indexing="ij")
    ks = np.stack([g.ravel() for g in grids], axis=-1)
    cs = c.ravel()
    for i, n in enumerate(ns):
        nyq = np.isclose(ks[:, i], axes[i][n // 2])
        kk = ks[nyq].copy()
        kk[:, i] = -kk[:, i]
        ks = np.concatenate([ks, kk])
        cs = np.concatenate([cs, cs[nyq]])
    rel = pts - np.asarray(lefts)
    out = np.empty(len(pts), dtype=complex)
    for s in range(0, len(pts), chunk):
        out[s : s + chunk] = np.exp(-1j * rel[s : s + chunk] @ ks.T) @ cs
    return out.real
