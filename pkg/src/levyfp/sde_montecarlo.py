"""Euler-Maruyama ensembles for ``dX = m(X, t) dt + sigma(X, t) dL`` in 1-D and d-D.

Coefficients are evaluated at the pre-step state.  Random numbers come from
counter-based streams keyed by ``(seed, step, block)`` where a block is a
fixed run of ``BLOCK`` consecutive particle indices, so the result does not
depend on how blocks are scheduled across worker threads.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .coefficients import CoefficientField, CoefficientFieldND
from .errors import DomainError, ParameterError, SimulationError, StepError
from .grid import Grid1D, GridND
from .rng import INIT_STREAM, stream
from .spectral_measure import VectorNoise, draw_vector_increments
from .stable_noise import StableParams, draw_increments

BLOCK = 1 << 16
ESCAPE_BUDGET = 0.01


@dataclass
class Ensemble:
    """Particle states at a common time.

    ``positions`` has shape ``(N,)`` or ``(N, d)``.  Particles that left the
    coefficient domain keep their first out-of-domain position, are flagged in
    ``escaped`` and are no longer advanced.
    """

    positions: np.ndarray
    time: float = 0.0
    seed: int = 0
    step: int = 0
    escaped: np.ndarray = None
    dt: float = None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim not in (1, 2) or len(self.positions) == 0:
            raise ParameterError("ensemble needs N >= 1 positions of shape (N,) or (N, d)")
        if self.escaped is None:
            self.escaped = np.zeros(len(self.positions), dtype=bool)

    @property
    def n(self):
        return len(self.positions)

    @property
    def dim(self):
        return 1 if self.positions.ndim == 1 else self.positions.shape[1]

    @property
    def n_escaped(self):
        return int(self.escaped.sum())

    @property
    def escaped_fraction(self):
        return self.n_escaped / self.n

    @property
    def live(self):
        return self.positions[~self.escaped]

    def copy(self):
        return replace(self, positions=self.positions.copy(), escaped=self.escaped.copy())


def _noise_block(params, dt, size, gen):
    if isinstance(params, VectorNoise):
        return draw_vector_increments(params, dt, size, gen)
    return draw_increments(params, dt, size, gen)


def _check_pair(coeffs, params, dim):
    if dim == 1:
        if not isinstance(coeffs, CoefficientField) or not isinstance(params, StableParams):
            raise ParameterError("1-D ensembles need a CoefficientField and StableParams")
    else:
        if not isinstance(coeffs, CoefficientFieldND) or not isinstance(params, VectorNoise):
            raise ParameterError("d-D ensembles need a CoefficientFieldND and VectorNoise")
        if coeffs.dim != dim or params.dim != dim:
            raise ParameterError(f"dimension mismatch: ensemble {dim}, coefficients {coeffs.dim}, noise {params.dim}")


def _advance(x, t, dt, dL, coeffs, point):
    """One Euler-Maruyama update of the block ``x`` given noise increments ``dL``."""
    nd = x.ndim == 2
    mx = coeffs.m(x, t)
    if nd:
        sx = coeffs.sigma.scale(x, t)
        bad = ~(np.all(np.isfinite(mx), axis=1) & np.isfinite(sx))
        noise = sx[:, None] * (dL @ coeffs.sigma.M.T)
    else:
        sx = coeffs.s(x, t)
        bad = ~(np.isfinite(mx) & np.isfinite(sx))
        noise = sx * dL
    if np.any(bad):
        j = int(np.flatnonzero(bad)[0])
        raise StepError(f"non-finite coefficient at x={x[j]!r}, t={t!r}", state=x[j])
    new = x + mx * dt + noise
    if point == "post":
        # coefficient taken at the predicted end point instead of the start
        with np.errstate(over="ignore", invalid="ignore"):
            if nd:
                s1 = coeffs.sigma.scale(new, t + dt)
                s1 = np.where(np.isfinite(s1), s1, 0.0)
                new = x + mx * dt + s1[:, None] * (dL @ coeffs.sigma.M.T)
            else:
                s1 = coeffs.s(new, t + dt)
                new = x + mx * dt + np.where(np.isfinite(s1), s1, 0.0) * dL
    return new


def em_step(ens, coeffs, params, dt, workers=1, point="pre"):
    """Advance the ensemble by one Euler-Maruyama step of length ``dt``.

    Parameters
    ----------
    ens : Ensemble
    coeffs : CoefficientField or CoefficientFieldND
    params : StableParams (1-D) or VectorNoise (d-D)
    dt : float
    workers : int
        Threads used for particle blocks; results do not depend on it.
    point : {"pre", "post"}
        ``"pre"`` is the Ito rule.  ``"post"`` re-evaluates sigma at the
        predicted end point and exists only for regression tests.

    Returns
    -------
    Ensemble
        A new ensemble at ``time + dt``.
    """
    if not dt > 0:
        raise ParameterError("dt must be positive")
    if point not in ("pre", "post"):
        raise ParameterError("point must be 'pre' or 'post'")
    _check_pair(coeffs, params, ens.dim)
    x = ens.positions.copy()
    esc = ens.escaped.copy()
    t = ens.time
    nblocks = -(-ens.n // BLOCK)

    def work(b):
        lo, hi = b * BLOCK, min((b + 1) * BLOCK, ens.n)
        gen = stream(ens.seed, ens.step, b)
        dL = _noise_block(params, dt, hi - lo, gen)
        live = ~esc[lo:hi]
        if not live.any():
            return
        idx = np.flatnonzero(live) + lo
        with np.errstate(over="ignore", invalid="ignore"):
            new = _advance(x[idx], t, dt, dL[live], coeffs, point)
        x[idx] = new
        fin = np.isfinite(new) if new.ndim == 1 else np.all(np.isfinite(new), axis=1)
        esc[idx] = ~(fin & coeffs.inside(np.where(np.isfinite(new), new, np.inf)))

    if workers > 1 and nblocks > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(work, range(nblocks)))
    else:
        for b in range(nblocks):
            work(b)
    return Ensemble(x, t + dt, ens.seed, ens.step + 1, esc, dt)


def initial_positions(x0, n, seed, dim=1):
    """Draw ``n`` starting states.

    ``x0`` may be a number or vector (point mass), an array of length ``n``,
    a callable ``f(gen, n)``, or a dict with ``kind`` in
    ``{"point", "gaussian", "uniform"}`` (keys ``x``; ``mean``, ``var``;
    ``low``, ``high``).  Random draws use a dedicated stream of ``seed``.
    """
    shape = (n,) if dim == 1 else (n, dim)
    gen = stream(seed, INIT_STREAM, 1)
    if callable(x0) and not isinstance(x0, dict):
        out = np.asarray(x0(gen, n), dtype=float)
    elif isinstance(x0, dict):
        kind = x0.get("kind", "point")
        if kind == "point":
            out = np.broadcast_to(np.asarray(x0.get("x", 0.0), float), shape).copy()
        elif kind == "gaussian":
            mean = np.asarray(x0.get("mean", 0.0), float)
            sd = math.sqrt(float(x0.get("var", 1.0)))
            out = mean + sd * gen.standard_normal(shape)
        elif kind == "uniform":
            out = gen.uniform(float(x0["low"]), float(x0["high"]), shape)
        else:
            raise ParameterError(f"unknown initial law {kind!r}")
    else:
        a = np.asarray(x0, dtype=float)
        out = a.copy() if a.shape == shape else np.broadcast_to(a, shape).copy()
    if out.shape != shape:
        raise ParameterError(f"initial positions have shape {out.shape}, expected {shape}")
    return out


@dataclass
class Trajectory:
    """Checkpointed ensembles from :func:`simulate`; ``dt`` is the step actually used."""

    checkpoints: list
    dt: float
    n_steps: int
    meta: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.checkpoints[-1]

    @property
    def times(self):
        return [e.time for e in self.checkpoints]

    def at(self, t):
        for e in self.checkpoints:
            if abs(e.time - t) <= 1e-9 * max(1.0, abs(t)):
                return e
        raise KeyError(t)


def simulate(x0, coeffs, params, t_final, dt, n_particles, seed, checkpoints=None, workers=1,
             escape_budget=ESCAPE_BUDGET, point="pre"):
    """Run ``ceil(t_final / dt)`` Euler-Maruyama steps and keep requested checkpoints.

    ``dt`` is lowered so that ``t_final`` is an integer number of steps.
    ``checkpoints`` are snapped to the nearest step (``t_final`` is always
    included; ``0`` is included only if requested).  Raises
    :class:`SimulationError` once the escaped fraction exceeds
    ``escape_budget``.
    """
    if not (t_final > 0 and dt > 0):
        raise ParameterError("t_final and dt must be positive")
    if n_particles < 1:
        raise ParameterError("n_particles must be >= 1")
    n_steps = max(1, math.ceil(t_final / dt - 1e-9))
    dt = t_final / n_steps
    want = {n_steps}
    for c in (() if checkpoints is None else checkpoints):
        if not 0 <= c <= t_final * (1 + 1e-12):
            raise ParameterError(f"checkpoint {c} outside [0, t_final]")
        want.add(int(round(c / dt)))
    dim = 1 if isinstance(params, StableParams) else params.dim
    ens = Ensemble(initial_positions(x0, n_particles, seed, dim), 0.0, int(seed), 0, dt=dt)
    ens.escaped = ~coeffs.inside(ens.positions)
    if ens.escaped_fraction > escape_budget:
        raise SimulationError("initial law puts too much mass outside the coefficient domain")
    out = [ens.copy()] if 0 in want else []
    for j in range(1, n_steps + 1):
        ens = em_step(ens, coeffs, params, dt, workers, point)
        ens.time = j * dt
        if ens.escaped_fraction > escape_budget:
            raise SimulationError(
                f"escaped fraction {ens.escaped_fraction:.4g} exceeds budget {escape_budget:.4g} at t={ens.time:.6g}; "
                "enlarge the coefficient domain"
            )
        if j in want:
            out.append(ens.copy())
    return Trajectory(out, dt, n_steps, {"seed": int(seed), "n_particles": int(n_particles), "point": point})


# ------------------------------------------------------------------ densities


@dataclass
class HistogramDensity:
    """Histogram (optionally Gaussian-smoothed) on grid cells centred at the grid points.

    ``values`` integrate to the fraction of particles counted on the grid.
    """

    grid: object
    values: np.ndarray
    time: float = 0.0
    n_total: int = 0
    n_escaped: int = 0
    n_dropped: int = 0
    bandwidth: float = None

    @property
    def cell(self):
        return self.grid.h if isinstance(self.grid, Grid1D) else self.grid.cell_volume

    @property
    def mass(self):
        return float(self.values.sum() * self.cell)

    def l1(self, other):
        other = getattr(other, "values", other)
        return float(np.abs(self.values - np.asarray(other)).sum() * self.cell)


def silverman_bandwidth(x):
    """``0.9 min(std, IQR / 1.34) N^(-1/5)``, robust to heavy tails through the IQR."""
    x = np.asarray(x, dtype=float)
    q75, q25 = np.percentile(x, [75, 25])
    s = min(np.std(x), (q75 - q25) / 1.34)
    if not s > 0:
        s = np.std(x)
    return 0.9 * s * len(x) ** -0.2


def _bin_index(x, first, h, n, outside):
    j = np.floor((x - first) / h + 0.5).astype(np.int64)
    off = (j < 0) | (j >= n)
    if outside == "wrap":
        return j % n, off
    if outside == "error" and off.any():
        raise DomainError(f"{int(off.sum())} live particles fall outside the density grid")
    return j, off


def _smooth(values, grid, bw):
    """Circular convolution with a sampled Gaussian of width ``bw`` (per axis)."""
    if isinstance(grid, Grid1D):
        axes, hs = [grid.x - grid.center], [grid.h]
    else:
        axes = [a - c for a, c in zip(grid.axes, grid.center)]
        hs = list(grid.h)
    kern = np.ones(())
    for ax, h in zip(axes, hs):
        n = len(ax)
        d = np.minimum(np.arange(n), n - np.arange(n)) * h
        g = np.exp(-0.5 * (d / bw) ** 2)
        kern = np.multiply.outer(kern, g / g.sum())
    ax = tuple(range(values.ndim))
    out = np.fft.irfftn(np.fft.rfftn(values) * np.fft.rfftn(kern), s=values.shape, axes=ax)
    total = values.sum()
    out = np.maximum(out, 0.0)
    return out * (total / out.sum()) if out.sum() > 0 else out


def density_estimate(ens, grid, smoothing=None, outside="error"):
    """Normalised histogram of the live particles on ``grid``.

    Parameters
    ----------
    ens : Ensemble or array of positions
    grid : Grid1D or GridND
    smoothing : None, "silverman" or float
        Gaussian kernel bandwidth (x-units); ``"silverman"`` uses
        :func:`silverman_bandwidth` on the live particles (first axis in d-D).
    outside : {"error", "wrap", "drop"}
        Treatment of live particles beyond the grid cells.  Dropped particles
        are counted in ``n_dropped`` and reduce the mass.

    Returns
    -------
    HistogramDensity
        Density with mass equal to the counted fraction of all particles.
    """
    if not isinstance(ens, Ensemble):
        ens = Ensemble(np.asarray(ens, dtype=float))
    if outside not in ("error", "wrap", "drop"):
        raise ParameterError("outside must be 'error', 'wrap' or 'drop'")
    x = ens.live
    if x.size == 0:
        raise ParameterError("no live particles to estimate a density from")
    if isinstance(grid, Grid1D):
        if x.ndim != 1:
            raise ParameterError("1-D grid needs a 1-D ensemble")
        j, off = _bin_index(x, grid.x[0], grid.h, grid.n, outside)
        keep = ~off if outside == "drop" else slice(None)
        counts = np.bincount(j[keep], minlength=grid.n).astype(float)
        cell = grid.h
    else:
        if x.ndim != 2 or x.shape[1] != grid.d:
            raise ParameterError("ensemble dimension does not match the grid")
        idx, off = [], np.zeros(len(x), dtype=bool)
        for i in range(grid.d):
            ji, oi = _bin_index(x[:, i], grid.axes[i][0], grid.h[i], grid.n[i], outside)
            idx.append(ji)
            off |= oi
        keep = ~off if outside == "drop" else slice(None)
        flat = np.ravel_multi_index([a[keep] for a in idx], grid.n)
        counts = np.bincount(flat, minlength=int(np.prod(grid.n))).reshape(grid.n).astype(float)
        cell = grid.cell_volume
    dropped = int(off.sum()) if outside == "drop" else 0
    values = counts / (ens.n * cell)
    bw = None
    if smoothing is not None:
        bw = silverman_bandwidth(x if x.ndim == 1 else x[:, 0]) if smoothing == "silverman" else float(smoothing)
        values = _smooth(values, grid, bw)
    return HistogramDensity(grid, values, ens.time, ens.n, ens.n_escaped, dropped, bw)


# ------------------------------------------------------------------ dumps


def _fmt(v):
    return "%.17g" % v


def write_checkpoints(traj, path):
    """CSV ``t,particle_id,x[,y,...]`` for every checkpoint."""
    ens0 = traj.checkpoints[0]
    names = ["x", "y", "z"][: ens0.dim] if ens0.dim <= 3 else [f"x{i}" for i in range(ens0.dim)]
    with open(path, "w") as fh:
        fh.write(",".join(["t", "particle_id"] + names) + "\n")
        for e in traj.checkpoints:
            pos = e.positions.reshape(e.n, -1)
            ids = np.arange(e.n)
            block = np.column_stack([np.full(e.n, e.time), ids, pos])
            np.savetxt(fh, block, fmt=["%.17g", "%d"] + ["%.17g"] * pos.shape[1], delimiter=",")


def write_density(dens, path):
    """CSV ``x,p`` (1-D) or ``x,y,p`` (2-D)."""
    g = dens.grid
    with open(path, "w") as fh:
        if isinstance(g, Grid1D):
            fh.write("x,p\n")
            np.savetxt(fh, np.column_stack([g.x, dens.values]), fmt="%.17g", delimiter=",")
        else:
            names = ["x", "y", "z"][: g.d]
            fh.write(",".join(names + ["p"]) + "\n")
            pts = g.mesh.reshape(-1, g.d)
            np.savetxt(fh, np.column_stack([pts, dens.values.ravel()]), fmt="%.17g", delimiter=",")
