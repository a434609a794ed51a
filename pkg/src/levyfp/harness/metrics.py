"""Distances between Monte Carlo samples, histograms and grid densities."""

import numpy as np


def l1_distance(p, q, cell):
    """``sum |p - q| * cell`` for arrays on a common grid."""
    return float(np.abs(np.asarray(p) - np.asarray(q)).sum() * cell)


def grid_cdf(values, grid):
    """Cell-edge abscissae and CDF of a piecewise-constant density on a 1-D grid.

    Cell ``j`` is ``[x_j - h/2, x_j + h/2]``; the returned CDF starts at 0 and
    ends at the total mass.
    """
    h = grid.h
    edges = np.concatenate([[grid.x[0] - 0.5 * h], grid.x + 0.5 * h])
    cdf = np.concatenate([[0.0], np.cumsum(np.asarray(values) * h)])
    return edges, cdf


def ks_against_grid(samples, values, grid, total=None):
    """Kolmogorov-Smirnov distance between samples and a grid density.

    The model CDF is linear inside each cell (the density is taken as
    constant per cell), flat outside the grid, and normalised by ``total``
    (default: its mass on the grid).  Sample points beyond the grid simply
    sit where the model CDF is 0 or 1.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    edges, cdf = grid_cdf(values, grid)
    cdf = cdf / (cdf[-1] if total is None else total)
    F = np.interp(x, edges, cdf)
    n = x.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def ks_two_sample(a, b):
    """Two-sample KS statistic (scipy)."""
    from scipy.stats import ks_2samp

    return float(ks_2samp(a, b).statistic)


def ks_critical(n, level=1e-3, m=None):
    """Asymptotic KS critical value ``c(level) sqrt((n + m) / (n m))`` (one-sample if ``m`` is None)."""
    c = np.sqrt(-0.5 * np.log(level / 2.0))
    return float(c * (np.sqrt(1.0 / n) if m is None else np.sqrt((n + m) / (n * m))))


def radial_asymmetry(values, grid, radii, n_angles=64, center=(0.0, 0.0)):
    """Largest deviation from the angular mean on circles of the given radii.

    Uses the trigonometric interpolant of the grid values.  Returns
    ``(max_abs_deviation, per_radius_means)``.
    """
    from ..grid import evaluate_interpolant

    th = 2.0 * np.pi * np.arange(n_angles) / n_angles
    worst, means = 0.0, []
    for r in radii:
        pts = np.column_stack([center[0] + r * np.cos(th), center[1] + r * np.sin(th)])
        v = evaluate_interpolant(values, pts, grid)
        mu = float(v.mean())
        means.append(mu)
        worst = max(worst, float(np.max(np.abs(v - mu))))
    return worst, means


def fitted_order(res, err):
    """Least-squares slope of ``log err`` against ``log res`` (positive zeros ignored)."""
    res, err = np.asarray(res, float), np.asarray(err, float)
    ok = err > 0
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(res[ok]), np.log(err[ok]), 1)[0])
