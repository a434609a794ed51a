"""Classical RK4 method of lines with mass and positivity monitoring."""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import PositivityError, StabilityError

# The RK4 stability region contains the closed left half-disk of radius
# 2.6156 around the origin; 2.5 leaves a small margin.
RK4_RADIUS = 2.5
POS_WARN = 1e-6
POS_ABORT = 1e-3


@dataclass
class StepLog:
    """Per-run diagnostics collected by :func:`integrate`."""

    dt: float
    n_steps: int
    mass_drift_max: float = 0.0
    positivity: list = field(default_factory=list)
    min_ratio: float = 0.0

    def to_dict(self):
        return {
            "dt": self.dt,
            "n_steps": self.n_steps,
            "mass_drift_max": self.mass_drift_max,
            "min_over_max": self.min_ratio,
            "positivity_events": [{"t": t, "min_over_max": r} for t, r in self.positivity],
        }


def check_dt(dt, rho, what="solver"):
    """Raise :class:`StabilityError` unless ``dt * rho <= RK4_RADIUS``."""
    if rho <= 0:
        return math.inf
    adm = RK4_RADIUS / rho
    if dt > adm * (1 + 1e-12):
        raise StabilityError(dt, adm)
    return adm


def step_count(t_span, dt):
    """Steps needed so that the actual step does not exceed ``dt``."""
    return max(1, math.ceil(t_span / dt - 1e-9))


def integrate(rhs, y0, t0, t_final, dt, cell, checkpoints=(), pos_warn=POS_WARN, pos_abort=POS_ABORT):
    """RK4 from ``t0`` to ``t_final`` with steps not exceeding ``dt``.

    The interval is cut at the checkpoints and every segment uses its own
    uniform step, so checkpoint times are hit exactly.

    Parameters
    ----------
    rhs : callable ``rhs(y, t)``
    y0 : array
    cell : float
        Cell size/volume used for mass sums.
    checkpoints : iterable of float
        Times in ``[t0, t_final]`` to keep; ``t_final`` is always kept.

    Returns
    -------
    states : list of (t, y)
    log : StepLog
        ``dt`` is the largest step actually taken.
    """
    tol = 1e-12 * max(1.0, abs(t_final))
    cuts = sorted(set(float(c) for c in checkpoints if t0 + tol < c < t_final - tol))
    bounds = [t0] + cuts + [t_final]
    keep0 = any(abs(c - t0) <= tol for c in checkpoints)
    log = StepLog(0.0, 0)
    y = np.array(y0, dtype=float)
    out = [(t0, y.copy())] if keep0 else []
    mass = y.sum() * cell
    for a, b in zip(bounds[:-1], bounds[1:]):
        n = step_count(b - a, dt)
        h = (b - a) / n
        log.dt = max(log.dt, h)
        for j in range(1, n + 1):
            t = a + (j - 1) * h
            k1 = rhs(y, t)
            k2 = rhs(y + 0.5 * h * k1, t + 0.5 * h)
            k3 = rhs(y + 0.5 * h * k2, t + 0.5 * h)
            k4 = rhs(y + h * k3, t + h)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(y)):
                raise StabilityError(h, float("nan"), f"non-finite state at t={t + h:.6g}")
            m = y.sum() * cell
            log.mass_drift_max = max(log.mass_drift_max, abs(m - mass))
            mass = m
            top = y.max()
            ratio = float(y.min() / top) if top > 0 else 0.0
            log.min_ratio = min(log.min_ratio, ratio)
            if ratio < -pos_warn:
                log.positivity.append((t + h, ratio))
                if pos_abort is not None and ratio < -pos_abort:
                    raise PositivityError(f"min p / max p = {ratio:.3g} at t={t + h:.6g} (abort below {-pos_abort:g})")
        log.n_steps += n
        out.append((b, y.copy()))
    if log.positivity:
        warnings.warn(
            f"{len(log.positivity)} steps with min p below -{pos_warn:g} max p (worst {log.min_ratio:.3g})",
            RuntimeWarning,
        )
    return out, log
