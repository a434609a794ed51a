"""Named scenarios with pinned tolerances.

Each entry returns a partial config merged over the defaults.  Scenario
names are accepted by ``--scenario`` and as the ``scenario`` key of a config
file; keys in the file override the scenario's values.
"""

WIDE = [-1.0e4, 1.0e4]


def linear():
    """Constant drift and modulation: Monte Carlo against the PDE, L1 within 3x the two-seed floor."""
    return {
        "scenario": "linear",
        "pipeline": "compare",
        "noise": {"alpha": 1.5, "beta": 0.0, "gamma": 0.0, "d_scale": 1.0},
        "coefficients": {"drift": {"kind": "constant", "value": 0.1}, "sigma": {"kind": "constant", "value": 1.0},
                         "domain": WIDE},
        "initial": {"kind": "gaussian", "mean": 0.0, "var": 0.1},
        "grid": {"half_width": 64.0, "n": 1024},
        "time": {"t_final": 1.0, "dt": 0.01, "checkpoints": [0.5]},
        "mc": {"n_particles": 200000},
    }


def gaussian_ou():
    """Brownian forcing with linear restoring drift; stationary variance 2 D sigma^2 / (2 lam) = 0.5."""
    return {
        "scenario": "gaussian-ou",
        "pipeline": "compare",
        "noise": {"alpha": 2.0, "beta": 0.0, "gamma": 0.0, "d_scale": 0.5},
        "coefficients": {"drift": {"kind": "linear", "lam": 1.0}, "sigma": {"kind": "constant", "value": 1.0},
                         "domain": WIDE},
        "initial": {"kind": "gaussian", "mean": 2.0, "var": 0.1},
        "grid": {"half_width": 8.0, "n": 256},
        "time": {"t_final": 10.0, "dt": 0.01, "checkpoints": [1.0]},
        "mc": {"n_particles": 200000},
    }


def double_well():
    """Double-well drift with multiplicative noise: the nonlinear Monte Carlo against PDE check."""
    return {
        "scenario": "double-well",
        "pipeline": "compare",
        "noise": {"alpha": 1.5, "beta": 0.0, "gamma": 0.0, "d_scale": 0.5},
        "coefficients": {"drift": {"kind": "double_well"}, "sigma": {"kind": "sinusoidal", "a": 1.0, "b": 0.5},
                         "domain": [-50.0, 50.0]},
        "initial": {"kind": "gaussian", "mean": 0.0, "var": 0.25},
        "grid": {"half_width": 10.0, "n": 512},
        "time": {"t_final": 1.0, "dt": 1e-3},
        "mc": {"n_particles": 1000000},
    }


def stable_ou_cumulants():
    """Stable Ornstein-Uhlenbeck paths: fitted index and per-bin drift."""
    return {
        "scenario": "stable-ou-cumulants",
        "pipeline": "cumulants",
        "noise": {"alpha": 1.2, "beta": 0.0, "gamma": 0.0, "d_scale": 1.0},
        "coefficients": {"drift": {"kind": "linear", "lam": 1.0}, "sigma": {"kind": "constant", "value": 1.0},
                         "domain": WIDE},
        "initial": {"kind": "gaussian", "mean": 0.0, "var": 2.25},
        "time": {"t_final": 0.016, "dt": 1e-3},
        "mc": {"n_particles": 1000000},
        "cumulants": {"k_min": 0.5, "k_max": 1000.0, "n_k": 32, "bin_edges": [-2.0, 2.0, 17], "n_lags": 16},
    }


def isotropic_2d():
    """Isotropic 2-D forcing from a near-point start: radial symmetry and the Hankel oracle."""
    return {
        "scenario": "isotropic-2d",
        "pipeline": "solve-nd",
        "dim": 2,
        "noise": {"alpha": 1.5, "measure": {"kind": "isotropic", "d_scale": 0.5}, "gamma": None},
        "coefficients": {"drift": {"kind": "constant", "value": [0.0, 0.0]},
                         "sigma": {"matrix": [[1.0, 0.0], [0.0, 1.0]], "modulation": None}, "domain": None},
        "initial": {"kind": "propagated", "x": [0.0, 0.0], "t0": 0.25},
        "grid": {"half_width": [12.0, 12.0], "n": [256, 256]},
        "time": {"t_final": 1.0},
        "compare": {"l1_tol": 1e-3, "radial_tol": 1e-6},
    }


def embedding_1d():
    """Scalar skewed problem solved by both the scalar and the d-D solver through the discrete embedding."""
    return {
        "scenario": "embedding-1d",
        "pipeline": "solve",
        "noise": {"alpha": 1.3, "beta": 0.6, "gamma": 0.2, "d_scale": 0.7},
        "coefficients": {"drift": {"kind": "constant", "value": 0.3}, "sigma": {"kind": "constant", "value": 1.2},
                         "domain": [None, None]},
        "initial": {"kind": "gaussian", "mean": 0.0, "var": 0.5},
        "grid": {"half_width": 32.0, "n": 512},
        "time": {"t_final": 1.0, "pde_dt": 0.01},
        "compare": {"l1_tol": 1e-8, "embedding": True, "embedding_tol": 1e-12},
    }


def alpha2_reduction():
    """Gaussian limit: the solver against the closed-form heat kernel, variance 0.5 + 2 D t."""
    return {
        "scenario": "alpha2-reduction",
        "pipeline": "solve",
        "noise": {"alpha": 2.0, "beta": 0.0, "gamma": 0.0, "d_scale": 1.0},
        "coefficients": {"drift": {"kind": "constant", "value": 0.0}, "sigma": {"kind": "constant", "value": 1.0},
                         "domain": [None, None]},
        "initial": {"kind": "gaussian", "mean": 0.0, "var": 0.5},
        "grid": {"half_width": 16.0, "n": 256},
        "time": {"t_final": 1.0},
        "compare": {"l1_tol": 1e-6},
    }


SCENARIOS = {
    "linear": linear,
    "gaussian-ou": gaussian_ou,
    "double-well": double_well,
    "stable-ou-cumulants": stable_ou_cumulants,
    "isotropic-2d": isotropic_2d,
    "embedding-1d": embedding_1d,
    "alpha2-reduction": alpha2_reduction,
}


def scenario_config(name, **sections):
    """Resolved :class:`ExperimentConfig` for a named scenario with optional section overrides."""
    from ..errors import ConfigError
    from .config import ExperimentConfig

    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    return ExperimentConfig.from_dict({"scenario": name, **sections})
