"""Experiment configuration: schema, validation and the resolved (all-defaults) form.

Config files are JSON objects.  Top-level keys:

``scenario``     free label, or the name of a built-in scenario to start from
``pipeline``     one of ``PIPELINES``
``dim``          1 or 2
``noise``        1-D: ``{alpha, beta, gamma, d_scale}``;
                 d-D: ``{alpha, measure, gamma}`` with ``measure`` either
                 ``{"kind": "isotropic", "d_scale": D}`` or
                 ``{"kind": "discrete", "atoms": [{"direction": [ux, uy], "weight": w}, ...]}``
``coefficients`` 1-D: ``{drift: {kind, ...}, sigma: {kind, ...}, domain: [lo, hi]}``;
                 d-D: ``{drift, sigma: {matrix, modulation}, domain}``
``initial``      ``{kind: point|gaussian|uniform|propagated, ...}``
``grid``         ``{half_width, n}`` (lists in d-D)
``time``         ``{t_final, dt, pde_dt, checkpoints}``
``mc``           ``{n_particles, seed, workers, escape_budget, smoothing}``
``cumulants``    ``{k_min, k_max, n_k, bin_edges, n_lags, min_samples}``
``compare``      ``{l1_factor, l1_tol, ks_tol, alpha_tol, c1_tol, radial_tol, embedding, embedding_tol}``
``converge``     ``{axis, levels, noise_tol, min_order}``
``output``       ``{dir, format, write_particles}``

Unknown keys are rejected.  :meth:`ExperimentConfig.resolved` returns the
dict with every default filled in; parsing it again gives an equal config.
"""

import copy
import json
import math

from ..coefficients import CoefficientField, CoefficientFieldND
from ..errors import ConfigError, LevyFPError
from ..grid import Grid1D, GridND
from ..spectral_measure import VectorNoise
from ..stable_noise import StableParams

PIPELINES = ("sample", "simulate", "solve", "solve-nd", "cumulants", "compare", "converge")
FORMATS = ("csv", "json")
SOLVER_PIPELINES = ("solve", "solve-nd", "compare", "converge")

DEFAULTS = {
    "scenario": "custom",
    "pipeline": "solve",
    "dim": 1,
    "noise": {"alpha": 1.5, "beta": 0.0, "gamma": 0.0, "d_scale": 1.0},
    "coefficients": {
        "drift": {"kind": "constant", "value": 0.0},
        "sigma": {"kind": "constant", "value": 1.0},
        "domain": [None, None],
        "lipschitz": None,
    },
    "initial": {"kind": "point", "x": 0.0},
    "grid": {"half_width": 32.0, "n": 1024},
    "time": {"t_final": 1.0, "dt": 0.01, "pde_dt": None, "checkpoints": []},
    "mc": {"n_particles": 100000, "seed": 0, "workers": 1, "escape_budget": 0.01, "smoothing": None},
    "cumulants": {
        "k_min": 0.5,
        "k_max": 1000.0,
        "n_k": 32,
        "bin_edges": [-2.0, 2.0, 17],
        "n_lags": 16,
        "min_samples": 1000,
    },
    "compare": {
        "l1_factor": 3.0,
        "l1_tol": None,
        "ks_tol": None,
        "alpha_tol": 0.05,
        "c1_tol": 0.05,
        "radial_tol": 1e-6,
        "embedding": False,
        "embedding_tol": 1e-12,
    },
    "converge": {"axis": "dt", "levels": [0.02, 0.01, 0.005, 0.0025], "noise_tol": 0.1, "min_order": 3.5},
    "output": {"dir": "out", "format": "json", "write_particles": False},
}

ND_NOISE = {"alpha": 1.5, "measure": {"kind": "isotropic", "d_scale": 1.0}, "gamma": None}
ND_COEFFS = {
    "drift": {"kind": "constant", "value": [0.0, 0.0]},
    "sigma": {"matrix": [[1.0, 0.0], [0.0, 1.0]], "modulation": None},
    "domain": None,
}
ND_GRID = {"half_width": [12.0, 12.0], "n": [256, 256]}

INITIAL_KINDS = ("point", "gaussian", "uniform", "propagated")
# sections replaced as a whole when overridden (their keys depend on a kind)
WHOLE = ("initial", "measure", "drift", "sigma")


def _merge(base, over, path=""):
    """Recursive update that refuses keys absent from ``base``."""
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown config key {path + k!r}")
        if isinstance(base[k], dict) and isinstance(v, dict) and k not in WHOLE:
            out[k] = _merge(base[k], v, path + k + ".")
        else:
            out[k] = copy.deepcopy(v)
    return out


def _num(d, key, lo=None, hi=None, integer=False, allow_none=False):
    v = d.get(key)
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{key!r} must be a finite number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{key!r} must be an integer")
    if (lo is not None and v < lo) or (hi is not None and v > hi):
        raise ConfigError(f"{key!r}={v!r} outside [{lo}, {hi}]")
    return int(v) if integer else float(v)


class ExperimentConfig:
    """Validated experiment description.

    Construct with :meth:`from_dict` (or :meth:`load`); domain objects are
    built eagerly so that every error surfaces before a run starts.
    """

    def __init__(self, data):
        self.data = data
        self._validate()

    # ---------------------------------------------------------------- parse

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        scen = {}
        if d.get("scenario") is not None:
            from .scenarios import SCENARIOS

            if d["scenario"] in SCENARIOS:
                scen = SCENARIOS[d["scenario"]]()
        base = copy.deepcopy(DEFAULTS)
        if d.get("dim", scen.get("dim", 1)) == 2:
            base.update(dim=2, noise=copy.deepcopy(ND_NOISE), coefficients=copy.deepcopy(ND_COEFFS),
                        grid=copy.deepcopy(ND_GRID))
        if scen and scen.get("dim", 1) == base["dim"]:
            base = _merge(base, scen)
        return cls(_merge(base, d))

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path!r}: {e}") from e
        return cls.from_dict(d)

    def resolved(self):
        """All settings with defaults materialised (a plain JSON-able dict)."""
        return copy.deepcopy(self.data)

    def dumps(self):
        return json.dumps(self.resolved(), indent=2, sort_keys=True)

    def replace(self, **sections):
        """Copy with some top-level sections updated (dicts are merged)."""
        return ExperimentConfig.from_dict(_merge(self.resolved(), sections))

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.resolved() == other.resolved()

    __hash__ = None

    def __getitem__(self, key):
        return self.data[key]

    # ------------------------------------------------------------- validate

    def _validate(self):
        d = self.data
        if d["pipeline"] not in PIPELINES:
            raise ConfigError(f"pipeline must be one of {PIPELINES}, got {d['pipeline']!r}")
        if d["dim"] not in (1, 2):
            raise ConfigError("dim must be 1 or 2")
        if d["output"]["format"] not in FORMATS:
            raise ConfigError(f"output format must be one of {FORMATS}")
        try:
            self.noise = self._noise()
            self.coeffs = self._coeffs()
            self.grid = self._grid()
        except ConfigError:
            raise
        except (LevyFPError, KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"invalid config: {e}") from e
        # materialise defaults filled in by the domain objects
        d["noise"] = self.noise.to_dict()
        d["coefficients"] = self.coeffs.to_dict()
        if d["pipeline"] in SOLVER_PIPELINES:
            self.noise.require_admissible(f"pipeline {d['pipeline']!r}")
        t = d["time"]
        _num(t, "t_final", lo=0.0)
        if t["t_final"] <= 0:
            raise ConfigError("time.t_final must be positive")
        _num(t, "dt", lo=0.0)
        if t["dt"] <= 0:
            raise ConfigError("time.dt must be positive")
        _num(t, "pde_dt", lo=0.0, allow_none=True)
        for c in t["checkpoints"]:
            if not isinstance(c, (int, float)) or not 0 <= c <= t["t_final"]:
                raise ConfigError(f"checkpoint {c!r} outside [0, t_final]")
        mc = d["mc"]
        _num(mc, "n_particles", lo=1, integer=True)
        _num(mc, "seed", lo=0, integer=True)
        _num(mc, "workers", lo=1, integer=True)
        _num(mc, "escape_budget", lo=0.0, hi=1.0)
        if mc["smoothing"] not in (None, "silverman") and not isinstance(mc["smoothing"], (int, float)):
            raise ConfigError("mc.smoothing must be null, 'silverman' or a bandwidth")
        cu = d["cumulants"]
        _num(cu, "k_min", lo=0.0)
        _num(cu, "k_max", lo=0.0)
        if not cu["k_max"] > cu["k_min"] > 0:
            raise ConfigError("cumulants needs 0 < k_min < k_max")
        _num(cu, "n_k", lo=1, integer=True)
        _num(cu, "n_lags", lo=1, integer=True)
        _num(cu, "min_samples", lo=1, integer=True)
        be = cu["bin_edges"]
        if be is not None and not (isinstance(be, list) and len(be) == 3 and be[1] > be[0] and int(be[2]) >= 2):
            raise ConfigError("cumulants.bin_edges must be null or [lo, hi, count]")
        cmp_ = d["compare"]
        _num(cmp_, "l1_factor", lo=0.0)
        for key in ("l1_tol", "ks_tol"):
            _num(cmp_, key, lo=0.0, allow_none=True)
        for key in ("alpha_tol", "c1_tol", "radial_tol", "embedding_tol"):
            _num(cmp_, key, lo=0.0)
        if not isinstance(cmp_["embedding"], bool):
            raise ConfigError("compare.embedding must be true or false")
        cv = d["converge"]
        if cv["axis"] not in ("dt", "h", "N"):
            raise ConfigError("converge.axis must be 'dt', 'h' or 'N'")
        if len(cv["levels"]) < 3:
            raise ConfigError("converge needs at least 3 levels")
        _num(cv, "noise_tol", lo=0.0)
        _num(cv, "min_order", lo=0.0)
        ini = d["initial"]
        if ini.get("kind") not in INITIAL_KINDS:
            raise ConfigError(f"initial.kind must be one of {INITIAL_KINDS}")
        if ini["kind"] == "propagated" and d["pipeline"] not in ("solve", "solve-nd"):
            raise ConfigError("initial kind 'propagated' is only available to the PDE pipelines")
        if d["pipeline"] in ("solve", "compare", "converge") and d["dim"] != 1:
            raise ConfigError(f"pipeline {d['pipeline']!r} is 1-D; use 'solve-nd' for dim 2")
        if d["pipeline"] == "solve-nd" and d["dim"] != 2:
            raise ConfigError("pipeline 'solve-nd' needs dim 2")

    def _noise(self):
        n = self.data["noise"]
        if self.data["dim"] == 1:
            extra = set(n) - {"alpha", "beta", "gamma", "d_scale"}
            if extra:
                raise ConfigError(f"unknown noise keys {sorted(extra)}")
            return StableParams.from_dict(n)
        extra = set(n) - {"alpha", "measure", "gamma"}
        if extra:
            raise ConfigError(f"unknown noise keys {sorted(extra)}")
        return VectorNoise.from_dict({"alpha": n["alpha"], "measure": n["measure"], "gamma": n.get("gamma")})

    def _coeffs(self):
        c = self.data["coefficients"]
        if self.data["dim"] == 1:
            return CoefficientField.from_dict(c)
        return CoefficientFieldND.from_dict(c, 2)

    def _grid(self):
        g = self.data["grid"]
        if self.data["dim"] == 1:
            return Grid1D(float(g["half_width"]), int(g["n"]))
        return GridND(tuple(g["half_width"]), tuple(g["n"]))
