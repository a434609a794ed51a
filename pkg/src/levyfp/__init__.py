"""Stable-noise Langevin dynamics: Monte Carlo paths, fractional Fokker-Planck solvers, cumulant estimation.

Modules
-------
stable_noise     parameters, characteristic exponent, sampler, density oracle
sde_montecarlo   Euler-Maruyama ensembles and histogram densities
cumulant_lab     empirical increment cumulants, symbol fits, Kramers-Moyal map
ffpe_solver_1d   pseudo-spectral scalar solver and exact propagator
ffpe_solver_nd   d-dimensional solver with isotropic or discrete spectral measures
harness          configs, scenarios, comparison reports and the ``levyfp`` CLI
"""

from .coefficients import CoefficientField, CoefficientFieldND, FieldSpec, TensorField, VectorFieldSpec
from .cumulant_lab import (
    CumulantEstimate,
    KramersMoyal,
    StableFit,
    cumulants_from_km,
    empirical_delta_K,
    fit_stable_symbol,
    km_from_cumulants,
)
from .errors import (
    ConfigError,
    DomainError,
    EstimationError,
    LevyFPError,
    NotAdmissibleError,
    ParameterError,
    PositivityError,
    RefinementError,
    SimulationError,
    StabilityError,
    StepError,
)
from .ffpe_solver_1d import GeneratorSymbol, apply_generator, exact_linear_propagator, solve
from .ffpe_solver_nd import GeneratorSymbolND, apply_generator_nd, exact_propagator_nd, solve_nd
from .grid import DensityField, Grid1D, GridND, gaussian_density, point_mass
from .sde_montecarlo import Ensemble, HistogramDensity, density_estimate, em_step, simulate
from .spectral_measure import SpectralMeasure, VectorNoise, directional_symbol
from .stable_noise import StableParams, char_exponent, sample_increments, stable_density_oracle

__version__ = "0.1.0"
