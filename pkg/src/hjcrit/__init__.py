"""Numerical laboratory for diffusion with critical gradient absorption.

The package integrates the equation du/dt - lap u + |grad u|^q = 0 at the
critical exponent q = (N+2)/(N+1) in physical and in similarity variables,
reduces the long-time dynamics to a scalar mass law, and checks the
logarithmically corrected decay against its predicted universal amplitude.
"""
from ._version import __version__
from .fields import (
    Grid,
    ScalarField,
    WeightParams,
    build_grid,
    field_from_function,
    fokker_planck,
    gradient,
    h1m_norm,
    integrate,
    laplacian,
    lp_norm,
    weighted_l2_norm,
)
from .gaussian import (
    CriticalConstants,
    asymptotic_amplitude,
    critical_constants,
    critical_exponent,
    gaussian_gradient_norm,
    gaussian_profile,
    gradient_power_integral,
    heat_kernel,
    hermite_mode,
)
from .similarity import (
    BlowupError,
    DiagnosticsRecord,
    InvariantViolation,
    ProbeInconclusive,
    SimilarityState,
    SolverConfig,
    Trajectory,
    TruncationParams,
    default_dt,
    default_record_every,
    default_weight,
    energy_monitor,
    evolve,
    manifold_remainder,
    mass_dissipation_residual,
    omega_ratio,
    smooth_cutoff,
)
from .physical import (
    L1LimitResult,
    PhysicalState,
    PhysicalTrajectory,
    continuation_exponent,
    decay_law_error,
    evolve_physical,
    from_similarity,
    l1_limit_probe,
    rhs_physical,
    to_similarity,
)
from .reduced import asymptote_deviation, exact_mass, integrate_mass_ode, ode_rhs
from .spectral import (
    SpectralProbeResult,
    eigenmode_residual,
    expected_decay_rate,
    project_gaussian,
    project_mean_zero,
    semigroup_decay_rate,
    spectral_bound,
)
from .config import ConfigError, ExperimentConfig, parse_config
from .experiments import RunManifest, gaussian_plus_moment, run_experiment

__all__ = [
    "__version__",
    "Grid",
    "ScalarField",
    "WeightParams",
    "build_grid",
    "field_from_function",
    "gradient",
    "laplacian",
    "fokker_planck",
    "integrate",
    "lp_norm",
    "weighted_l2_norm",
    "h1m_norm",
    "CriticalConstants",
    "critical_exponent",
    "critical_constants",
    "gaussian_profile",
    "heat_kernel",
    "hermite_mode",
    "gradient_power_integral",
    "gaussian_gradient_norm",
    "asymptotic_amplitude",
    "BlowupError",
    "InvariantViolation",
    "ProbeInconclusive",
    "SimilarityState",
    "SolverConfig",
    "TruncationParams",
    "DiagnosticsRecord",
    "Trajectory",
    "default_dt",
    "default_record_every",
    "default_weight",
    "smooth_cutoff",
    "evolve",
    "mass_dissipation_residual",
    "energy_monitor",
    "omega_ratio",
    "manifold_remainder",
    "PhysicalState",
    "PhysicalTrajectory",
    "L1LimitResult",
    "rhs_physical",
    "evolve_physical",
    "to_similarity",
    "from_similarity",
    "decay_law_error",
    "continuation_exponent",
    "l1_limit_probe",
    "ode_rhs",
    "exact_mass",
    "integrate_mass_ode",
    "asymptote_deviation",
    "SpectralProbeResult",
    "project_gaussian",
    "project_mean_zero",
    "eigenmode_residual",
    "spectral_bound",
    "expected_decay_rate",
    "semigroup_decay_rate",
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "RunManifest",
    "gaussian_plus_moment",
    "run_experiment",
]
