"""Named experiments: initial data, dispatch, CSV time series, run manifest.

Every experiment writes one CSV with the fixed column set below (columns an
experiment does not produce stay empty) plus a plain-text manifest echoing
the effective configuration and the derived critical constants.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._version import __version__
from .config import ConfigError, ExperimentConfig
from .fields import Grid, ScalarField, WeightParams, build_grid, integrate
from .gaussian import critical_constants, gaussian_profile, hermite_mode
from .physical import PhysicalTrajectory, evolve_physical, l1_limit_probe
from .reduced import integrate_mass_ode
from .similarity import (
    SolverConfig,
    Trajectory,
    TruncationParams,
    evolve,
)
from .spectral import semigroup_decay_rate

__all__ = [
    "CSV_COLUMNS",
    "RunManifest",
    "build_initial_data",
    "gaussian_plus_moment",
    "write_csv",
    "run_experiment",
]

CSV_COLUMNS = (
    "tau",
    "t",
    "mass",
    "l1",
    "l2",
    "linf",
    "h1m",
    "dissipation",
    "omega_ratio",
    "manifold_remainder",
    "rescaled_mass",
)


def gaussian_plus_moment(grid: Grid, epsilon: float) -> ScalarField:
    """G plus epsilon times the first moment mode (the derivative of G)."""
    base = gaussian_profile(grid)
    mode = hermite_mode(grid, 1)
    return ScalarField(grid, base.values + epsilon * mode.values)


def _load_field(grid: Grid, path: str) -> ScalarField:
    if path.endswith(".npy"):
        values = np.load(path)
    else:
        values = np.loadtxt(path)
    values = np.asarray(values, dtype=float)
    needed = grid.points_per_axis ** grid.dim
    if values.size != needed:
        raise ConfigError(
            f"initial_data.path: file holds {values.size} samples, grid needs {needed}"
        )
    return ScalarField(grid, values.reshape(grid.shape))


def build_initial_data(cfg: ExperimentConfig, grid: Grid) -> ScalarField:
    if cfg.initial_kind == "gaussian":
        return gaussian_profile(grid)
    if cfg.initial_kind == "scaled_gaussian":
        base = gaussian_profile(grid)
        return ScalarField(grid, cfg.initial_alpha * base.values)
    if cfg.initial_kind == "gaussian_plus_moment":
        return gaussian_plus_moment(grid, cfg.initial_epsilon)
    return _load_field(grid, cfg.initial_path)


def _cell(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.17g}"


def write_csv(path: str | Path, rows: list[dict]) -> None:
    """Serialize rows (column -> value or None) with the fixed schema, LF endings."""
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_cell(row.get(col)) for col in CSV_COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def _similarity_rows(traj: Trajectory) -> list[dict]:
    rows = []
    for r in traj.records:
        rows.append(
            {
                "tau": r.tau,
                "t": math.expm1(r.tau),
                "mass": r.mass,
                "l1": r.l1,
                "l2": r.l2,
                "linf": r.linf,
                "h1m": r.h1m,
                "dissipation": r.dissipation,
                "omega_ratio": r.omega_ratio,
                "manifold_remainder": r.manifold_remainder,
                "rescaled_mass": r.rescaled_mass,
            }
        )
    return rows


def _physical_rows(traj: PhysicalTrajectory) -> list[dict]:
    rows = []
    for r in traj.records:
        rows.append(
            {
                "tau": math.log1p(r.t),
                "t": r.t,
                "mass": r.mass,
                "l1": r.l1,
                "l2": r.l2,
                "linf": r.linf,
            }
        )
    return rows


@dataclass
class RunManifest:
    """Effective configuration, derived constants, and run metadata."""

    config: ExperimentConfig
    wall_clock_seconds: float
    extras: dict

    def to_text(self) -> str:
        cfg = self.config
        constants = critical_constants(cfg.dim)
        end_key = "t_end" if cfg.experiment == "physical_run" else "tau_end"
        lines = [
            f"version: hjcrit-{__version__}",
            f"experiment: {cfg.experiment}",
            f"dim: {cfg.dim}",
            f"q: {cfg.q:.17g}",
            f"use_q_star: {str(cfg.use_q_star).lower()}",
            f"grid.L: {cfg.half_width:.17g}",
            f"grid.n: {cfg.points}",
            f"solver.scheme: {cfg.scheme}",
            f"solver.dt: {cfg.dt:.17g}",
            f"solver.{end_key}: {cfg.end_time:.17g}",
            f"solver.record_every: {cfg.record_every}",
            f"truncation.enabled: {str(cfg.truncation_enabled).lower()}",
            f"truncation.rho: {cfg.rho:.17g}",
            f"truncation.m: {cfg.weight_m:.17g}",
            f"initial_data.kind: {cfg.initial_kind}",
            f"output.csv_path: {cfg.csv_path}",
            f"q_star: {constants.exponent:.17g}",
            f"grad_G_norm: {constants.grad_norm:.17g}",
            f"c_mass: {constants.dissipation_coeff:.17g}",
            f"m_star: {constants.amplitude:.17g}",
            f"defaults_applied: {'; '.join(cfg.defaults_applied) or 'none'}",
            f"wall_clock_seconds: {self.wall_clock_seconds:.3f}",
        ]
        if cfg.initial_kind == "scaled_gaussian":
            lines.insert(15, f"initial_data.alpha: {cfg.initial_alpha:.17g}")
        elif cfg.initial_kind == "gaussian_plus_moment":
            lines.insert(15, f"initial_data.epsilon: {cfg.initial_epsilon:.17g}")
        elif cfg.initial_kind == "from_file":
            lines.insert(15, f"initial_data.path: {cfg.initial_path}")
        if cfg.svg_path is not None:
            lines.append(f"output.svg_path: {cfg.svg_path}")
        for key, value in self.extras.items():
            lines.append(f"{key}: {value}")
        return "\n".join(lines) + "\n"


def _run_similarity(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    grid = build_grid(cfg.dim, cfg.half_width, cfg.points)
    v0 = build_initial_data(cfg, grid)
    weight = WeightParams(cfg.weight_m, cfg.dim)
    trunc = TruncationParams(cfg.rho, weight) if cfg.truncation_enabled else None
    solver = SolverConfig(
        dt=cfg.dt,
        tau_end=cfg.end_time,
        scheme=cfg.scheme,
        record_every=cfg.record_every,
        nonlinearity="truncated" if cfg.truncation_enabled else "full",
    )
    traj = evolve(v0, solver, trunc, weight=weight, store_snapshots=False)
    return _similarity_rows(traj), {}


def _run_physical(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    grid = build_grid(cfg.dim, cfg.half_width, cfg.points)
    u0 = build_initial_data(cfg, grid)
    solver = SolverConfig(
        dt=cfg.dt,
        tau_end=cfg.end_time,
        scheme=cfg.scheme,
        record_every=cfg.record_every,
        nonlinearity="full",
    )
    traj = evolve_physical(u0, cfg.q, cfg.end_time, solver)
    return _physical_rows(traj), {}


def _run_reduced(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    if not cfg.use_q_star:
        raise ConfigError("reduced_ode integrates the critical-exponent law; drop the q key")
    grid = build_grid(cfg.dim, cfg.half_width, cfg.points)
    m0 = integrate(build_initial_data(cfg, grid))
    constants = critical_constants(cfg.dim)
    taus, masses = integrate_mass_ode(
        m0, constants.dissipation_coeff, cfg.end_time, cfg.dt, cfg.dim
    )
    keep = list(range(0, taus.size, cfg.record_every))
    if keep[-1] != taus.size - 1:
        keep.append(taus.size - 1)
    rows = [
        {"tau": taus[i], "t": math.expm1(taus[i]), "mass": masses[i]}
        for i in keep
    ]
    return rows, {"initial_mass": f"{m0:.17g}"}


def _run_dichotomy(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    grid = build_grid(cfg.dim, cfg.half_width, cfg.points)
    u0 = build_initial_data(cfg, grid)
    result = l1_limit_probe(u0, cfg.q, cfg.end_time, t_switch=cfg.t_switch)
    rows = [
        {"tau": tau, "t": math.expm1(tau), "l1": l1}
        for tau, l1 in zip(result.taus, result.l1)
    ]
    extras = {
        "plateau_estimate": f"{result.plateau_estimate:.17g}",
        "decaying": str(result.decaying).lower(),
        "tail_slope": f"{result.slope:.17g}",
        "switch_tau": f"{result.switch_tau:.17g}",
    }
    return rows, extras


def _run_spectral(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    grid = build_grid(cfg.dim, cfg.half_width, cfg.points)
    w0 = build_initial_data(cfg, grid)
    weight = WeightParams(cfg.weight_m, cfg.dim)
    solver = SolverConfig(
        dt=cfg.dt,
        tau_end=cfg.end_time,
        scheme=cfg.scheme,
        record_every=cfg.record_every,
        nonlinearity="off",
    )
    traj = evolve(w0, solver, weight=weight, store_snapshots=False)
    probe = semigroup_decay_rate(w0, weight, tau_window=(1.0, cfg.end_time))
    extras = {
        "mode_label": probe.mode_label,
        "measured_rate": f"{probe.measured_rate:.17g}",
        "expected_rate": f"{probe.expected_rate:.17g}",
        "fit_residual": f"{probe.residual:.17g}",
        "applicable": str(probe.applicable).lower(),
    }
    return _similarity_rows(traj), extras


_DISPATCH = {
    "similarity_run": _run_similarity,
    "physical_run": _run_physical,
    "reduced_ode": _run_reduced,
    "dichotomy_probe": _run_dichotomy,
    "spectral_probe": _run_spectral,
}


def run_experiment(cfg: ExperimentConfig) -> RunManifest:
    """Execute the configured experiment and write CSV + manifest (+ SVG).

    The verify experiment is handled by the CLI, which owns its reporting.
    """
    if cfg.experiment == "verify":
        raise ConfigError("run the acceptance suite through the verify subcommand")
    started = time.monotonic()
    rows, extras = _DISPATCH[cfg.experiment](cfg)
    write_csv(cfg.csv_path, rows)
    if cfg.svg_path is not None:
        from .plotting import emit_plot

        emit_plot(
            cfg.csv_path,
            list(cfg.svg_columns),
            log_scale=cfg.svg_log,
            out_path=cfg.svg_path,
            dim=cfg.dim,
        )
    manifest = RunManifest(
        config=cfg,
        wall_clock_seconds=time.monotonic() - started,
        extras=extras,
    )
    Path(str(cfg.csv_path) + ".manifest").write_text(manifest.to_text(), newline="\n")
    return manifest
