"""Rescaled absorption flow d v/d tau = L v - |grad v|^q at the critical exponent.

L is the drift-diffusion generator (laplacian + xi/2 . grad + N/2), whose
kernel direction is the Gaussian profile G.  In these variables the heat part
is autonomous and the late-time mass obeys d M/d tau = -c M^q up to a
correction that the diagnostics track record by record.

Three nonlinearity modes: "full" (the equation above), "truncated" (the
absorption is multiplied by a smooth cutoff in the weighted H1 norm of the
state, which freezes the flow to the linear one outside a ball), and "off"
(linear flow, used for spectral probes).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import _stepping
from .fields import (
    Grid,
    ScalarField,
    WeightParams,
    gradient_arrays,
    gradient_magnitude_sq_array,
    integrate_array,
    laplacian_array,
)
from .gaussian import CriticalConstants, critical_constants, gaussian_profile

__all__ = [
    "BlowupError",
    "InvariantViolation",
    "ProbeInconclusive",
    "SimilarityState",
    "TruncationParams",
    "SolverConfig",
    "DiagnosticsRecord",
    "Trajectory",
    "smooth_cutoff",
    "default_dt",
    "default_record_every",
    "default_weight",
    "rhs",
    "step",
    "evolve",
    "omega_ratio",
    "manifold_remainder",
    "mass_dissipation_residual",
    "energy_monitor",
]

NONLINEARITY_MODES = ("full", "truncated", "off")


class BlowupError(RuntimeError):
    """The discrete flow left the stability regime (values blew up or went NaN)."""


class InvariantViolation(RuntimeError):
    """A monitored run invariant (mass monotonicity, positivity) failed."""


class ProbeInconclusive(RuntimeError):
    """A fitting probe could not produce a stable answer (horizon or floor)."""


@dataclass(frozen=True)
class SimilarityState:
    """Field on the similarity grid at rescaled time tau = log(1 + t)."""

    tau: float
    field: ScalarField


@dataclass(frozen=True)
class TruncationParams:
    """Cutoff radius rho (in (0, 1)) and the weighted norm it is measured in."""

    rho: float
    weight: WeightParams

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping parameters.

    tau_end is the absolute end of the run clock (tau for rescaled runs, t for
    physical ones).  record_every counts steps between diagnostic records.
    """

    dt: float
    tau_end: float
    scheme: str = "explicit_rk4"
    record_every: int = 1
    nonlinearity: str = "full"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.tau_end > 0:
            raise ValueError(f"tau_end must be positive, got {self.tau_end}")
        if self.scheme not in _stepping.SCHEMES:
            raise ValueError(f"scheme must be one of {_stepping.SCHEMES}, got {self.scheme!r}")
        if self.nonlinearity not in NONLINEARITY_MODES:
            raise ValueError(
                f"nonlinearity must be one of {NONLINEARITY_MODES}, got {self.nonlinearity!r}"
            )
        if not isinstance(self.record_every, (int, np.integer)) or self.record_every < 1:
            raise ValueError(f"record_every must be a positive integer, got {self.record_every!r}")


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Per-record scalar diagnostics of a rescaled run.

    dissipation is the flow-effective absorption integral (cutoff-weighted in
    truncated mode, zero for the linear flow) so the mass identity
    d mass/d tau = -dissipation holds for every mode.  omega_ratio always uses
    the plain integral of |grad v|^q.
    """

    tau: float
    mass: float
    l1: float
    l2: float
    linf: float
    h1m: float
    dissipation: float
    omega_ratio: float
    manifold_remainder: float
    rescaled_mass: float


@dataclass
class Trajectory:
    """Records (and optionally snapshots) of one run, aligned index by index."""

    grid: Grid
    weight: WeightParams
    config: SolverConfig
    records: list[DiagnosticsRecord] = dataclass_field(default_factory=list)
    snapshots: list[SimilarityState] = dataclass_field(default_factory=list)
    final: SimilarityState | None = None


def default_weight(dim: int) -> WeightParams:
    """Default weight exponent: the smallest integer m with m > dim/2."""
    return WeightParams(m=float(dim // 2 + 1), dim=dim)


def default_dt(grid: Grid) -> float:
    """Default explicit step h^2 / (6 dim), inside the h^2/(4 dim) stability bound."""
    return grid.spacing ** 2 / (6.0 * grid.dim)


def default_record_every(dt: float) -> int:
    """Records roughly 0.01 apart in tau, never closer than 10 steps."""
    return max(10, int(math.ceil(0.01 / dt)))


def smooth_cutoff(r, rho: float):
    """C^2 cutoff: 1 for r <= rho^2, 0 for r >= 4 rho^2, quintic bridge between.

    The bridge is the smoothstep polynomial in s = (r / rho^2 - 1) / 3, so the
    function is monotone nonincreasing and twice continuously differentiable.
    """
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    s = (np.asarray(r, dtype=float) / (rho * rho) - 1.0) / 3.0
    s = np.clip(s, 0.0, 1.0)
    out = 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    if np.ndim(r) == 0:
        return float(out)
    return out


def _require_trunc(cfg: SolverConfig, trunc: TruncationParams | None) -> None:
    if cfg.nonlinearity == "truncated" and trunc is None:
        raise ValueError("nonlinearity='truncated' requires TruncationParams")


def _make_rest(
    grid: Grid,
    q: float,
    nonlinearity: str,
    trunc: TruncationParams | None,
):
    """Everything except the laplacian: drift + N/2 term - absorption."""
    half_dim = 0.5 * grid.dim
    coords = grid.coords
    h = grid.spacing
    if nonlinearity == "truncated":
        wm = trunc.weight.values_on(grid)
        rho = trunc.rho

    def rest(tau: float, v: np.ndarray) -> np.ndarray:
        parts = gradient_arrays(v, h)
        out = half_dim * v
        for xi, g in zip(coords, parts):
            out += (0.5 * xi) * g
        if nonlinearity == "off":
            return out
        gsq = parts[0] * parts[0]
        for g in parts[1:]:
            gsq += g * g
        absorption = gsq ** (q / 2.0)
        if nonlinearity == "truncated":
            norm_sq = integrate_array(wm * v * v, grid) + integrate_array(wm * gsq, grid)
            out -= smooth_cutoff(norm_sq, rho) * absorption
        else:
            out -= absorption
        return out

    return rest


def rhs(
    state: SimilarityState,
    cfg: SolverConfig,
    trunc: TruncationParams | None = None,
) -> ScalarField:
    """Right-hand side L v - (cutoff) |grad v|^q for the configured mode."""
    _require_trunc(cfg, trunc)
    grid = state.field.grid
    q = critical_constants(grid.dim).exponent
    rest = _make_rest(grid, q, cfg.nonlinearity, trunc)
    vals = laplacian_array(state.field.values, grid.spacing) + rest(state.tau, state.field.values)
    return ScalarField(grid, vals)


def step(
    state: SimilarityState,
    cfg: SolverConfig,
    trunc: TruncationParams | None = None,
) -> SimilarityState:
    """One time step; boundary samples are pinned back to zero afterwards."""
    _require_trunc(cfg, trunc)
    grid = state.field.grid
    q = critical_constants(grid.dim).exponent
    rest = _make_rest(grid, q, cfg.nonlinearity, trunc)
    stepper = _stepping.make_stepper(grid, cfg.dt, cfg.scheme, rest)
    sup0 = float(np.max(np.abs(state.field.values)))
    out = stepper(state.tau, state.field.values)
    sup = np.max(np.abs(out))
    limit = 1e6 * sup0 if sup0 > 0 else 1.0
    if not sup <= limit:
        raise BlowupError(f"instability: sup grew to {sup:.3e} (limit {limit:.3e}) in one step")
    return SimilarityState(state.tau + cfg.dt, ScalarField(grid, out))


class _DiagnosticsContext:
    """Per-run cache of the arrays every record needs."""

    def __init__(self, grid: Grid, weight: WeightParams, constants: CriticalConstants):
        self.grid = grid
        self.weight_values = weight.values_on(grid)
        self.constants = constants
        self.gaussian_values = gaussian_profile(grid).values

    def record(
        self,
        tau: float,
        v: np.ndarray,
        nonlinearity: str,
        trunc: TruncationParams | None,
    ) -> DiagnosticsRecord:
        grid = self.grid
        q = self.constants.exponent
        mass = integrate_array(v, grid)
        l1 = integrate_array(np.abs(v), grid)
        l2 = math.sqrt(integrate_array(v * v, grid))
        linf = float(np.max(np.abs(v)))
        gsq = gradient_magnitude_sq_array(v, grid.spacing)
        wm = self.weight_values
        h1m_sq = integrate_array(wm * v * v, grid) + integrate_array(wm * gsq, grid)
        h1m = math.sqrt(h1m_sq)
        d_plain = integrate_array(gsq ** (q / 2.0), grid)
        if nonlinearity == "full":
            dissipation = d_plain
        elif nonlinearity == "truncated":
            dissipation = smooth_cutoff(h1m_sq, trunc.rho) * d_plain
        else:
            dissipation = 0.0
        omega = _omega_ratio_core(mass, l1, d_plain, self.constants)
        rem = _remainder_core(v, mass, self.gaussian_values, grid, wm)
        return DiagnosticsRecord(
            tau=tau,
            mass=mass,
            l1=l1,
            l2=l2,
            linf=linf,
            h1m=h1m,
            dissipation=dissipation,
            omega_ratio=omega,
            manifold_remainder=rem,
            rescaled_mass=tau ** (grid.dim + 1) * mass,
        )


def _omega_ratio_core(mass: float, l1: float, d_plain: float, constants: CriticalConstants) -> float:
    # The reference dissipation c M^q is meaningless for signed, near-zero-mass
    # data; report NaN there instead of a huge ratio.
    if mass <= 0.0 or mass < 1e-8 * l1:
        return float("nan")
    reference = constants.dissipation_coeff * mass ** constants.exponent
    return (d_plain - reference) / reference


def _remainder_core(
    v: np.ndarray, mass: float, gaussian_values: np.ndarray, grid: Grid, weight_values: np.ndarray
) -> float:
    r = v - mass * gaussian_values
    gsq = gradient_magnitude_sq_array(r, grid.spacing)
    return math.sqrt(
        integrate_array(weight_values * r * r, grid)
        + integrate_array(weight_values * gsq, grid)
    )


def omega_ratio(state: SimilarityState | ScalarField, constants: CriticalConstants | None = None) -> float:
    """Relative excess of the absorption integral over its Gaussian-shape value.

    (D - c M^q) / (c M^q) with D the plain integral of |grad v|^q and M the
    mass of v.  Vanishes (to quadrature error) exactly on multiples of G.
    """
    f = state.field if isinstance(state, SimilarityState) else state
    grid = f.grid
    constants = constants or critical_constants(grid.dim)
    mass = integrate_array(f.values, grid)
    if mass <= 0.0:
        raise ValueError(f"omega_ratio needs positive mass, got {mass}")
    l1 = integrate_array(np.abs(f.values), grid)
    gsq = gradient_magnitude_sq_array(f.values, grid.spacing)
    d_plain = integrate_array(gsq ** (constants.exponent / 2.0), grid)
    return _omega_ratio_core(mass, l1, d_plain, constants)


def manifold_remainder(state: SimilarityState | ScalarField, weight: WeightParams) -> float:
    """Weighted H1 distance from the mass-matched Gaussian: |v - M_v G|_m."""
    f = state.field if isinstance(state, SimilarityState) else state
    mass = integrate_array(f.values, f.grid)
    return _remainder_core(f.values, mass, gaussian_profile(f.grid).values, f.grid, weight.values_on(f.grid))


def evolve(
    v0: ScalarField | SimilarityState,
    cfg: SolverConfig,
    trunc: TruncationParams | None = None,
    *,
    weight: WeightParams | None = None,
    constants: CriticalConstants | None = None,
    store_snapshots: bool = True,
) -> Trajectory:
    """Integrate the configured flow, recording diagnostics every record_every steps.

    Monitors along the run: instability (sup above 1e6 times the initial sup
    raises BlowupError), mass monotonicity within a 1e-9 per-step budget, and,
    for nonnegative initial data, near-positivity (min >= -1e-8 sup) at record
    times; monitor failures raise InvariantViolation.  A one-shot warning fires
    if boundary samples exceed 1e-10 times the sup.
    """
    if isinstance(v0, SimilarityState):
        tau0, start = v0.tau, v0.field
    else:
        tau0, start = 0.0, v0
    if not cfg.tau_end > tau0:
        raise ValueError(f"tau_end {cfg.tau_end} must exceed the initial tau {tau0}")
    _require_trunc(cfg, trunc)
    grid = start.grid
    constants = constants or critical_constants(grid.dim)
    if weight is None:
        weight = trunc.weight if trunc is not None else default_weight(grid.dim)
    ctx = _DiagnosticsContext(grid, weight, constants)
    rest = _make_rest(grid, constants.exponent, cfg.nonlinearity, trunc)
    stepper = _stepping.make_stepper(grid, cfg.dt, cfg.scheme, rest)

    v = start.values.copy()
    sup0 = float(np.max(np.abs(v)))
    limit = 1e6 * sup0 if sup0 > 0 else 1.0
    min0 = float(np.min(v))
    positivity_monitor = min0 >= -1e-8 * sup0

    traj = Trajectory(grid=grid, weight=weight, config=cfg, records=[], snapshots=[])
    boundary_warned = False
    last_mass = None
    last_record_step = 0

    def boundary_sup(values: np.ndarray) -> float:
        if grid.dim == 1:
            return max(abs(float(values[0])), abs(float(values[-1])))
        return float(
            max(
                np.max(np.abs(values[0, :])),
                np.max(np.abs(values[-1, :])),
                np.max(np.abs(values[:, 0])),
                np.max(np.abs(values[:, -1])),
            )
        )

    def take_record(tau: float, values: np.ndarray, step_index: int) -> None:
        nonlocal boundary_warned, last_mass, last_record_step
        rec = ctx.record(tau, values, cfg.nonlinearity, trunc)
        sup = rec.linf
        if not boundary_warned and sup > 0 and boundary_sup(values) > 1e-10 * sup:
            warnings.warn(
                f"boundary values exceed 1e-10 of the sup at tau={tau:.4g}; "
                "the box is too small for this state",
                stacklevel=2,
            )
            boundary_warned = True
        if positivity_monitor and sup > 0:
            mn = float(np.min(values))
            if mn < -1e-8 * sup:
                raise InvariantViolation(
                    f"positivity: min value {mn:.3e} below -1e-8 * sup at tau={tau:.4g}"
                )
        if last_mass is not None:
            budget = 1e-9 * max(1, step_index - last_record_step)
            if rec.mass > last_mass + budget:
                raise InvariantViolation(
                    f"mass monotonicity: {last_mass:.12e} -> {rec.mass:.12e} at tau={tau:.4g}"
                )
        last_mass = rec.mass
        last_record_step = step_index
        traj.records.append(rec)
        if store_snapshots:
            traj.snapshots.append(SimilarityState(tau, ScalarField(grid, values.copy())))

    take_record(tau0, v, 0)

    span = cfg.tau_end - tau0
    n_full = int(math.floor(span / cfg.dt * (1.0 + 1e-12)))
    tau = tau0
    for k in range(1, n_full + 1):
        v = stepper(tau, v)
        tau = tau0 + k * cfg.dt
        sup = np.max(np.abs(v))
        if not sup <= limit:
            raise BlowupError(
                f"instability at tau={tau:.4g}: sup {float(sup):.3e} exceeds 1e6 * initial sup"
            )
        if k % cfg.record_every == 0:
            take_record(tau, v, k)
    rem = cfg.tau_end - tau
    if rem > 1e-12 * max(1.0, cfg.tau_end):
        v = _stepping.make_stepper(grid, rem, cfg.scheme, rest)(tau, v)
        tau = cfg.tau_end
        n_full += 1
        take_record(tau, v, n_full)
    elif n_full % cfg.record_every != 0:
        take_record(tau, v, n_full)
    traj.final = SimilarityState(tau, ScalarField(grid, v))
    return traj


def _three_point_derivative(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Second-order derivative at interior nodes of a possibly nonuniform series."""
    a = x[1:-1] - x[:-2]
    b = x[2:] - x[1:-1]
    return (
        -b / (a * (a + b)) * y[:-2]
        + (b - a) / (a * b) * y[1:-1]
        + a / (b * (a + b)) * y[2:]
    )


def mass_dissipation_residual(traj: Trajectory) -> np.ndarray:
    """d mass/d tau + dissipation at interior records (central differences).

    For the full flow this residual is the discretization error of the mass
    identity; for the linear flow it reduces to d mass/d tau.
    """
    if len(traj.records) < 3:
        raise ValueError("need at least 3 records for the central difference")
    taus = np.array([r.tau for r in traj.records])
    masses = np.array([r.mass for r in traj.records])
    diss = np.array([r.dissipation for r in traj.records])
    return _three_point_derivative(taus, masses) + diss[1:-1]


def energy_monitor(traj: Trajectory) -> np.ndarray:
    """Slack of the energy inequality at interior records.

    slack = d/d tau (1/2 int v^2) + int |grad v|^2 - (N/4) int v^2, computed
    with central time differences over stored snapshots.  Zero (to scheme
    error) for the linear flow, nonpositive for the full flow on nonnegative
    data.
    """
    if len(traj.snapshots) < 3:
        raise ValueError("need at least 3 records with stored snapshots")
    if len(traj.snapshots) != len(traj.records):
        raise ValueError("snapshots and records are not aligned")
    grid = traj.grid
    taus = np.array([s.tau for s in traj.snapshots])
    energy = np.empty(len(traj.snapshots))
    grad_sq = np.empty(len(traj.snapshots))
    for i, snap in enumerate(traj.snapshots):
        v = snap.field.values
        energy[i] = integrate_array(v * v, grid)
        grad_sq[i] = integrate_array(gradient_magnitude_sq_array(v, grid.spacing), grid)
    return (
        0.5 * _three_point_derivative(taus, energy)
        + grad_sq[1:-1]
        - 0.25 * grid.dim * energy[1:-1]
    )
