"""Spectral structure of the drift-diffusion generator.

The generator has discrete eigenvalues 0, -1/2, -1, ... with the Gaussian
profile spanning the kernel, plus essential spectrum confined to
Re z <= N/4 - m/2 in the weighted space.  The spectral projection onto the
kernel is mass times the Gaussian (the dual eigenfunction is the constant
function), so the complement is the mean-zero part; under the linear flow
that part decays at the rate of the lowest mode it overlaps, which these
helpers predict from polynomial moments and measure from trajectories.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import (
    Grid,
    ScalarField,
    WeightParams,
    fokker_planck_array,
    integrate_array,
    weighted_l2_norm,
)
from .gaussian import gaussian_profile, hermite_mode
from .similarity import (
    ProbeInconclusive,
    SolverConfig,
    Trajectory,
    default_dt,
    default_weight,
    evolve,
)

__all__ = [
    "SpectralProbeResult",
    "project_gaussian",
    "project_mean_zero",
    "eigenmode_residual",
    "spectral_bound",
    "expected_decay_rate",
    "mean_zero_decay_history",
    "decay_rate_fit",
    "semigroup_decay_rate",
]

QUADRATURE_FLOOR = 1e-12

_MODE_LABELS = {0: "gaussian", 1: "first_moment", 2: "second_moment"}


@dataclass(frozen=True)
class SpectralProbeResult:
    """Outcome of one spectral measurement.

    applicable=False means the probed component was below the quadrature
    floor from the start, so there was no decay to fit and the rates are
    placeholders.
    """

    mode_label: str
    measured_rate: float
    expected_rate: float
    residual: float
    weight_m: float | None = None
    applicable: bool = True


def project_gaussian(field: ScalarField) -> ScalarField:
    """Kernel part of the field: (integral of v) times the Gaussian profile."""
    mass = integrate_array(field.values, field.grid)
    return ScalarField(field.grid, mass * gaussian_profile(field.grid).values)


def project_mean_zero(field: ScalarField) -> ScalarField:
    """Complementary part: v minus its mass times the Gaussian profile."""
    mass = integrate_array(field.values, field.grid)
    return ScalarField(field.grid, field.values - mass * gaussian_profile(field.grid).values)


def spectral_bound(m: float, dim: int) -> float:
    """Essential-spectrum bound N/4 - m/2, negative whenever m > N/2."""
    if not m > dim / 2:
        raise ValueError(f"weight exponent must exceed dim/2 = {dim / 2}, got {m}")
    return dim / 4.0 - m / 2.0


def eigenmode_residual(grid: Grid, k: int) -> SpectralProbeResult:
    """How well the k-th Hermite-type mode solves L phi = -(k/2) phi on the grid.

    residual is the relative sup norm of L_h phi + (k/2) phi; measured_rate is
    the (negated) Rayleigh quotient of the discrete operator on the mode, a
    quadrature-level estimate of k/2.  Both shrink as O(h^2).
    """
    phi = hermite_mode(grid, k)
    applied = fokker_planck_array(phi.values, grid)
    sup = float(np.max(np.abs(phi.values)))
    residual = float(np.max(np.abs(applied + 0.5 * k * phi.values))) / sup
    rayleigh = integrate_array(phi.values * applied, grid) / integrate_array(
        phi.values * phi.values, grid
    )
    return SpectralProbeResult(
        mode_label=_MODE_LABELS[k],
        measured_rate=-rayleigh,
        expected_rate=0.5 * k,
        residual=residual,
    )


def expected_decay_rate(
    field: ScalarField,
    weight: WeightParams | None = None,
    tol: float = 1e-9,
    floor: float = QUADRATURE_FLOOR,
) -> float:
    """Predicted linear-flow decay rate of the mean-zero part from its moments.

    0.5 if any first moment of w = v - M G exceeds tol, else 1.0 if any
    second central moment (xi_a^2 - 2, and xi_1 xi_2 in dimension two) does,
    else NaN.  Also NaN when |w|_m is below floor, meaning there is nothing
    to decay.
    """
    grid = field.grid
    if weight is None:
        weight = default_weight(grid.dim)
    w = project_mean_zero(field)
    if weighted_l2_norm(w, weight) <= floor:
        return float("nan")
    moments = [integrate_array(xi * w.values, grid) for xi in grid.coords]
    if max(abs(mom) for mom in moments) > tol:
        return 0.5
    moments = [integrate_array((xi * xi - 2.0) * w.values, grid) for xi in grid.coords]
    if grid.dim == 2:
        moments.append(integrate_array(grid.coords[0] * grid.coords[1] * w.values, grid))
    if max(abs(mom) for mom in moments) > tol:
        return 1.0
    return float("nan")


def mean_zero_decay_history(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Weighted L2 norm of the mean-zero part at each stored snapshot."""
    if not traj.snapshots:
        raise ValueError("trajectory has no stored snapshots")
    taus = np.array([s.tau for s in traj.snapshots])
    norms = np.array(
        [
            weighted_l2_norm(project_mean_zero(s.field), traj.weight)
            for s in traj.snapshots
        ]
    )
    return taus, norms


def decay_rate_fit(taus: np.ndarray, norms: np.ndarray) -> tuple[float, float]:
    """Least-squares exponential decay rate of norms against taus.

    Returns (rate, residual): rate is minus the slope of the log-linear fit,
    residual the rms misfit of log(norm).
    """
    taus = np.asarray(taus, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if taus.shape != norms.shape or taus.ndim != 1 or taus.size < 2:
        raise ValueError("need matching 1-d arrays with at least 2 samples")
    if np.any(np.diff(taus) <= 0):
        raise ValueError("taus must be strictly increasing")
    if np.any(norms <= 0):
        raise ValueError("norms must be positive to fit a log-linear decay")
    logs = np.log(norms)
    slope, intercept = np.polyfit(taus, logs, 1)
    rms = float(np.sqrt(np.mean((logs - (slope * taus + intercept)) ** 2)))
    return float(-slope), rms


def semigroup_decay_rate(
    w0: ScalarField,
    weight: WeightParams | None = None,
    tau_window: tuple[float, float] = (1.0, 6.0),
    dt: float | None = None,
) -> SpectralProbeResult:
    """Measure the linear-flow decay rate of the mean-zero part of w0.

    Evolves w0 under d v/d tau = L v, samples |Q0 v|_m at unit tau spacing
    inside tau_window, and fits a log-linear decay.  If the mean-zero part of
    w0 starts below the quadrature floor the probe is not applicable (nothing
    decays); if a sampled norm falls to the floor inside the window the fit
    would chase round-off and ProbeInconclusive is raised.
    """
    grid = w0.grid
    if weight is None:
        weight = default_weight(grid.dim)
    lo, hi = tau_window
    if not 0 <= lo < hi:
        raise ValueError(f"need 0 <= lo < hi in tau_window, got {tau_window}")
    if weighted_l2_norm(project_mean_zero(w0), weight) <= QUADRATURE_FLOOR:
        return SpectralProbeResult(
            mode_label="kernel",
            measured_rate=0.0,
            expected_rate=0.0,
            residual=0.0,
            weight_m=weight.m,
            applicable=False,
        )
    expected = expected_decay_rate(w0, weight)
    if dt is None:
        dt = default_dt(grid)
    # snap dt so integer taus are hit exactly and sampled once per unit
    steps_per_unit = int(math.ceil(1.0 / dt))
    dt = 1.0 / steps_per_unit
    cfg = SolverConfig(
        dt=dt,
        tau_end=hi,
        scheme="explicit_rk4",
        record_every=steps_per_unit,
        nonlinearity="off",
    )
    traj = evolve(w0, cfg, weight=weight, store_snapshots=True)
    taus, norms = mean_zero_decay_history(traj)
    keep = (taus >= lo - 1e-9) & (taus <= hi + 1e-9)
    taus, norms = taus[keep], norms[keep]
    if taus.size < 2:
        raise ProbeInconclusive(f"window {tau_window} contains {taus.size} samples")
    if np.any(norms <= QUADRATURE_FLOOR):
        raise ProbeInconclusive(
            "mean-zero norm hit the quadrature floor inside the fit window"
        )
    rate, rms = decay_rate_fit(taus, norms)
    label = {0.5: "first_moment", 1.0: "second_moment"}.get(expected, "mean_zero")
    return SpectralProbeResult(
        mode_label=label,
        measured_rate=rate,
        expected_rate=expected,
        residual=rms,
        weight_m=weight.m,
    )
