"""Original-variable integration of d u/dt = lap u - |grad u|^q and the decay law.

Physical-space runs are short-horizon by design (the support grows like
sqrt(t), so the box would have to grow with it); every large-time question is
forwarded to similarity variables.  This module owns the change of variables
u(t, x) = (1+t)^(-N/2) v(ln(1+t), x/sqrt(1+t)), the decay-law error
functional, and the L1 dichotomy probe that distinguishes sub- and
supercritical absorption.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import _stepping
from .fields import (
    Grid,
    ScalarField,
    build_grid,
    gradient_arrays,
    gradient_magnitude_sq_array,
    integrate_array,
    laplacian_array,
    lp_norm,
)
from .gaussian import CriticalConstants, critical_constants, critical_exponent, heat_kernel
from .similarity import (
    BlowupError,
    InvariantViolation,
    ProbeInconclusive,
    SimilarityState,
    SolverConfig,
    default_dt,
    default_record_every,
)

__all__ = [
    "PhysicalState",
    "PhysicalRecord",
    "PhysicalTrajectory",
    "L1LimitResult",
    "rhs_physical",
    "evolve_physical",
    "to_similarity",
    "from_similarity",
    "decay_law_error",
    "continuation_exponent",
    "l1_limit_probe",
]

FLAT_SLOPE_THRESHOLD = 1e-3
MIN_FIT_SAMPLES = 8


@dataclass(frozen=True)
class PhysicalState:
    """Field u(t, .) on a physical-space grid with its absorption exponent."""

    t: float
    field: ScalarField
    exponent_q: float

    def __post_init__(self):
        if not self.t >= 0:
            raise ValueError(f"t must be nonnegative, got {self.t}")
        if not self.exponent_q > 0:
            raise ValueError(f"exponent_q must be positive, got {self.exponent_q}")


@dataclass(frozen=True)
class PhysicalRecord:
    t: float
    mass: float
    l1: float
    l2: float
    linf: float
    grad_linf: float


@dataclass
class PhysicalTrajectory:
    grid: Grid
    exponent_q: float
    config: SolverConfig
    records: list[PhysicalRecord] = dataclass_field(default_factory=list)
    snapshots: list[PhysicalState] = dataclass_field(default_factory=list)
    final: PhysicalState | None = None


def rhs_physical(u: PhysicalState) -> ScalarField:
    """lap u - |grad u|^q sampled on the grid (q from the state)."""
    grid = u.field.grid
    vals = laplacian_array(u.field.values, grid.spacing)
    gsq = gradient_magnitude_sq_array(u.field.values, grid.spacing)
    vals -= gsq ** (u.exponent_q / 2.0)
    return ScalarField(grid, vals)


def _physical_rest(grid: Grid, q: float, nonlinearity: str):
    h = grid.spacing
    if nonlinearity == "off":

        def rest_off(t: float, v: np.ndarray) -> np.ndarray:
            return np.zeros_like(v)

        return rest_off

    def rest(t: float, v: np.ndarray) -> np.ndarray:
        return -(gradient_magnitude_sq_array(v, h) ** (q / 2.0))

    return rest


def _boundary_sup(grid: Grid, values: np.ndarray) -> float:
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


def evolve_physical(
    u0: ScalarField | PhysicalState,
    q: float,
    t_end: float,
    cfg: SolverConfig,
    *,
    store_snapshots: bool = False,
) -> PhysicalTrajectory:
    """Integrate the physical flow to t_end, recording every record_every steps.

    cfg.nonlinearity may be "full" or "off" (the cutoff construction lives in
    similarity variables only); cfg.tau_end is ignored in favor of t_end.
    Monitors match the rescaled flow: instability raises BlowupError; L1
    monotonicity and near-positivity (checked for nonnegative initial data)
    raise InvariantViolation; boundary contamination warns once.
    """
    if cfg.nonlinearity == "truncated":
        raise ValueError("truncated absorption is a similarity-variable construction")
    if not q > 0:
        raise ValueError(f"exponent q must be positive, got {q}")
    if isinstance(u0, PhysicalState):
        t0, start = u0.t, u0.field
    else:
        t0, start = 0.0, u0
    if not t_end > t0:
        raise ValueError(f"t_end {t_end} must exceed the initial time {t0}")
    grid = start.grid
    rest = _physical_rest(grid, q, cfg.nonlinearity)
    stepper = _stepping.make_stepper(grid, cfg.dt, cfg.scheme, rest)

    v = start.values.copy()
    sup0 = float(np.max(np.abs(v)))
    limit = 1e6 * sup0 if sup0 > 0 else 1.0
    nonneg_data = float(np.min(v)) >= -1e-8 * sup0

    traj = PhysicalTrajectory(grid=grid, exponent_q=q, config=cfg, records=[], snapshots=[])
    boundary_warned = False
    last_l1 = None
    last_record_step = 0

    def take_record(t: float, values: np.ndarray, step_index: int) -> None:
        nonlocal boundary_warned, last_l1, last_record_step
        gsq = gradient_magnitude_sq_array(values, grid.spacing)
        rec = PhysicalRecord(
            t=t,
            mass=integrate_array(values, grid),
            l1=integrate_array(np.abs(values), grid),
            l2=math.sqrt(integrate_array(values * values, grid)),
            linf=float(np.max(np.abs(values))),
            grad_linf=math.sqrt(float(np.max(gsq))),
        )
        if not boundary_warned and rec.linf > 0 and _boundary_sup(grid, values) > 1e-10 * rec.linf:
            warnings.warn(
                f"boundary values exceed 1e-10 of the sup at t={t:.4g}; "
                "the box is too small for this horizon",
                stacklevel=2,
            )
            boundary_warned = True
        if nonneg_data and rec.linf > 0:
            mn = float(np.min(values))
            if mn < -1e-8 * rec.linf:
                raise InvariantViolation(
                    f"positivity: min value {mn:.3e} below -1e-8 * sup at t={t:.4g}"
                )
            if last_l1 is not None:
                budget = 1e-9 * max(1, step_index - last_record_step)
                if rec.l1 > last_l1 + budget:
                    raise InvariantViolation(
                        f"L1 monotonicity: {last_l1:.12e} -> {rec.l1:.12e} at t={t:.4g}"
                    )
            last_l1 = rec.l1
        last_record_step = step_index
        traj.records.append(rec)
        if store_snapshots:
            traj.snapshots.append(PhysicalState(t, ScalarField(grid, values.copy()), q))

    take_record(t0, v, 0)
    n_full = int(math.floor((t_end - t0) / cfg.dt * (1.0 + 1e-12)))
    t = t0
    for k in range(1, n_full + 1):
        v = stepper(t, v)
        t = t0 + k * cfg.dt
        sup = np.max(np.abs(v))
        if not sup <= limit:
            raise BlowupError(
                f"instability at t={t:.4g}: sup {float(sup):.3e} exceeds 1e6 * initial sup"
            )
        if k % cfg.record_every == 0:
            take_record(t, v, k)
    rem = t_end - t
    if rem > 1e-12 * max(1.0, t_end):
        v = _stepping.make_stepper(grid, rem, cfg.scheme, rest)(t, v)
        t = t_end
        n_full += 1
        take_record(t, v, n_full)
    elif n_full % cfg.record_every != 0:
        take_record(t, v, n_full)
    traj.final = PhysicalState(t, ScalarField(grid, v), q)
    return traj


def _interpolator(field: ScalarField) -> RegularGridInterpolator:
    grid = field.grid
    return RegularGridInterpolator(
        (grid.axis,) * grid.dim, field.values, method="linear", bounds_error=True
    )


def _query_points(grid: Grid, scale: float) -> np.ndarray:
    if grid.dim == 1:
        return (grid.axis * scale)[:, None]
    a = grid.axis * scale
    xx, yy = np.meshgrid(a, a, indexing="ij")
    return np.stack([xx.ravel(), yy.ravel()], axis=-1)


def to_similarity(u: PhysicalState, grid: Grid) -> SimilarityState:
    """Map u(t, .) to the similarity frame on the given xi-grid.

    v(tau, xi) = (1+t)^(N/2) u(t, xi sqrt(1+t)), tau = ln(1+t), values taken
    by linear interpolation.  The target grid must satisfy
    half_width * sqrt(1+t) <= source half_width, otherwise the sample points
    leave the physical grid and a ValueError is raised.
    """
    src = u.field.grid
    if grid.dim != src.dim:
        raise ValueError(f"dimension mismatch: target {grid.dim}, source {src.dim}")
    scale = math.sqrt(1.0 + u.t)
    if grid.half_width * scale > src.half_width * (1.0 + 1e-12):
        raise ValueError(
            f"target xi-grid samples x up to {grid.half_width * scale:.4g}, "
            f"outside the physical grid of half-width {src.half_width:.4g}"
        )
    sampled = _interpolator(u.field)(
        np.clip(_query_points(grid, scale), -src.half_width, src.half_width)
    ).reshape(grid.shape)
    values = (1.0 + u.t) ** (0.5 * src.dim) * sampled
    return SimilarityState(math.log1p(u.t), ScalarField(grid, values))


def from_similarity(
    v: SimilarityState, grid: Grid, exponent_q: float | None = None
) -> PhysicalState:
    """Map v(tau, .) back to physical variables on the given x-grid.

    u(t, x) = (1+t)^(-N/2) v(tau, x / sqrt(1+t)), t = e^tau - 1.  The target
    grid must satisfy half_width / sqrt(1+t) <= source half_width.
    """
    src = v.field.grid
    if grid.dim != src.dim:
        raise ValueError(f"dimension mismatch: target {grid.dim}, source {src.dim}")
    t = math.expm1(v.tau)
    scale = 1.0 / math.sqrt(1.0 + t)
    if grid.half_width * scale > src.half_width * (1.0 + 1e-12):
        raise ValueError(
            f"target x-grid samples xi up to {grid.half_width * scale:.4g}, "
            f"outside the similarity grid of half-width {src.half_width:.4g}"
        )
    sampled = _interpolator(v.field)(
        np.clip(_query_points(grid, scale), -src.half_width, src.half_width)
    ).reshape(grid.shape)
    values = (1.0 + t) ** (-0.5 * src.dim) * sampled
    if exponent_q is None:
        exponent_q = critical_exponent(src.dim)
    return PhysicalState(t, ScalarField(grid, values), exponent_q)


def decay_law_error(
    u: PhysicalState, p: float, constants: CriticalConstants | None = None
) -> float:
    """Decay-law error t^(N/2 (1-1/p)) (ln t)^(N+1) |u - M* (ln t)^-(N+1) g(t)|_p.

    g(t) is the self-similar heat kernel and M* the universal amplitude; the
    functional tends to zero along solutions.  Requires t > 1 so ln t > 0.
    """
    if not u.t > 1.0:
        raise ValueError(f"decay-law error needs t > 1, got t={u.t}")
    grid = u.field.grid
    constants = constants or critical_constants(grid.dim)
    n = grid.dim
    log_t = math.log(u.t)
    target = constants.amplitude * log_t ** (-(n + 1)) * heat_kernel(u.t, grid).values
    diff = ScalarField(grid, u.field.values - target)
    if p == math.inf:
        prefactor = u.t ** (0.5 * n)
    else:
        prefactor = u.t ** (0.5 * n * (1.0 - 1.0 / p))
    return prefactor * log_t ** (n + 1) * lp_norm(diff, p)


def continuation_exponent(q: float, dim: int) -> float:
    """Exponent beta in the rescaled absorption coefficient e^(beta tau).

    For general q the similarity change of variables leaves a factor
    (1+t)^beta = e^(beta tau) on the absorption term, with
    beta = (N + 2 - q (N+1)) / 2; beta = 0 exactly at the critical exponent.
    """
    return 0.5 * (dim + 2 - q * (dim + 1))


@dataclass(frozen=True)
class L1LimitResult:
    """Tail fit of the L1 norm: does it vanish or level off at a plateau?"""

    plateau_estimate: float
    decaying: bool
    slope: float
    taus: np.ndarray
    l1: np.ndarray
    q: float
    switch_tau: float | None


def _tail_fit(taus: np.ndarray, l1: np.ndarray) -> tuple[float, float, bool]:
    start = (3 * taus.size) // 4
    window_t, window_l1 = taus[start:], l1[start:]
    if window_t.size < MIN_FIT_SAMPLES:
        raise ProbeInconclusive(
            f"horizon too short: only {window_t.size} samples in the tail window"
        )
    if np.any(window_l1 <= 0):
        raise ProbeInconclusive("L1 norm reached zero inside the tail window")
    slope = float(np.polyfit(window_t, np.log(window_l1), 1)[0])
    decaying = slope < -FLAT_SLOPE_THRESHOLD
    plateau = 0.0 if decaying else float(np.mean(window_l1))
    return plateau, slope, decaying


def l1_limit_probe(
    u0: ScalarField,
    q: float,
    horizon: float,
    *,
    t_switch: float = 10.0,
    similarity_grid: Grid | None = None,
    nonlinearity: str = "full",
) -> L1LimitResult:
    """Does the L1 norm vanish (q <= critical) or persist (q > critical)?

    Two legs: the physical flow from u0 up to t_switch, then a similarity
    continuation of the same solution, where the absorption carries the
    coefficient e^(beta tau), integrated until tau = horizon.  The tail of
    ln L1 over the last quarter of the samples is fit by least squares;
    slopes flatter than 1e-3 per unit tau mean the norm has leveled off and
    the mean over the window is reported as the plateau, otherwise the norm
    is decaying and the plateau estimate is zero.

    With nonlinearity="off" the flow is linear and conserves the L1 norm, so
    the probe skips the physical leg (no interpolation noise) and the plateau
    equals |u0|_L1 up to round-off.
    """
    if not q > 1:
        raise ValueError(f"the probe needs q > 1, got {q}")
    if nonlinearity not in ("full", "off"):
        raise ValueError(f"nonlinearity must be 'full' or 'off', got {nonlinearity!r}")
    grid = u0.grid
    dim = grid.dim
    beta = continuation_exponent(q, dim)

    taus: list[float] = []
    l1s: list[float] = []

    if nonlinearity == "full":
        switch_tau = math.log1p(t_switch)
        if not horizon > switch_tau:
            raise ValueError(
                f"horizon {horizon} must exceed the switch time tau = {switch_tau:.4g}"
            )
        dt_phys = default_dt(grid)
        cfg_phys = SolverConfig(
            dt=dt_phys,
            tau_end=t_switch,
            scheme="explicit_rk4",
            record_every=default_record_every(dt_phys),
            nonlinearity="full",
        )
        phys = evolve_physical(u0, q, t_switch, cfg_phys)
        for rec in phys.records:
            taus.append(math.log1p(rec.t))
            l1s.append(rec.l1)
        if similarity_grid is None:
            # same spacing as the physical grid, standard half-width 12
            n = 2 * round(12.0 / grid.spacing) + 1
            similarity_grid = build_grid(dim, 12.0, n)
        start = to_similarity(phys.final, similarity_grid)
        sim_grid = similarity_grid
        tau0 = start.tau
        v = start.field.values.copy()
    else:
        switch_tau = None
        if not horizon > 0:
            raise ValueError(f"horizon must be positive, got {horizon}")
        sim_grid = grid
        tau0 = 0.0
        v = u0.values.copy()

    # similarity continuation with the e^(beta tau) absorption coefficient
    half_dim = 0.5 * dim
    coords = sim_grid.coords
    h = sim_grid.spacing
    with_absorption = nonlinearity == "full"

    def rest(tau: float, vals: np.ndarray) -> np.ndarray:
        parts = gradient_arrays(vals, h)
        out = half_dim * vals
        for xi, g in zip(coords, parts):
            out += (0.5 * xi) * g
        if with_absorption:
            gsq = parts[0] * parts[0]
            for g in parts[1:]:
                gsq += g * g
            out -= math.exp(beta * tau) * gsq ** (q / 2.0)
        return out

    dt = default_dt(sim_grid)
    record_every = default_record_every(dt)
    stepper = _stepping.make_stepper(sim_grid, dt, "explicit_rk4", rest)
    sup0 = float(np.max(np.abs(v)))
    limit = 1e6 * sup0 if sup0 > 0 else 1.0
    if not taus:
        taus.append(tau0)
        l1s.append(integrate_array(np.abs(v), sim_grid))
    n_full = int(math.floor((horizon - tau0) / dt * (1.0 + 1e-12)))
    tau = tau0
    for k in range(1, n_full + 1):
        v = stepper(tau, v)
        tau = tau0 + k * dt
        sup = np.max(np.abs(v))
        if not sup <= limit:
            raise BlowupError(
                f"instability at tau={tau:.4g}: sup {float(sup):.3e} exceeds 1e6 * initial sup"
            )
        if k % record_every == 0:
            taus.append(tau)
            l1s.append(integrate_array(np.abs(v), sim_grid))
    rem = horizon - tau
    if rem > 1e-12 * max(1.0, horizon):
        v = _stepping.make_stepper(sim_grid, rem, "explicit_rk4", rest)(tau, v)
        tau = horizon
        taus.append(tau)
        l1s.append(integrate_array(np.abs(v), sim_grid))

    taus_arr = np.array(taus)
    l1_arr = np.array(l1s)
    plateau, slope, decaying = _tail_fit(taus_arr, l1_arr)
    return L1LimitResult(
        plateau_estimate=plateau,
        decaying=decaying,
        slope=slope,
        taus=taus_arr,
        l1=l1_arr,
        q=q,
        switch_tau=switch_tau,
    )
