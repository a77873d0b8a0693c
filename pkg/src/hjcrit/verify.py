"""Acceptance battery: ten numbered criteria with one pass/fail line each.

The expensive trajectories (the reference similarity run, its moment-perturbed
twin, the cross-frame comparison, the two dichotomy probes) are built once in
a thread-safe cache and shared between criteria.  Runtime budgets are checked
against per-thread CPU time so concurrent execution cannot fail a criterion
that is fast on its own.
"""
from __future__ import annotations

import math
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fields import Grid, build_grid, gradient_magnitude_sq_array, integrate_array
from .gaussian import (
    critical_constants,
    critical_exponent,
    gaussian_gradient_norm_quadrature,
    gaussian_profile,
    hermite_mode,
)
from .experiments import gaussian_plus_moment
from .physical import PhysicalState, evolve_physical, l1_limit_probe, to_similarity
from .reduced import asymptote_deviation, exact_mass, integrate_mass_ode
from .similarity import (
    SimilarityState,
    SolverConfig,
    Trajectory,
    default_dt,
    default_record_every,
    energy_monitor,
    evolve,
    mass_dissipation_residual,
)
from .spectral import eigenmode_residual, semigroup_decay_rate

__all__ = [
    "CriterionResult",
    "RunCache",
    "ALL_CRITERIA",
    "FAST_CRITERIA",
    "run_criterion",
    "run_all",
    "format_results",
    "thread_count",
]

ALL_CRITERIA = tuple(range(1, 11))
FAST_CRITERIA = (1, 2, 3, 4)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    status: str  # PASS, FAIL or SKIP
    detail: str
    seconds: float

    @property
    def passed(self) -> bool:
        return self.status == "PASS"

    @property
    def failed(self) -> bool:
        return self.status == "FAIL"


class RunCache:
    """Compute-once store for trajectories shared between criteria."""

    def __init__(self):
        self._guard = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}
        self._values: dict[str, object] = {}

    def get(self, key: str, builder: Callable[[], object]):
        with self._guard:
            lock = self._locks.setdefault(key, threading.Lock())
        with lock:
            if key not in self._values:
                self._values[key] = builder()
            return self._values[key]


def thread_count() -> int:
    """Worker count for the battery, capped by the HJCRIT_THREADS variable."""
    base = min(4, os.cpu_count() or 1)
    raw = os.environ.get("HJCRIT_THREADS")
    if raw is None or not raw.strip():
        return base
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"HJCRIT_THREADS must be an integer, got {raw!r}") from None
    if cap < 1:
        raise ValueError(f"HJCRIT_THREADS must be >= 1, got {cap}")
    return min(base, cap)


def _reference_config(grid: Grid, tau_end: float) -> SolverConfig:
    # records 10 steps apart: the mass identity is checked by central
    # differences over records and needs the initial transient resolved
    dt = default_dt(grid)
    return SolverConfig(
        dt=dt,
        tau_end=tau_end,
        scheme="explicit_rk4",
        record_every=10,
        nonlinearity="full",
    )


def _build_run_gaussian() -> Trajectory:
    grid = build_grid(1, 12.0, 513)
    return evolve(gaussian_profile(grid), _reference_config(grid, 15.0), store_snapshots=True)


def _build_run_moment() -> Trajectory:
    grid = build_grid(1, 12.0, 513)
    v0 = gaussian_plus_moment(grid, 0.3)
    return evolve(v0, _reference_config(grid, 15.0), store_snapshots=False)


def _build_cross_frame() -> dict:
    """Physical and similarity runs from the Gaussian, compared at three times."""
    sim_grid = build_grid(1, 12.0, 513)
    phys_grid = build_grid(1, 30.0, 1281)
    q = critical_exponent(1)
    u = PhysicalState(0.0, gaussian_profile(phys_grid), q)
    v = SimilarityState(0.0, gaussian_profile(sim_grid))
    errors: list[tuple[float, float]] = []
    l1_physical: list[float] = []
    mass_similarity: list[float] = []
    for t_target in (1.0, math.e - 1.0, 5.0):
        dt_p = default_dt(phys_grid)
        cfg_p = SolverConfig(
            dt=dt_p,
            tau_end=t_target,
            scheme="explicit_rk4",
            record_every=default_record_every(dt_p),
            nonlinearity="full",
        )
        ptraj = evolve_physical(u, q, t_target, cfg_p)
        u = ptraj.final
        straj = evolve(v, _reference_config(sim_grid, math.log1p(t_target)), store_snapshots=False)
        v = straj.final
        mapped = to_similarity(u, sim_grid)
        rel = integrate_array(np.abs(mapped.field.values - v.field.values), sim_grid)
        rel /= integrate_array(np.abs(v.field.values), sim_grid)
        errors.append((t_target, rel))
        l1_physical.extend(r.l1 for r in ptraj.records)
        mass_similarity.extend(r.mass for r in straj.records)
    return {
        "errors": errors,
        "l1_physical": l1_physical,
        "mass_similarity": mass_similarity,
    }


def _build_probe(q: float):
    grid = build_grid(1, 40.0, 1601)
    return l1_limit_probe(gaussian_profile(grid), q, 30.0, t_switch=10.0)


def _record_nearest(traj: Trajectory, tau: float):
    return min(traj.records, key=lambda r: abs(r.tau - tau))


def _criterion_constants(cache: RunCache) -> tuple[bool, str]:
    parts = []
    ok = True
    for dim in (1, 2):
        cc = critical_constants(dim)
        quad = gaussian_gradient_norm_quadrature(dim)
        route = abs(cc.grad_norm - quad) / quad
        target = float((dim + 1) ** (dim + 1))
        identity = abs(cc.amplitude * cc.grad_norm ** (dim + 2) - target) / target
        ok = ok and route <= 1e-10 and identity <= 1e-12
        parts.append(f"N={dim} dual-route {route:.1e} (<=1e-10), identity {identity:.1e} (<=1e-12)")
    return ok, "; ".join(parts)


def _criterion_operator(cache: RunCache) -> tuple[bool, str]:
    coarse = eigenmode_residual(build_grid(1, 12.0, 513), 0).residual
    fine = eigenmode_residual(build_grid(1, 12.0, 1025), 0).residual
    factor = coarse / fine
    ok = coarse <= 1e-3 and 3.5 <= factor <= 4.5
    return ok, f"kernel residual {coarse:.3e} (<=1e-3) at n=513, refinement factor {factor:.3f} in [3.5,4.5]"


def _criterion_rates(cache: RunCache) -> tuple[bool, str]:
    grid = build_grid(1, 12.0, 513)
    parts = []
    ok = True
    for k, expected, tol in ((1, 0.5, 0.02), (2, 1.0, 0.05)):
        probe = semigroup_decay_rate(hermite_mode(grid, k), dt=5e-4)
        err = abs(probe.measured_rate - expected)
        ok = ok and err <= tol
        parts.append(f"{probe.mode_label} rate {probe.measured_rate:.4f} (want {expected}+-{tol})")
    return ok, "; ".join(parts)


def _criterion_reduced(cache: RunCache) -> tuple[bool, str]:
    worst = 0.0
    for m0 in (0.1, 1.0, 10.0):
        for c in (0.1, 1.0, 10.0):
            # dt = 1e-3 (the reduced-run default); the stiff (10, 10) corner
            # needs it, the step-size contract only caps dt at 1e-2
            _, masses = integrate_mass_ode(m0, c, 50.0, dt=1e-3, dim=1)
            exact = exact_mass(m0, c, 50.0, 1)
            worst = max(worst, abs(masses[-1] - exact) / exact)
    cc = critical_constants(1)
    taus = np.logspace(2.0, 4.0, 41)
    deviation = np.abs(asymptote_deviation(1.0, cc.dissipation_coeff, 1, taus))
    slope = float(np.polyfit(np.log(taus), np.log(deviation), 1)[0])
    ok = worst <= 1e-8 and abs(slope + 1.0) <= 0.05
    return ok, f"worst integrator error {worst:.2e} (<=1e-8); deviation slope {slope:.4f} (want -1+-0.05)"


def _criterion_mass_identity(cache: RunCache) -> tuple[bool, str]:
    traj = cache.get("run_gaussian", _build_run_gaussian)
    residual = np.abs(mass_dissipation_residual(traj))
    diss = np.array([r.dissipation for r in traj.records[1:-1]])
    ratio = residual / diss
    worst = float(np.max(ratio))
    ok = worst <= 1e-5
    return ok, f"worst |dM/dtau + D|/D = {worst:.2e} (<=1e-5) over {ratio.size} interior records"


def _criterion_asymptotic_law(cache: RunCache) -> tuple[bool, str]:
    traj = cache.get("run_gaussian", _build_run_gaussian)
    cc = critical_constants(1)
    anchor = _record_nearest(traj, 5.0)
    final = traj.records[-1]
    predicted = exact_mass(anchor.mass, cc.dissipation_coeff, final.tau - anchor.tau, 1)
    mass_err = abs(final.mass - predicted) / predicted
    state = traj.final
    grid = state.field.grid
    l1 = integrate_array(np.abs(state.field.values), grid)
    profile = state.field.values / l1 - gaussian_profile(grid).values
    profile_err = integrate_array(np.abs(profile), grid)
    ok = mass_err <= 0.15 and profile_err <= 0.05
    return ok, (
        f"rescaled mass off reduced prediction by {mass_err:.3f} (<=0.15), "
        f"profile L1 error {profile_err:.4f} (<=0.05) at tau={final.tau:g}"
    )


def _criterion_omega_decay(cache: RunCache) -> tuple[bool, str]:
    parts = []
    ok = True
    for label, key, builder in (
        ("gaussian", "run_gaussian", _build_run_gaussian),
        ("gaussian+moment", "run_moment", _build_run_moment),
    ):
        traj = cache.get(key, builder)
        early = abs(_record_nearest(traj, 5.0).omega_ratio)
        late = abs(traj.records[-1].omega_ratio)
        ok = ok and late < early and early < 0.2 and late < 0.2
        parts.append(f"{label}: |omega| {early:.4f} -> {late:.4f} (both <0.2, decreasing)")
    return ok, "; ".join(parts)


def _criterion_dichotomy(cache: RunCache) -> tuple[bool, str]:
    sup = cache.get("probe_q17", lambda: _build_probe(1.7))
    crit = cache.get("probe_q15", lambda: _build_probe(1.5))
    initial = float(sup.l1[0])
    ok = (
        not sup.decaying
        and sup.plateau_estimate >= 0.3 * initial
        and crit.decaying
    )
    return ok, (
        f"q=1.7 plateau {sup.plateau_estimate:.3f} (>={0.3 * initial:.3f}), "
        f"slope {sup.slope:.2e}; q=1.5 decaying={crit.decaying} (slope {crit.slope:.2e})"
    )


def _criterion_cross_frame(cache: RunCache) -> tuple[bool, str]:
    cross = cache.get("cross_frame", _build_cross_frame)
    ok = all(err <= 1e-3 for _, err in cross["errors"])
    parts = ", ".join(f"t={t:.4g}: {err:.2e}" for t, err in cross["errors"])
    return ok, f"relative L1 differences {parts} (<=1e-3)"


def _worst_increase(series) -> float:
    arr = np.asarray(series, dtype=float)
    if arr.size < 2:
        return 0.0
    return float(np.max(np.diff(arr)))


def _criterion_monitors(cache: RunCache) -> tuple[bool, str]:
    run_g = cache.get("run_gaussian", _build_run_gaussian)
    run_m = cache.get("run_moment", _build_run_moment)
    cross = cache.get("cross_frame", _build_cross_frame)
    sup = cache.get("probe_q17", lambda: _build_probe(1.7))
    crit = cache.get("probe_q15", lambda: _build_probe(1.5))

    slack_budget = 1e-9 * max(1, run_g.config.record_every)
    series = {
        "gaussian mass": [r.mass for r in run_g.records],
        "moment-run mass": [r.mass for r in run_m.records],
        "physical L1": cross["l1_physical"],
        "similarity mass": cross["mass_similarity"],
        "probe q=1.7 L1": sup.l1,
        "probe q=1.5 L1": crit.l1,
    }
    worst_rise = max(_worst_increase(s) for s in series.values())
    monotone_ok = worst_rise <= slack_budget

    mins = np.array([float(np.min(s.field.values)) for s in run_g.snapshots])
    sups = np.array([float(np.max(np.abs(s.field.values))) for s in run_g.snapshots])
    positivity_ok = bool(np.all(mins >= -1e-8 * sups))
    worst_min = float(np.min(mins / sups))

    grid = run_g.grid
    slack = energy_monitor(run_g)
    scales = np.empty(slack.size)
    for i, snap in enumerate(run_g.snapshots[1:-1]):
        v = snap.field.values
        grad_energy = integrate_array(gradient_magnitude_sq_array(v, grid.spacing), grid)
        scales[i] = max(grad_energy, 0.25 * grid.dim * integrate_array(v * v, grid))
    energy_ok = bool(np.all(slack <= 1e-6 * scales))
    worst_slack = float(np.max(slack / scales))

    ok = monotone_ok and positivity_ok and energy_ok
    return ok, (
        f"worst mass/L1 increase {worst_rise:.1e} (<= {slack_budget:.1e}) over {len(series)} runs; "
        f"min/sup >= {worst_min:.1e} (>=-1e-8); "
        f"energy slack <= {worst_slack:.1e} x scale (<=1e-6)"
    )


_CRITERIA: dict[int, tuple[str, float | None, Callable[[RunCache], tuple[bool, str]]]] = {
    1: ("universal constants", 1.0, _criterion_constants),
    2: ("discrete generator kernel", 1.0, _criterion_operator),
    3: ("linear decay rates", 10.0, _criterion_rates),
    4: ("reduced mass law", 1.0, _criterion_reduced),
    5: ("mass-dissipation identity", 60.0, _criterion_mass_identity),
    6: ("asymptotic amplitude and profile", 60.0, _criterion_asymptotic_law),
    7: ("correction ratio decay", 120.0, _criterion_omega_decay),
    8: ("supercritical mass dichotomy", 120.0, _criterion_dichotomy),
    9: ("cross-frame solver agreement", 60.0, _criterion_cross_frame),
    10: ("monotonicity and positivity", None, _criterion_monitors),
}


def run_criterion(number: int, cache: RunCache) -> CriterionResult:
    """Execute one criterion; exceptions become failures, never crashes."""
    title, limit, func = _CRITERIA[number]
    start = time.thread_time()
    try:
        ok, detail = func(cache)
    except Exception as exc:  # noqa: BLE001 - a broken criterion must report, not abort
        seconds = time.thread_time() - start
        return CriterionResult(number, title, "FAIL", f"{type(exc).__name__}: {exc}", seconds)
    seconds = time.thread_time() - start
    if limit is not None and seconds > limit:
        ok = False
        detail += f"; runtime {seconds:.1f}s exceeds the {limit:.0f}s budget"
    return CriterionResult(number, title, "PASS" if ok else "FAIL", detail, seconds)


def run_all(fast: bool = False, threads: int | None = None) -> list[CriterionResult]:
    """Run the battery (criteria 1-4 only under fast) and return sorted results."""
    numbers = FAST_CRITERIA if fast else ALL_CRITERIA
    if threads is None:
        threads = thread_count()
    cache = RunCache()
    results: list[CriterionResult] = []
    # criterion 10 audits the runs the others produce, so it goes last
    concurrent = [n for n in numbers if n != 10]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        futures = [pool.submit(run_criterion, n, cache) for n in concurrent]
        results.extend(f.result() for f in futures)
    if 10 in numbers:
        results.append(run_criterion(10, cache))
    for n in ALL_CRITERIA:
        if n not in numbers:
            results.append(
                CriterionResult(n, _CRITERIA[n][0], "SKIP", "skipped in fast mode", 0.0)
            )
    return sorted(results, key=lambda r: r.number)


def format_results(results: list[CriterionResult]) -> str:
    lines = [
        f"criterion {r.number:2d} {r.status:<4} {r.seconds:7.2f}s  {r.title}: {r.detail}"
        for r in results
    ]
    failed = sum(r.failed for r in results)
    passed = sum(r.passed for r in results)
    skipped = sum(r.status == "SKIP" for r in results)
    summary = f"{passed} passed, {failed} failed"
    if skipped:
        summary += f", {skipped} skipped"
    lines.append(summary)
    return "\n".join(lines)
