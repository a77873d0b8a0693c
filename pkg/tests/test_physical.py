"""Physical-frame flow, the change of variables, and the L1 dichotomy probe."""
import math

import numpy as np
import pytest

from hjcrit.fields import Grid, ScalarField, build_grid, field_from_function, integrate, lp_norm
from hjcrit.gaussian import critical_constants, gaussian_profile, heat_kernel
from hjcrit.physical import (
    L1LimitResult,
    PhysicalState,
    continuation_exponent,
    decay_law_error,
    evolve_physical,
    from_similarity,
    l1_limit_probe,
    rhs_physical,
    to_similarity,
)
from hjcrit.similarity import (
    InvariantViolation,
    ProbeInconclusive,
    SimilarityState,
    SolverConfig,
    default_dt,
)

Q_CRIT = critical_constants(1).exponent
GRID_129 = Grid(dim=1, half_width=12.0, points_per_axis=129)
GRID_257 = Grid(dim=1, half_width=12.0, points_per_axis=257)
GRID_513 = Grid(dim=1, half_width=12.0, points_per_axis=513)


def off_config(grid, record_every=100):
    return SolverConfig(
        dt=default_dt(grid), tau_end=1.0, nonlinearity="off", record_every=record_every
    )


def full_config(grid, record_every=50):
    return SolverConfig(
        dt=default_dt(grid), tau_end=1.0, nonlinearity="full", record_every=record_every
    )


class TestPhysicalState:
    def test_rejects_negative_time(self):
        with pytest.raises(ValueError, match="t must be"):
            PhysicalState(-0.1, gaussian_profile(GRID_129), Q_CRIT)

    def test_rejects_nonpositive_exponent(self):
        with pytest.raises(ValueError, match="exponent_q"):
            PhysicalState(0.0, gaussian_profile(GRID_129), 0.0)

    def test_accepts_time_zero(self):
        assert PhysicalState(0.0, gaussian_profile(GRID_129), Q_CRIT).t == 0.0


class TestRhsPhysical:
    def test_zero_field_maps_to_zero(self):
        out = rhs_physical(PhysicalState(0.0, ScalarField(GRID_129, np.zeros(129)), Q_CRIT))
        assert np.all(out.values == 0.0)

    def test_matches_the_analytic_value_for_quadratic_absorption(self):
        # u = exp(-x^2/4), q = 2: rhs = (x^2/4 - 1/2) u - (x^2/4) u^2
        def sup_error(grid):
            u = field_from_function(grid, lambda x: np.exp(-x * x / 4.0))
            got = rhs_physical(PhysicalState(0.0, u, 2.0)).values
            x = grid.axis
            want = (x * x / 4.0 - 0.5) * np.exp(-x * x / 4.0) - (x * x / 4.0) * np.exp(
                -x * x / 2.0
            )
            return np.max(np.abs(got - want))

        coarse, fine = sup_error(GRID_257), sup_error(GRID_513)
        assert fine <= 5e-4
        assert 3.5 <= coarse / fine <= 4.5

    def test_mass_flux_on_the_heat_kernel_scales_inversely_with_time(self):
        # int |grad g(t)|^q dx = c / t at the critical exponent
        u = heat_kernel(2.0, GRID_513)
        got = integrate(rhs_physical(PhysicalState(2.0, u, Q_CRIT)))
        want = -critical_constants(1).dissipation_coeff / 2.0
        assert got == pytest.approx(want, rel=1e-3)


class TestEvolvePhysical:
    def test_rejects_truncated_absorption(self):
        cfg = SolverConfig(dt=1e-3, tau_end=1.0, nonlinearity="truncated")
        with pytest.raises(ValueError, match="similarity-variable"):
            evolve_physical(gaussian_profile(GRID_129), Q_CRIT, 1.0, cfg)

    def test_rejects_nonpositive_exponent(self):
        with pytest.raises(ValueError, match="exponent q"):
            evolve_physical(gaussian_profile(GRID_129), -1.0, 1.0, off_config(GRID_129))

    def test_rejects_end_time_before_the_start(self):
        start = PhysicalState(2.0, gaussian_profile(GRID_129), Q_CRIT)
        with pytest.raises(ValueError, match="must exceed"):
            evolve_physical(start, Q_CRIT, 1.0, off_config(GRID_129))

    def test_absorption_off_reproduces_the_heat_kernel(self):
        traj = evolve_physical(heat_kernel(1.0, GRID_257), Q_CRIT, 1.0, off_config(GRID_257))
        err = np.max(np.abs(traj.final.field.values - heat_kernel(2.0, GRID_257).values))
        assert err <= 1e-4

    def test_end_time_argument_wins_over_the_config_clock(self):
        cfg = SolverConfig(dt=default_dt(GRID_129), tau_end=99.0, nonlinearity="off")
        traj = evolve_physical(heat_kernel(1.0, GRID_129), Q_CRIT, 0.25, cfg)
        assert traj.final.t == pytest.approx(0.25, abs=1e-12)

    def test_absorbing_flow_diagnostics(self):
        traj = evolve_physical(
            heat_kernel(1.0, GRID_257), Q_CRIT, 1.0, full_config(GRID_257), store_snapshots=True
        )
        l1s = [r.l1 for r in traj.records]
        assert all(b < a for a, b in zip(l1s, l1s[1:]))
        assert traj.records[0].grad_linf > 0.0
        assert traj.records[-1].t == pytest.approx(1.0, abs=1e-12)
        assert len(traj.snapshots) == len(traj.records)
        assert all(s.exponent_q == Q_CRIT for s in traj.snapshots)

    def test_positivity_monitor_catches_discrete_undershoot(self):
        spike = np.zeros(129)
        spike[64] = 50.0
        with pytest.raises(InvariantViolation, match="positivity"):
            evolve_physical(
                ScalarField(GRID_129, spike), Q_CRIT, 0.5, full_config(GRID_129, record_every=1)
            )

    def test_warns_when_the_state_touches_the_box_edge(self):
        with pytest.warns(UserWarning, match="box is too small"):
            evolve_physical(
                heat_kernel(5.0, GRID_129), Q_CRIT, 5 * default_dt(GRID_129),
                off_config(GRID_129, record_every=1),
            )


class TestFrameMaps:
    def test_round_trip_at_time_zero_is_the_identity(self):
        u0 = PhysicalState(0.0, gaussian_profile(GRID_257), Q_CRIT)
        v = to_similarity(u0, GRID_257)
        back = from_similarity(v, GRID_257)
        assert v.tau == 0.0
        assert back.t == 0.0
        assert np.array_equal(back.field.values, u0.field.values)

    def test_gaussian_profile_maps_to_the_heat_kernel(self):
        # v = G at tau = ln 3 is u = g(3, .) at t = 2
        target = build_grid(1, 20.0, 861)
        u = from_similarity(SimilarityState(math.log(3.0), gaussian_profile(GRID_513)), target)
        assert u.t == pytest.approx(2.0, rel=1e-12)
        assert u.exponent_q == Q_CRIT
        err = np.max(np.abs(u.field.values - heat_kernel(3.0, target).values))
        assert err <= 1e-4

    def test_heat_kernel_maps_to_the_gaussian_profile(self):
        src = build_grid(1, 30.0, 1281)
        v = to_similarity(PhysicalState(2.0, heat_kernel(3.0, src), Q_CRIT), GRID_513)
        assert v.tau == pytest.approx(math.log(3.0), rel=1e-12)
        err = np.max(np.abs(v.field.values - gaussian_profile(GRID_513).values))
        assert err <= 1e-4

    def test_rejects_a_similarity_grid_wider_than_the_data(self):
        u = PhysicalState(5.0, gaussian_profile(GRID_257), Q_CRIT)
        with pytest.raises(ValueError, match="outside the physical grid"):
            to_similarity(u, GRID_257)

    def test_rejects_a_physical_grid_wider_than_the_data(self):
        v = SimilarityState(0.0, gaussian_profile(GRID_257))
        with pytest.raises(ValueError, match="outside the similarity grid"):
            from_similarity(v, build_grid(1, 30.0, 129))

    def test_rejects_dimension_mismatch(self):
        u = PhysicalState(0.0, gaussian_profile(GRID_257), Q_CRIT)
        with pytest.raises(ValueError, match="dimension mismatch"):
            to_similarity(u, Grid(dim=2, half_width=8.0, points_per_axis=33))


class TestDecayLawError:
    @pytest.mark.parametrize("t", [0.5, 1.0])
    def test_needs_time_beyond_one(self, t):
        u = PhysicalState(t, gaussian_profile(GRID_129), Q_CRIT)
        with pytest.raises(ValueError, match="t > 1"):
            decay_law_error(u, 1.0)

    def test_vanishes_on_the_exact_asymptotic_target(self):
        t = 5.0
        vals = (
            critical_constants(1).amplitude
            * math.log(t) ** (-2)
            * heat_kernel(t, GRID_257).values
        )
        u = PhysicalState(t, ScalarField(GRID_257, vals), Q_CRIT)
        assert decay_law_error(u, 1.0) == 0.0
        assert decay_law_error(u, math.inf) == 0.0

    def test_linear_response_with_the_advertised_prefactors(self):
        t = 5.0
        constants = critical_constants(1)
        kernel = heat_kernel(t, GRID_257)
        target = constants.amplitude * math.log(t) ** (-2) * kernel.values

        def errors(delta):
            u = PhysicalState(t, ScalarField(GRID_257, target + delta * kernel.values), Q_CRIT)
            return decay_law_error(u, 1.0), decay_law_error(u, math.inf)

        e1, einf = errors(1e-3)
        # p = 1 has no t prefactor: error = (ln t)^2 delta |g(t)|_1
        assert e1 == pytest.approx(math.log(t) ** 2 * 1e-3 * lp_norm(kernel, 1.0), rel=1e-12)
        d1, dinf = errors(2e-3)
        assert d1 / e1 == pytest.approx(2.0, rel=1e-12)
        # the sup-norm location shifts by one cell between the two deltas
        assert dinf / einf == pytest.approx(2.0, rel=1e-9)


class TestContinuationExponent:
    def test_vanishes_exactly_at_the_critical_exponent(self):
        for dim in (1, 2):
            q = critical_constants(dim).exponent
            assert abs(continuation_exponent(q, dim)) <= 1e-15

    def test_supercritical_exponent_damps_the_absorption(self):
        assert continuation_exponent(1.7, 1) == pytest.approx(-0.2, rel=1e-12)

    def test_subcritical_exponent_amplifies_the_absorption(self):
        assert continuation_exponent(1.2, 1) == pytest.approx(0.3, rel=1e-12)


class TestL1LimitProbe:
    def test_supercritical_absorption_leaves_a_mass_plateau(self):
        grid = build_grid(1, 40.0, 201)
        result = l1_limit_probe(gaussian_profile(grid), 1.7, 30.0)
        assert isinstance(result, L1LimitResult)
        assert not result.decaying
        assert result.plateau_estimate >= 0.3
        assert abs(result.slope) <= 1e-3
        assert result.switch_tau == pytest.approx(math.log1p(10.0), rel=1e-12)
        assert np.all(np.diff(result.taus) > 0)

    def test_subcritical_absorption_drains_the_mass(self):
        grid = build_grid(1, 40.0, 201)
        result = l1_limit_probe(gaussian_profile(grid), 1.4, 30.0)
        assert result.decaying
        assert result.plateau_estimate == 0.0
        assert result.slope < -1e-3

    def test_linear_flow_plateau_is_the_initial_norm(self):
        grid = build_grid(1, 12.0, 65)
        result = l1_limit_probe(gaussian_profile(grid), Q_CRIT, 8.0, nonlinearity="off")
        assert not result.decaying
        assert result.switch_tau is None
        assert result.plateau_estimate == pytest.approx(1.0, rel=1e-10)

    def test_short_horizon_is_inconclusive(self):
        grid = build_grid(1, 12.0, 65)
        with pytest.raises(ProbeInconclusive, match="horizon too short"):
            l1_limit_probe(gaussian_profile(grid), Q_CRIT, 3.0, nonlinearity="off")

    def test_rejects_exponents_at_or_below_one(self):
        with pytest.raises(ValueError, match="q > 1"):
            l1_limit_probe(gaussian_profile(GRID_129), 1.0, 30.0)

    def test_rejects_unknown_nonlinearity(self):
        with pytest.raises(ValueError, match="nonlinearity"):
            l1_limit_probe(gaussian_profile(GRID_129), 1.7, 30.0, nonlinearity="truncated")

    def test_rejects_a_horizon_inside_the_physical_leg(self):
        with pytest.raises(ValueError, match="exceed the switch"):
            l1_limit_probe(gaussian_profile(GRID_129), 1.7, 2.0, t_switch=10.0)

    def test_rejects_a_nonpositive_linear_horizon(self):
        with pytest.raises(ValueError, match="horizon must be positive"):
            l1_limit_probe(gaussian_profile(GRID_129), 1.7, -1.0, nonlinearity="off")
