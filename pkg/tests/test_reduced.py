"""Scalar mass law: right side, closed form, RK4 integration, amplitude law."""
import math

import numpy as np
import pytest

from hjcrit.gaussian import critical_constants
from hjcrit.reduced import asymptote_deviation, exact_mass, integrate_mass_ode, ode_rhs

C1 = critical_constants(1).dissipation_coeff


class TestOdeRhs:
    def test_power_law_value(self):
        # q defaults to 3/2 in one dimension: -1 * 4^(3/2) = -8
        assert ode_rhs(4.0, 1.0) == -8.0

    def test_explicit_exponent_overrides_the_default(self):
        assert ode_rhs(4.0, 1.0, q=2.0) == -16.0

    def test_rejects_negative_mass(self):
        with pytest.raises(ValueError, match="mass must be nonnegative"):
            ode_rhs(-1.0, 1.0)

    def test_rejects_nonpositive_coefficient(self):
        with pytest.raises(ValueError, match="coefficient must be positive"):
            ode_rhs(1.0, 0.0)


class TestExactMass:
    def test_closed_form_in_one_dimension(self):
        # m0 = 1, c = 2: M(tau) = (1 + tau)^(-2)
        assert exact_mass(1.0, 2.0, 1.0, 1) == 0.25

    def test_closed_form_in_two_dimensions(self):
        # m0 = 8, c = 1: M(3) = (1/2 + 1)^(-3) = 8/27
        assert exact_mass(8.0, 1.0, 3.0, 2) == 8.0 / 27.0

    def test_starts_at_the_initial_mass(self):
        assert exact_mass(0.7, C1, 0.0, 1) == pytest.approx(0.7, rel=1e-15)

    def test_scalar_in_scalar_out_array_in_array_out(self):
        assert isinstance(exact_mass(1.0, 1.0, 2.0, 1), float)
        out = exact_mass(1.0, 1.0, np.array([0.0, 1.0, 2.0]), 1)
        assert isinstance(out, np.ndarray) and out.shape == (3,)

    def test_positive_and_decreasing_forever(self):
        taus = np.linspace(0.0, 200.0, 401)
        m = exact_mass(1.0, C1, taus, 1)
        assert np.all(m > 0.0)
        assert np.all(np.diff(m) < 0.0)

    def test_rejects_nonpositive_initial_mass(self):
        with pytest.raises(ValueError, match="initial mass must be positive"):
            exact_mass(0.0, 1.0, 1.0, 1)

    def test_rejects_negative_tau(self):
        with pytest.raises(ValueError, match="tau must be nonnegative"):
            exact_mass(1.0, 1.0, -0.5, 1)


class TestIntegrateMassOde:
    def test_tracks_the_closed_form(self):
        taus, masses = integrate_mass_ode(1.0, C1, 50.0, 1e-2, dim=1)
        ref = exact_mass(1.0, C1, taus, 1)
        assert np.max(np.abs(masses - ref) / ref) <= 1e-10

    def test_returns_both_endpoints_and_decreasing_masses(self):
        taus, masses = integrate_mass_ode(1.0, C1, 5.0, 1e-2)
        assert taus[0] == 0.0
        assert taus[-1] == 5.0
        assert masses[0] == 1.0
        assert np.all(np.diff(masses) < 0.0)

    def test_partial_final_step_lands_on_the_horizon(self):
        taus, _ = integrate_mass_ode(1.0, C1, 0.025, 1e-2)
        assert taus[-1] == pytest.approx(0.025, abs=0.0)
        assert len(taus) == 4

    def test_zero_initial_mass_stays_zero(self):
        _, masses = integrate_mass_ode(0.0, C1, 5.0, 1e-2)
        assert np.all(masses == 0.0)

    def test_rejects_negative_initial_mass(self):
        with pytest.raises(ValueError, match="nonnegative"):
            integrate_mass_ode(-1.0, C1, 5.0, 1e-2)

    def test_rejects_steps_above_the_accuracy_cap(self):
        with pytest.raises(ValueError, match=r"dt must lie in \(0, 1e-2\]"):
            integrate_mass_ode(1.0, C1, 5.0, 0.1)

    def test_rejects_nonpositive_horizon(self):
        with pytest.raises(ValueError, match="tau_end must be positive"):
            integrate_mass_ode(1.0, C1, 0.0, 1e-2)


class TestAsymptoteDeviation:
    def test_closed_form_value(self):
        # m0 = 1, c = 2, tau = 1: (1 + 2/(2))^(-2) - 1 = -3/4
        assert asymptote_deviation(1.0, 2.0, 1, 1.0) == -0.75

    def test_matches_the_mass_route(self):
        # same quantity computed from exact_mass and the amplitude constant
        q = critical_constants(1).exponent
        tau = 7.0
        via_mass = tau**2 * exact_mass(1.0, C1, tau, 1) / ((q - 1.0) * C1) ** (-2) - 1.0
        assert asymptote_deviation(1.0, C1, 1, tau) == pytest.approx(via_mass, rel=1e-12)

    def test_decays_toward_the_amplitude_law(self):
        devs = [abs(asymptote_deviation(1.0, C1, 1, t)) for t in (10.0, 100.0, 1000.0)]
        assert devs[0] > devs[1] > devs[2]
        assert devs[2] <= 0.03

    def test_rejects_nonpositive_tau(self):
        with pytest.raises(ValueError, match="tau must be positive"):
            asymptote_deviation(1.0, C1, 1, 0.0)

    def test_rejects_nonpositive_initial_mass(self):
        with pytest.raises(ValueError, match="initial mass must be positive"):
            asymptote_deviation(-2.0, C1, 1, 1.0)
