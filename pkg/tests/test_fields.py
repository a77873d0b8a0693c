"""Grid construction, discrete calculus, and quadrature-backed norms."""
import math

import numpy as np
import pytest

from hjcrit.fields import (
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
from hjcrit.gaussian import gaussian_profile, hermite_mode

# Adaptive-quadrature oracle values, computed independently before these
# tests were written.
WL2_G_M1_N1 = 0.6316187777460647     # (int (1+xi^2) G^2)^(1/2)
H1M_G_M1_N1 = 0.7735718587191166     # (|G|_m^2 + |G'|_m^2)^(1/2), m=1
H1M_G_M2_N1 = 1.2632375554921293
WL2_G_M2_N2 = 0.5984134206021491
H1M_G_M2_N2 = 0.9249096275414899
G_SQUARED_INTEGRAL = 0.19947114020071635  # (8 pi)^(-1/2)


def grid1(n=257, half_width=12.0):
    return build_grid(1, half_width, n)


class TestGrid:
    def test_three_point_axis(self):
        g = build_grid(1, 12.0, 3)
        np.testing.assert_array_equal(g.axis, [-12.0, 0.0, 12.0])

    def test_spacing(self):
        assert build_grid(1, 12.0, 1025).spacing == 24.0 / 1024

    def test_two_dimensional_layout(self):
        g = build_grid(2, 12.0, 129)
        assert g.shape == (129, 129)
        assert g.coordinates(0, 0) == (-12.0, -12.0)
        f = field_from_function(g, lambda x, y: x + 100.0 * y)
        # flat layout is lexicographic in the axis indices
        assert f.flat_values[1] == pytest.approx(-12.0 + 100.0 * (-12.0 + g.spacing))

    def test_spacing_consistency(self):
        g = build_grid(1, 9.5, 513)
        assert g.spacing * (g.points_per_axis - 1) == pytest.approx(2 * g.half_width, rel=1e-15)

    def test_rejections(self):
        with pytest.raises(ValueError):
            build_grid(1, 12.0, 256)  # even
        with pytest.raises(ValueError):
            build_grid(3, 12.0, 257)
        with pytest.raises(ValueError):
            build_grid(1, 7.0, 257)  # half_width too small for the Gaussian tail

    def test_equality_and_hash(self):
        assert build_grid(1, 12.0, 257) == build_grid(1, 12.0, 257)
        assert hash(build_grid(1, 12.0, 257)) == hash(build_grid(1, 12.0, 257))
        assert build_grid(1, 12.0, 257) != build_grid(1, 12.0, 259)


class TestScalarField:
    def test_accepts_flat_values(self):
        g = grid1(17)
        f = ScalarField(g, np.zeros(17))
        assert f.values.shape == (17,)

    def test_rejects_nan(self):
        g = grid1(17)
        vals = np.zeros(17)
        vals[3] = np.nan
        with pytest.raises(ValueError):
            ScalarField(g, vals)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            ScalarField(grid1(17), np.zeros(16))

    def test_values_frozen(self):
        f = ScalarField(grid1(17), np.zeros(17))
        with pytest.raises(ValueError):
            f.values[0] = 1.0


class TestWeightParams:
    def test_requires_supercritical_exponent(self):
        with pytest.raises(ValueError):
            WeightParams(m=0.5, dim=1)
        with pytest.raises(ValueError):
            WeightParams(m=1.0, dim=2)
        WeightParams(m=1.0, dim=1)
        WeightParams(m=2.0, dim=2)

    def test_weight_values(self):
        g = grid1(5, 12.0)
        w = WeightParams(m=1.0, dim=1).values_on(g)
        np.testing.assert_allclose(w, 1.0 + g.axis ** 2)


class TestGradient:
    def test_linear_exact_interior(self):
        g = grid1()
        (d,) = gradient(field_from_function(g, lambda x: x))
        np.testing.assert_allclose(d.values[1:-1], 1.0, rtol=0, atol=1e-13)

    def test_constant_zero_interior(self):
        g = grid1()
        (d,) = gradient(ScalarField(g, np.ones(g.points_per_axis)))
        np.testing.assert_allclose(d.values[1:-1], 0.0, atol=1e-14)

    def test_gaussian_second_order(self):
        errs = []
        for n in (257, 513):
            g = grid1(n)
            (d,) = gradient(gaussian_profile(g))
            exact = -0.5 * g.axis * gaussian_profile(g).values
            errs.append(np.max(np.abs(d.values[1:-1] - exact[1:-1])))
        assert 3.5 <= errs[0] / errs[1] <= 4.5


class TestLaplacian:
    def test_quadratic_exact(self):
        g = grid1()
        lap = laplacian(field_from_function(g, lambda x: x * x))
        np.testing.assert_allclose(lap.values[1:-1], 2.0, rtol=1e-11)

    def test_zero(self):
        g = grid1()
        lap = laplacian(ScalarField(g, np.zeros(g.points_per_axis)))
        assert np.all(lap.values == 0.0)

    def test_gaussian_second_order(self):
        errs = []
        for n in (257, 513):
            g = grid1(n)
            G = gaussian_profile(g).values
            lap = laplacian(gaussian_profile(g))
            exact = (g.axis ** 2 / 4.0 - 0.5) * G
            errs.append(np.max(np.abs(lap.values[1:-1] - exact[1:-1])))
        assert 3.5 <= errs[0] / errs[1] <= 4.5


class TestIntegrate:
    def test_gaussian_mass(self):
        assert integrate(gaussian_profile(grid1(257))) == pytest.approx(1.0, abs=1e-8)

    def test_odd_function(self):
        g = grid1(257)
        f = field_from_function(g, lambda x: x * np.exp(-x * x / 4.0))
        assert integrate(f) == pytest.approx(0.0, abs=1e-15)

    def test_gaussian_squared(self):
        g = grid1(257)
        f = ScalarField(g, gaussian_profile(g).values ** 2)
        assert integrate(f) == pytest.approx(G_SQUARED_INTEGRAL, abs=1e-8)

    def test_exact_for_piecewise_linear(self):
        # a hat of height 1 over two cells has area h
        g = grid1(257)
        vals = np.zeros(g.points_per_axis)
        vals[100] = 1.0
        assert integrate(ScalarField(g, vals)) == pytest.approx(g.spacing, rel=1e-14)


class TestLpNorm:
    def test_l1_of_gaussian(self):
        assert lp_norm(gaussian_profile(grid1(257)), 1) == pytest.approx(1.0, abs=1e-8)

    def test_sup_of_gaussian(self):
        assert lp_norm(gaussian_profile(grid1(257)), math.inf) == (4.0 * math.pi) ** -0.5

    def test_l2_of_gaussian(self):
        expected = (8.0 * math.pi) ** -0.25
        assert lp_norm(gaussian_profile(grid1(257)), 2) == pytest.approx(expected, abs=1e-8)

    def test_rejects_p_below_one(self):
        with pytest.raises(ValueError):
            lp_norm(gaussian_profile(grid1(17)), 0.5)

    def test_l1_equals_integral_of_modulus(self):
        rng = np.random.default_rng(7)
        g = grid1(65)
        f = ScalarField(g, np.abs(rng.normal(size=g.points_per_axis)))
        assert lp_norm(f, 1) == pytest.approx(integrate(f), rel=1e-14)


class TestWeightedNorms:
    def test_zero_field(self):
        g = grid1(17)
        z = ScalarField(g, np.zeros(g.points_per_axis))
        w = WeightParams(1.0, 1)
        assert weighted_l2_norm(z, w) == 0.0
        assert h1m_norm(z, w) == 0.0

    def test_gaussian_weighted_l2(self):
        val = weighted_l2_norm(gaussian_profile(grid1(513)), WeightParams(1.0, 1))
        assert val == pytest.approx(WL2_G_M1_N1, rel=1e-10)

    def test_homogeneity(self):
        g = grid1(129)
        w = WeightParams(1.0, 1)
        f = gaussian_profile(g)
        scaled = ScalarField(g, -3.0 * f.values)
        assert weighted_l2_norm(scaled, w) == pytest.approx(3.0 * weighted_l2_norm(f, w), rel=1e-14)

    @pytest.mark.parametrize(
        "dim,m,expected",
        [(1, 1.0, H1M_G_M1_N1), (1, 2.0, H1M_G_M2_N1), (2, 2.0, H1M_G_M2_N2)],
    )
    def test_gaussian_h1m_against_oracle(self, dim, m, expected):
        # The gradient stencil biases h1m by O(h^2) (about 4e-5 at n=513), so
        # the oracle comparison extrapolates the squared norm over two grids.
        squares = []
        for n in (513, 1025):
            g = build_grid(dim, 12.0, n)
            squares.append(h1m_norm(gaussian_profile(g), WeightParams(m, dim)) ** 2)
        extrapolated = math.sqrt((4.0 * squares[1] - squares[0]) / 3.0)
        assert extrapolated == pytest.approx(expected, rel=1e-6)

    def test_gaussian_weighted_l2_two_dim(self):
        g = build_grid(2, 12.0, 513)
        val = weighted_l2_norm(gaussian_profile(g), WeightParams(2.0, 2))
        assert val == pytest.approx(WL2_G_M2_N2, rel=1e-10)

    def test_h1m_dominates_weighted_l2(self):
        rng = np.random.default_rng(11)
        g = grid1(65)
        w = WeightParams(1.0, 1)
        for _ in range(5):
            f = ScalarField(g, rng.normal(size=g.points_per_axis))
            assert h1m_norm(f, w) >= weighted_l2_norm(f, w)

    def test_l1_controlled_by_weighted_l2(self):
        # Cauchy-Schwarz with the inverse weight gives an f-independent constant.
        g = grid1(129)
        w = WeightParams(1.0, 1)
        inv = ScalarField(g, 1.0 / w.values_on(g))
        constant = math.sqrt(integrate(inv))
        rng = np.random.default_rng(23)
        for _ in range(20):
            f = ScalarField(g, rng.normal(size=g.points_per_axis))
            assert lp_norm(f, 1) <= constant * weighted_l2_norm(f, w) * (1.0 + 1e-12)


class TestGeneratorApplication:
    def test_zero(self):
        g = grid1(65)
        out = fokker_planck(ScalarField(g, np.zeros(g.points_per_axis)))
        assert np.all(out.values == 0.0)

    def test_gaussian_kernel_residual_refines(self):
        errs = []
        for n in (257, 513, 1025):
            g = grid1(n)
            G = gaussian_profile(g)
            errs.append(np.max(np.abs(fokker_planck(G).values)) / np.max(G.values))
        assert errs[0] / errs[1] == pytest.approx(4.0, abs=0.5)
        assert errs[1] / errs[2] == pytest.approx(4.0, abs=0.5)

    def test_first_mode_eigenrelation(self):
        errs = []
        for n in (257, 513):
            g = grid1(n)
            mode = hermite_mode(g, 1)
            resid = fokker_planck(mode).values + 0.5 * mode.values
            errs.append(np.max(np.abs(resid)) / np.max(np.abs(mode.values)))
        assert errs[0] / errs[1] == pytest.approx(4.0, abs=0.5)

    def test_linearity(self):
        rng = np.random.default_rng(3)
        g = grid1(65)
        f1 = ScalarField(g, rng.normal(size=g.points_per_axis))
        f2 = ScalarField(g, rng.normal(size=g.points_per_axis))
        combo = ScalarField(g, 2.0 * f1.values - 0.5 * f2.values)
        direct = fokker_planck(combo).values
        split = 2.0 * fokker_planck(f1).values - 0.5 * fokker_planck(f2).values
        np.testing.assert_allclose(direct, split, atol=1e-12)
