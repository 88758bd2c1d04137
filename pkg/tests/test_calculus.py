"""Dyadic cutoffs, fractional derivatives, the X field, and weights."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radwave.calculus import (
    DyadicCutoff,
    WeightSpec,
    apply_weight,
    fd_radial_derivative,
    fractional_derivative,
    lp_project,
    smooth_step,
    spectral_radial_derivative,
    x_multiplier_apply,
)
from radwave.grids import (
    RadialGrid,
    RadialProfile,
    SpectralProfile,
    forward_transform,
    inverse_transform,
    l2_norm,
)
from tests.conftest import random_smooth_profile


def band_limited_profile(grid: RadialGrid, rng: np.random.Generator) -> RadialProfile:
    """Profile whose spectrum is confined to the resolvable dyadic band."""
    cutoff = DyadicCutoff.for_grid(grid)
    raw = forward_transform(random_smooth_profile(grid, rng))
    rho = grid.rho
    mask = cutoff.low_pass(rho * 2.0 ** (-(cutoff.j_max - 1))) * (
        1.0 - cutoff.low_pass(rho * 2.0 ** (-cutoff.j_min))
    )
    return inverse_transform(raw.with_values(raw.values * mask))


def fd4_laplacian(vals: np.ndarray, grid: RadialGrid) -> np.ndarray:
    # independent 4th-order oracle for Delta f = f'' + ((n-1)/r) f', interior only
    h = grid.spacing
    r = grid.r
    d1 = (vals[:-4] - 8 * vals[1:-3] + 8 * vals[3:-1] - vals[4:]) / (12 * h)
    d2 = (-vals[:-4] + 16 * vals[1:-3] - 30 * vals[2:-2] + 16 * vals[3:-1] - vals[4:]) / (
        12 * h * h
    )
    return d2 + (grid.n - 1) / r[2:-2] * d1


class TestSmoothStep:
    def test_clamps(self):
        assert smooth_step(-1.0) == 0.0
        assert smooth_step(0.0) == 0.0
        assert smooth_step(1.0) == 1.0
        assert smooth_step(2.0) == 1.0

    def test_monotone(self):
        x = np.linspace(-0.5, 1.5, 401)
        assert np.all(np.diff(smooth_step(x)) >= 0.0)


class TestDyadicCutoff:
    def test_phi_support(self, grid3):
        cutoff = DyadicCutoff.for_grid(grid3)
        xi = np.array([0.0, 0.25, 0.5, 2.0, 3.0, 100.0])
        assert np.all(cutoff.phi(xi) == 0.0)
        inside = np.linspace(0.6, 1.9, 50)
        assert np.all(cutoff.phi(inside) >= 0.0)
        assert cutoff.phi(1.0) == pytest.approx(1.0)

    def test_partition_of_unity(self, grid3):
        cutoff = DyadicCutoff.for_grid(grid3)
        xi = np.geomspace(2.0**cutoff.j_min, 2.0**cutoff.j_max, 300)
        total = sum(cutoff.phi(xi * 2.0 ** (-j)) for j in cutoff.js)
        assert np.max(np.abs(total - 1.0)) <= 1e-12

    @settings(max_examples=30, deadline=None)
    @given(log_xi=st.floats(min_value=-3.0, max_value=6.0))
    def test_partition_pointwise(self, log_xi):
        cutoff = DyadicCutoff(j_min=-3, j_max=6)
        xi = 2.0**log_xi
        total = sum(float(cutoff.phi(xi * 2.0 ** (-j))) for j in cutoff.js)
        assert abs(total - 1.0) <= 1e-12

    def test_for_grid_band_fits(self, grid3):
        cutoff = DyadicCutoff.for_grid(grid3)
        assert 2.0 ** (cutoff.j_min - 1) >= np.pi / grid3.r_max - 1e-15
        assert 2.0 ** (cutoff.j_max + 1) <= np.pi / grid3.spacing + 1e-12
        assert cutoff.j_min < 0 < cutoff.j_max

    def test_empty_band_rejected(self):
        with pytest.raises(ValueError):
            DyadicCutoff(j_min=3, j_max=1)


class TestLpProject:
    def test_blocks_sum_to_identity(self, grid3, rng):
        f = band_limited_profile(grid3, rng)
        cutoff = DyadicCutoff.for_grid(grid3)
        total = np.zeros_like(f.values)
        for j in cutoff.js:
            total += lp_project(f, j, cutoff).values
        assert np.max(np.abs(total - f.values)) <= 1e-10 * np.max(np.abs(f.values))

    def test_distant_blocks_vanish(self, grid3):
        cutoff = DyadicCutoff.for_grid(grid3)
        j0 = 2
        packet_hat = cutoff.phi(grid3.rho * 2.0 ** (-j0))
        f = inverse_transform(SpectralProfile(grid3, packet_hat))
        for k in [j0 - 3, j0 - 2, j0 + 2, j0 + 3]:
            block = lp_project(f, k, cutoff)
            assert np.max(np.abs(block.values)) <= 1e-12 * np.max(np.abs(f.values))

    def test_out_of_band_flagged(self, grid3, rng):
        f = random_smooth_profile(grid3, rng)
        cutoff = DyadicCutoff.for_grid(grid3)
        block = lp_project(f, cutoff.j_max + 1, cutoff)
        assert np.all(block.values == 0.0)
        assert "band_limit" in block.flags

    def test_almost_orthogonality_constants(self, grid3, rng):
        f = band_limited_profile(grid3, rng)
        cutoff = DyadicCutoff.for_grid(grid3)
        total_sq = sum(l2_norm(lp_project(f, j, cutoff)) ** 2 for j in cutoff.js)
        ratio = total_sq / l2_norm(f) ** 2
        # square-function constants: bounded above by 1 (sum phi_j^2 <= 1) and
        # below by min over xi of sum phi_j(xi)^2
        assert 0.25 <= ratio <= 1.0 + 1e-12


class TestFractionalDerivative:
    def test_order_zero_is_identity(self, grid3, rng):
        f = random_smooth_profile(grid3, rng)
        g = fractional_derivative(f, 0.0)
        assert np.max(np.abs(g.values - f.values)) <= 1e-12 * np.max(np.abs(f.values))

    def test_order_two_matches_fd_laplacian(self, grid3):
        f = RadialProfile(grid3, np.exp(-(grid3.r**2) / 2.0))
        got = fractional_derivative(f, 2.0)
        oracle = -fd4_laplacian(f.values, grid3)
        err = np.max(np.abs(got.values[2:-2] - oracle))
        assert err <= 1e-6 * np.max(np.abs(oracle))

    def test_half_order_semigroup(self, grid3, rng):
        f = band_limited_profile(grid3, rng)
        twice = fractional_derivative(fractional_derivative(f, 0.5), 0.5)
        once = fractional_derivative(f, 1.0)
        scale = np.max(np.abs(once.values))
        assert np.max(np.abs(twice.values - once.values)) <= 1e-10 * scale

    def test_homogeneity_power_of_two(self, grid3, rng):
        f = random_smooth_profile(grid3, rng)
        lhs = fractional_derivative(f.with_values(2.0 * f.values), 1.5)
        rhs = fractional_derivative(f, 1.5)
        assert np.array_equal(lhs.values, 2.0 * rhs.values)

    @pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
    def test_rescaling_law(self, grid3, theta):
        def gen(r):
            return np.exp(-(r**2) / 2.0) - 0.4 * np.exp(-((r / 1.7) ** 2))

        lam = 2.0
        f = RadialProfile(grid3, gen(grid3.r))
        f_lam = RadialProfile(grid3, gen(lam * grid3.r))
        lhs = l2_norm(fractional_derivative(f_lam, theta))
        rhs = lam ** (theta - grid3.n / 2.0) * l2_norm(fractional_derivative(f, theta))
        assert lhs == pytest.approx(rhs, rel=1e-6)

    def test_deep_negative_needs_opt_in(self, grid3, rng):
        f = random_smooth_profile(grid3, rng)
        with pytest.raises(ValueError):
            fractional_derivative(f, -2.5)
        g = fractional_derivative(f, -2.5, allow_deep_negative=True)
        assert "deep_negative_order" in g.flags

    def test_order_window_enforced(self, grid3, rng):
        f = random_smooth_profile(grid3, rng)
        with pytest.raises(ValueError):
            fractional_derivative(f, 4.5)
        with pytest.raises(ValueError):
            fractional_derivative(f, -3.0, allow_deep_negative=True)

    def test_resolution_warning_on_high_band(self, grid3):
        cutoff = DyadicCutoff.for_grid(grid3)
        packet_hat = cutoff.phi(grid3.rho * 2.0 ** (-cutoff.j_max))
        f = inverse_transform(SpectralProfile(grid3, packet_hat))
        g = fractional_derivative(f, 1.0)
        assert "resolution_warning" in g.flags

    def test_no_warning_on_smooth_bump(self, grid3, rng):
        f = random_smooth_profile(grid3, rng)
        g = fractional_derivative(f, 1.0)
        assert "resolution_warning" not in g.flags

    def test_commutes_with_projection(self, grid3, rng):
        f = band_limited_profile(grid3, rng)
        cutoff = DyadicCutoff.for_grid(grid3)
        j = 2
        ab = lp_project(fractional_derivative(f, 0.75), j, cutoff)
        ba = fractional_derivative(lp_project(f, j, cutoff), 0.75)
        scale = np.max(np.abs(ab.values)) + 1e-300
        assert np.max(np.abs(ab.values - ba.values)) <= 1e-10 * scale


class TestRadialDerivatives:
    def test_spectral_derivative_gaussian(self, grid3):
        f = RadialProfile(grid3, np.exp(-(grid3.r**2) / 2.0))
        got = spectral_radial_derivative(f)
        expected = -grid3.r * np.exp(-(grid3.r**2) / 2.0)
        assert np.max(np.abs(got.values - expected)) <= 1e-10

    def test_spectral_derivative_n5(self, grid5):
        f = RadialProfile(grid5, np.exp(-(grid5.r**2) / 2.0))
        got = spectral_radial_derivative(f)
        expected = -grid5.r * np.exp(-(grid5.r**2) / 2.0)
        assert np.max(np.abs(got.values - expected)) <= 1e-8

    def test_fd_derivative_polynomial_exact(self, grid3):
        # 6th-order stencil differentiates degree-6 polynomials exactly
        r = grid3.r
        vals = 1.0 + r - 0.5 * r**2 + r**3 / 48.0
        got = fd_radial_derivative(RadialProfile(grid3, vals))
        expected = 1.0 - r + r**2 / 16.0
        assert np.max(np.abs(got.values - expected)) <= 1e-7 * np.max(np.abs(expected))


class TestXMultiplier:
    def test_gaussian_closed_form(self, grid3):
        u = RadialProfile(grid3, np.exp(-(grid3.r**2)))
        got = x_multiplier_apply(u)
        r = grid3.r[1:]
        expected = (-2.0 * r + 1.0 / r) * np.exp(-(r**2))
        err = np.max(np.abs(got.values[1:] - expected))
        assert err <= 1e-8 * np.max(np.abs(expected))
        assert "singular_origin" in got.flags
        assert got.values[0] == 0.0

    def test_annihilates_inverse_power(self, grid3):
        vals = np.zeros(grid3.num_points + 1)
        vals[1:] = 1.0 / grid3.r[1:]
        got = x_multiplier_apply(RadialProfile(grid3, vals))
        far = grid3.r >= 2.0
        assert np.max(np.abs(got.values[far])) <= 1e-8

    def test_zero_input(self, grid3):
        u = RadialProfile(grid3, np.zeros(grid3.num_points + 1))
        got = x_multiplier_apply(u)
        assert np.all(got.values == 0.0)
        assert "singular_origin" not in got.flags

    def test_origin_limit_for_vanishing_profile(self, grid3):
        # u(0) = 0 with slope 1: Xu(0) -> (n+1)/2 * u'(0) = 2
        u = RadialProfile(grid3, grid3.r * np.exp(-(grid3.r**2)))
        got = x_multiplier_apply(u)
        assert "singular_origin" not in got.flags
        assert got.values[0] == pytest.approx(2.0, rel=1e-6)


class TestWeights:
    def test_identity_weight(self, grid3, rng):
        f = random_smooth_profile(grid3, rng)
        g = apply_weight(f, WeightSpec(0.0, 0.0))
        assert np.array_equal(g.values, f.values)

    def test_origin_bracket_value(self, grid3, rng):
        f = random_smooth_profile(grid3, rng)
        g = apply_weight(f, WeightSpec(0.0, 1.0))
        assert g.values[0] == pytest.approx(np.sqrt(2.0) * f.values[0], rel=1e-15)

    def test_reciprocal_inhomogeneous(self, grid3, rng):
        f = random_smooth_profile(grid3, rng)
        g = apply_weight(apply_weight(f, WeightSpec(0.0, 1.3)), WeightSpec(0.0, -1.3))
        assert np.max(np.abs(g.values - f.values)) <= 1e-12 * np.max(np.abs(f.values))

    def test_reciprocal_homogeneous_interior(self, grid3, rng):
        f = random_smooth_profile(grid3, rng)
        g = apply_weight(apply_weight(f, WeightSpec(0.7, -0.5)), WeightSpec(-0.7, 0.5))
        err = np.max(np.abs(g.values[1:] - f.values[1:]))
        assert err <= 1e-12 * np.max(np.abs(f.values))

    def test_singular_origin_flagged(self, grid3):
        vals = np.ones(grid3.num_points + 1)
        g = apply_weight(RadialProfile(grid3, vals), WeightSpec(-0.5, 0.0))
        assert "singular_origin" in g.flags
        assert g.values[0] == 0.0

    def test_a2_power_weight_window(self):
        # r^{2 beta} is A_2 on R^3 iff |2 beta| < 3
        assert WeightSpec(2.9, 0.0).a_p_admissible(2.0, 3)
        assert not WeightSpec(3.0, 0.0).a_p_admissible(2.0, 3)
        assert WeightSpec(-2.9, 0.0).a_p_admissible(2.0, 3)
        assert not WeightSpec(-3.0, 0.0).a_p_admissible(2.0, 3)

    def test_global_exponent_checked(self):
        assert not WeightSpec(-1.0, -2.5).a_p_admissible(2.0, 3)
        assert WeightSpec(-1.0, -1.5).a_p_admissible(2.0, 3)

    @settings(max_examples=40, deadline=None)
    @given(
        d1=st.floats(min_value=0.0, max_value=0.5),
        d2=st.floats(min_value=0.0, max_value=0.9),
        p=st.sampled_from([1.0, 1.5, 2.0, 4.0]),
    )
    def test_reference_box_inside_classical_window(self, d1, d2, p):
        # every (d1, d2) sampled here satisfies 0 <= 1-2d1 <= 1+2d2 < n, the
        # sufficient box guaranteeing A_p for all p
        n = 3
        w = WeightSpec(-1.0 + 2.0 * d1, -2.0 * d1 - 2.0 * d2)
        assert w.in_reference_box(n)
        assert w.a_p_admissible(p, n)
