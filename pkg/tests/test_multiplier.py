"""Multiplier weights, sign conditions, and divergence-identity residuals.

Oracles: f' against centered differences; -Lap(f/r) against a 4th-order
finite-difference Laplacian evaluated in 50-digit arithmetic (double
precision is cancellation-limited at large r, where the leading 1/r piece
is harmonic and the target is a small remainder).  Residual checks use
manufactured separable fields with analytic time-derivative stacks.
"""

import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radwave.grids import RadialGrid, RadialProfile
from radwave.multiplier import (
    CoefficientField,
    EnergyReport,
    HyperbolicityError,
    MultiplierSpec,
    building_block_residual,
    energy_identity_report,
    eval_f_fprime,
    identity_residual,
    integrated_identity_gap,
    neg_laplacian_f_over_r,
    q0_density,
    q0_lower_bound_constant,
    refinement_ratio,
    sign_condition_report,
)
from radwave.norms import SpaceTimeField

from tests.conftest import random_smooth_profile

GRID = RadialGrid(3, 8.0, 128)

# Boxes pinned in physical units from the coarsest level; letting the box
# track the grid pulls the 1/r terms toward the origin and spoils the rate.
R_WINDOW = (0.5, 7.5)
T_WINDOW = (1.0 / 16.0, 1.0 - 1.0 / 16.0)

POWER_HALF = MultiplierSpec("power", mu=0.5, R=1.0)
RATIO3 = MultiplierSpec("ratio", R=3.0)
UNIT = MultiplierSpec("unit")

ORACLE_SPECS = [
    MultiplierSpec("power", mu=0.5, R=1.0),
    MultiplierSpec("power", mu=0.3, R=2.0),
    MultiplierSpec("power", mu=1.0, R=0.5),
    RATIO3,
]


def separable_field(num_points: int, steps: int, *, r_max: float = 8.0,
                    T: float = 1.0) -> SpaceTimeField:
    """u = exp(-r^2) cos t with the analytic dt stack."""
    grid = RadialGrid(3, r_max, num_points)
    times = np.linspace(0.0, T, steps + 1)
    prof = np.exp(-grid.r**2)
    vals = prof[None, :] * np.cos(times)[:, None]
    dts = -prof[None, :] * np.sin(times)[:, None]
    return SpaceTimeField(grid, times, vals, dts)


def triangle_field(num_points: int, steps: int) -> SpaceTimeField:
    """Separable field with a radial kink at r = 2; smooth in time."""
    grid = RadialGrid(3, 8.0, num_points)
    times = np.linspace(0.0, 1.0, steps + 1)
    prof = np.maximum(0.0, 1.0 - np.abs(grid.r - 2.0))
    vals = prof[None, :] * np.cos(times)[:, None]
    dts = -prof[None, :] * np.sin(times)[:, None]
    return SpaceTimeField(grid, times, vals, dts)


def dalembert_field(num_points: int, steps: int, *, r_max: float = 16.0,
                    T: float = 1.0) -> SpaceTimeField:
    """Exact flat-wave solution u = (phi(t-r) - phi(t+r))/r, phi a Gaussian."""
    grid = RadialGrid(3, r_max, num_points)
    times = np.linspace(0.0, T, steps + 1)
    tt, rr = np.meshgrid(times, grid.r, indexing="ij")

    def phi(s, k):
        poly = {0: 1.0, 1: -2.0 * (s + 4.0), 2: 4.0 * (s + 4.0) ** 2 - 2.0}[k]
        return poly * np.exp(-((s + 4.0) ** 2))

    with np.errstate(divide="ignore", invalid="ignore"):
        vals = (phi(tt - rr, 0) - phi(tt + rr, 0)) / rr
        dts = (phi(tt - rr, 1) - phi(tt + rr, 1)) / rr
    vals[:, 0] = -2.0 * phi(times, 1)
    dts[:, 0] = -2.0 * phi(times, 2)
    return SpaceTimeField(grid, times, vals, dts)


def perturbed_coefficients(field: SpaceTimeField) -> CoefficientField:
    prof = RadialProfile(field.grid, 0.1 * np.exp(-field.grid.r**2))
    return CoefficientField.static(prof, field.times, delta0=0.5)


def neglap_fd4_highprec(spec: MultiplierSpec, r_val: float, n: int) -> float:
    """4th-order FD Laplacian of f/r at 50-digit precision."""
    mp.mp.dps = 50
    mu, R = mp.mpf(spec.mu_eff), mp.mpf(spec.R)

    def f_over_r(x):
        return (x / (R + x)) ** mu / x

    x = mp.mpf(r_val)
    h = mp.mpf("1e-8") * x
    d2 = (-f_over_r(x + 2 * h) + 16 * f_over_r(x + h) - 30 * f_over_r(x)
          + 16 * f_over_r(x - h) - f_over_r(x - 2 * h)) / (12 * h**2)
    d1 = (-f_over_r(x + 2 * h) + 8 * f_over_r(x + h) - 8 * f_over_r(x - h)
          + f_over_r(x - 2 * h)) / (12 * h)
    return float(-(d2 + (n - 1) / x * d1))


class TestMultiplierSpec:
    def test_rejects_unknown_family(self):
        with pytest.raises(ValueError, match="family"):
            MultiplierSpec("cubic")

    @pytest.mark.parametrize("mu", [0.0, -0.5, 1.5])
    def test_rejects_mu_outside_window(self, mu):
        with pytest.raises(ValueError, match="mu"):
            MultiplierSpec("power", mu=mu)

    @pytest.mark.parametrize("R", [0.0, -2.0])
    def test_rejects_nonpositive_radius(self, R):
        with pytest.raises(ValueError, match="R"):
            MultiplierSpec("ratio", R=R)

    def test_mu_eff_mapping(self):
        assert MultiplierSpec("power", mu=0.7).mu_eff == 0.7
        assert MultiplierSpec("ratio").mu_eff == 1.0
        assert MultiplierSpec("unit").mu_eff == 0.0


class TestEvalF:
    def test_spot_values(self):
        f, fp = eval_f_fprime(POWER_HALF, np.array([1.0]))
        assert f[0] == pytest.approx(2.0**-0.5, rel=1e-15)
        assert fp[0] == pytest.approx(2.0**-2.5, rel=1e-15)

    def test_origin(self):
        f, fp = eval_f_fprime(POWER_HALF, 0.0)
        assert f[0] == 0.0 and fp[0] == np.inf
        f, fp = eval_f_fprime(RATIO3, 0.0)
        assert f[0] == 0.0 and fp[0] == pytest.approx(1.0 / 3.0, rel=1e-15)
        f, fp = eval_f_fprime(UNIT, 0.0)
        assert f[0] == 1.0 and fp[0] == 0.0

    def test_power_mu_one_equals_ratio(self):
        r = np.linspace(0.0, 20.0, 401)
        fa, fpa = eval_f_fprime(MultiplierSpec("power", mu=1.0, R=2.0), r)
        fb, fpb = eval_f_fprime(MultiplierSpec("ratio", R=2.0), r)
        assert np.array_equal(fa, fb) and np.array_equal(fpa, fpb)

    def test_bounded_by_one(self):
        r = np.geomspace(1e-8, 1e8, 300)
        for spec in ORACLE_SPECS + [UNIT]:
            f, _ = eval_f_fprime(spec, r)
            assert np.all(f <= 1.0) and np.all(f >= 0.0)

    @pytest.mark.parametrize("spec", ORACLE_SPECS)
    def test_fprime_against_centered_differences(self, spec):
        r = np.geomspace(0.3, 20.0, 200)
        h = 1e-5
        fd = (eval_f_fprime(spec, r + h)[0] - eval_f_fprime(spec, r - h)[0]) / (2 * h)
        _, fp = eval_f_fprime(spec, r)
        assert np.max(np.abs(fd - fp)) < 1e-8

    def test_rejects_negative_radius(self):
        with pytest.raises(ValueError, match="nonnegative"):
            eval_f_fprime(POWER_HALF, np.array([-0.1, 1.0]))


class TestNegLaplacian:
    def test_unit_n3_vanishes(self):
        r = np.geomspace(1e-3, 1e3, 100)
        assert np.array_equal(neg_laplacian_f_over_r(UNIT, r, 3), np.zeros_like(r))
        assert neg_laplacian_f_over_r(UNIT, 0.0, 3)[0] == 0.0

    def test_unit_higher_dimension(self):
        r = np.geomspace(0.1, 50.0, 60)
        assert neg_laplacian_f_over_r(UNIT, r, 5) == pytest.approx(2.0 / r**3, rel=1e-14)

    @pytest.mark.parametrize("spec", ORACLE_SPECS)
    @pytest.mark.parametrize("n", [3, 5])
    def test_matches_fd4_oracle(self, spec, n):
        r = np.geomspace(0.05, 30.0, 12)
        exact = neg_laplacian_f_over_r(spec, r, n)
        fd = np.array([neglap_fd4_highprec(spec, rv, n) for rv in r])
        assert np.max(np.abs(fd - exact) / np.abs(exact)) < 1e-6

    def test_nonnegative_and_dominates_closed_lower_bound(self):
        r = np.geomspace(1e-6, 1e6, 400)
        for mu, R in [(0.3, 1.0), (0.5, 2.0), (0.7, 0.5), (1.0, 1.0)]:
            spec = MultiplierSpec("power", mu=mu, R=R)
            exact = neg_laplacian_f_over_r(spec, r, 3)
            lower = (1 - mu) * mu * R**2 * r ** (mu - 3) / (R + r) ** (mu + 2)
            lower += mu * R * r ** (mu - 2) / (R + r) ** (mu + 2)
            assert np.all(exact >= 0.0)
            assert np.min(exact - lower) >= -1e-12 * np.max(lower)

    def test_origin_sentinel(self):
        assert neg_laplacian_f_over_r(POWER_HALF, 0.0, 3)[0] == np.inf
        assert neg_laplacian_f_over_r(UNIT, 0.0, 5)[0] == np.inf


class TestQ0Density:
    def test_unit_family_n3_identically_zero(self):
        u = RadialProfile(GRID, np.exp(-GRID.r**2))
        ut = RadialProfile(GRID, -0.3 * np.exp(-GRID.r**2))
        q = q0_density(u, ut, UNIT)
        assert np.array_equal(q.values, np.zeros_like(q.values))
        assert "singular_origin" not in q.flags

    def test_flags_nonzero_origin(self):
        u = RadialProfile(GRID, np.exp(-GRID.r**2))
        ut = RadialProfile(GRID, np.zeros_like(GRID.r))
        q = q0_density(u, ut, POWER_HALF)
        assert "singular_origin" in q.flags
        assert q.values[0] == 0.0

    def test_no_flag_when_snapshot_vanishes_at_origin(self):
        u = RadialProfile(GRID, GRID.r**2 * np.exp(-GRID.r**2))
        ut = RadialProfile(GRID, np.zeros_like(GRID.r))
        q = q0_density(u, ut, POWER_HALF)
        assert "singular_origin" not in q.flags

    def test_rejects_mismatched_grids(self):
        other = RadialGrid(3, 8.0, 256)
        u = RadialProfile(GRID, np.exp(-GRID.r**2))
        ut = RadialProfile(other, np.exp(-other.r**2))
        with pytest.raises(ValueError, match="grids"):
            q0_density(u, ut, POWER_HALF)

    @settings(max_examples=25, deadline=None)
    @given(mu=st.floats(0.05, 1.0), log_R=st.floats(-1.5, 1.5),
           seed=st.integers(0, 2**31 - 1))
    def test_nonnegative_everywhere(self, mu, log_R, seed):
        spec = MultiplierSpec("power", mu=mu, R=10.0**log_R)
        rng = np.random.default_rng(seed)
        u = random_smooth_profile(GRID, rng, num_bumps=3, r_supp=6.0)
        ut = random_smooth_profile(GRID, rng, num_bumps=3, r_supp=6.0)
        q = q0_density(u, ut, spec)
        assert np.all(q.values >= 0.0)


class TestQ0LowerBound:
    # At r = R the gradient part is binding; its closed value there is
    # f'(R) R / 2 = mu / 2^(mu+2).
    @pytest.mark.parametrize("mu", [0.3, 0.5, 0.7])
    def test_constant_positive_with_closed_value(self, mu):
        spec = MultiplierSpec("power", mu=mu, R=2.0)
        c, arg = q0_lower_bound_constant(spec, GRID)
        assert c == pytest.approx(mu / 2.0 ** (mu + 2.0), rel=1e-12)
        assert arg == 2.0

    def test_mu_one_degenerates_at_origin(self):
        c, arg = q0_lower_bound_constant(MultiplierSpec("power", mu=1.0, R=2.0), GRID)
        assert 0.0 < c < 0.05
        assert arg == GRID.r[1]

    def test_snapshots_respect_the_bound(self):
        spec = MultiplierSpec("power", mu=0.5, R=2.0)
        c, _ = q0_lower_bound_constant(spec, GRID)
        rng = np.random.default_rng(7)
        r = GRID.r
        inside = (r > 0.0) & (r <= spec.R)
        for _ in range(5):
            u = random_smooth_profile(GRID, rng, num_bumps=3, r_supp=6.0)
            ut = random_smooth_profile(GRID, rng, num_bumps=3, r_supp=6.0)
            q = q0_density(u, ut, spec).values
            from radwave.calculus import fd_radial_derivative

            ur = fd_radial_derivative(u).values
            grad = ut.values**2 + ur**2 + (u.values / np.where(r > 0, r, 1.0)) ** 2
            weight = spec.R**0.5 * r**0.5
            mask = inside & (grad > 1e-20)
            ratios = q[mask] * weight[mask] / grad[mask]
            assert np.min(ratios) >= c - 1e-12

    def test_rejects_grid_without_interior_nodes(self):
        with pytest.raises(ValueError, match="no nodes"):
            q0_lower_bound_constant(MultiplierSpec("power", mu=0.5, R=1e-4), GRID)


class TestSignConditions:
    BASE_KEYS = {
        "f_le_one",
        "fprime_nonneg",
        "f_over_r_dominates_fprime",
        "doubling_lower",
        "f_dominates_r_fprime",
        "neg_laplacian_nonneg",
    }

    @pytest.mark.parametrize("R", [1e-2, 1.0, 1e2])
    def test_power_family_passes(self, R):
        report = sign_condition_report(MultiplierSpec("power", mu=0.5, R=R))
        assert report.all_passed
        assert set(report.margins) == self.BASE_KEYS

    def test_unit_attains_equality(self):
        report = sign_condition_report(UNIT)
        assert report.all_passed
        assert report.margins["f_le_one"] == 0.0

    def test_ratio_shell_coefficients(self):
        report = sign_condition_report(RATIO3)
        assert report.all_passed
        assert report.margins["shell_gradient_coefficient"] == pytest.approx(0.0, abs=1e-12)
        assert report.margins["shell_mass_coefficient"] == pytest.approx(0.0, abs=1e-12)

    def test_shell_keys_only_for_mu_one(self):
        with_shell = sign_condition_report(MultiplierSpec("power", mu=1.0, R=2.0))
        assert "shell_gradient_coefficient" in with_shell.margins
        without = sign_condition_report(POWER_HALF)
        assert "shell_gradient_coefficient" not in without.margins

    @settings(max_examples=25, deadline=None)
    @given(mu=st.floats(0.05, 1.0), log_R=st.floats(-2.0, 2.0))
    def test_power_family_random_parameters(self, mu, log_R):
        report = sign_condition_report(MultiplierSpec("power", mu=mu, R=10.0**log_R))
        assert report.all_passed


class TestBuildingBlocks:
    PAIRS = [("t", "t"), ("t", "r"), ("r", "r")]

    def test_zero_field(self):
        zeros = np.zeros((33, GRID.num_points + 1))
        u = SpaceTimeField(GRID, np.linspace(0, 1, 33), zeros, zeros)
        for a, b in self.PAIRS:
            assert building_block_residual(u, a, b) == 0.0

    def test_constant_field(self):
        ones = np.ones((33, GRID.num_points + 1))
        u = SpaceTimeField(GRID, np.linspace(0, 1, 33), ones, np.zeros_like(ones))
        for a, b in self.PAIRS:
            assert building_block_residual(u, a, b) <= 1e-12

    @pytest.mark.parametrize("pair", PAIRS)
    def test_second_order_refinement(self, pair):
        coarse = building_block_residual(
            separable_field(128, 32), *pair, r_window=R_WINDOW, t_window=T_WINDOW
        )
        fine = building_block_residual(
            separable_field(256, 64), *pair, r_window=R_WINDOW, t_window=T_WINDOW
        )
        assert 3.6 <= coarse / fine <= 4.4

    def test_mixed_pair_order_irrelevant(self):
        u = separable_field(128, 32)
        a = building_block_residual(u, "t", "r", r_window=R_WINDOW, t_window=T_WINDOW)
        b = building_block_residual(u, "r", "t", r_window=R_WINDOW, t_window=T_WINDOW)
        assert a == b

    def test_rejects_unknown_axis(self):
        u = separable_field(64, 16)
        with pytest.raises(ValueError, match="axes"):
            building_block_residual(u, "t", "x")

    def test_rejects_empty_box(self):
        u = separable_field(64, 16)
        with pytest.raises(ValueError, match="no nodes"):
            building_block_residual(u, "t", "t", r_window=(7.9, 7.95))

    def test_rejects_box_touching_origin(self):
        u = separable_field(64, 16)
        with pytest.raises(ValueError, match="origin"):
            building_block_residual(u, "t", "t", r_window=(0.0, 7.5))


class TestIdentityResidual:
    def test_flat_unit_second_order(self):
        resids = [
            identity_residual(
                separable_field(npts, steps),
                CoefficientField.flat(RadialGrid(3, 8.0, npts),
                                      np.linspace(0, 1, steps + 1)),
                UNIT,
                r_window=R_WINDOW,
                t_window=T_WINDOW,
            )
            for npts, steps in [(128, 32), (256, 64)]
        ]
        assert 3.6 <= resids[0] / resids[1] <= 4.4

    def test_perturbed_second_order(self):
        resids = []
        for npts, steps in [(128, 32), (256, 64)]:
            field = separable_field(npts, steps)
            resids.append(
                identity_residual(
                    field,
                    perturbed_coefficients(field),
                    POWER_HALF,
                    r_window=R_WINDOW,
                    t_window=T_WINDOW,
                )
            )
        assert resids[0] < 0.1
        assert 3.6 <= resids[0] / resids[1] <= 4.4

    def test_divergence_bookkeeping(self):
        gaps = []
        for npts, steps in [(128, 32), (256, 64)]:
            field = separable_field(npts, steps)
            gaps.append(
                integrated_identity_gap(
                    field,
                    perturbed_coefficients(field),
                    POWER_HALF,
                    r_window=R_WINDOW,
                    t_window=T_WINDOW,
                )
            )
        assert gaps[0] < 2e-4
        assert 3.6 <= gaps[0] / gaps[1] <= 4.4

    def test_rejects_nonhyperbolic_coefficients(self):
        field = separable_field(64, 16)
        bad = RadialProfile(field.grid, -1.5 * np.exp(-field.grid.r**2 / 30.0))
        coeff = CoefficientField.static(bad, field.times, delta0=0.25)
        with pytest.raises(HyperbolicityError):
            identity_residual(field, coeff, POWER_HALF)

    def test_rejects_mismatched_grid(self):
        field = separable_field(64, 16)
        coeff = CoefficientField.flat(RadialGrid(3, 8.0, 128), field.times)
        with pytest.raises(ValueError, match="different grid"):
            identity_residual(field, coeff, UNIT)

    def test_rejects_mismatched_times(self):
        field = separable_field(64, 16)
        coeff = CoefficientField.flat(field.grid, field.times + 0.5)
        with pytest.raises(ValueError, match="time levels"):
            identity_residual(field, coeff, UNIT)


class TestCoefficientField:
    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError, match="shape"):
            CoefficientField(GRID, np.linspace(0, 1, 5), np.zeros((5, 7)))

    def test_rejects_bad_delta0(self):
        g = np.zeros((5, GRID.num_points + 1))
        with pytest.raises(ValueError, match="delta0"):
            CoefficientField(GRID, np.linspace(0, 1, 5), g, delta0=1.5)

    def test_rejects_nonuniform_times(self):
        g = np.zeros((4, GRID.num_points + 1))
        with pytest.raises(ValueError, match="uniformly"):
            CoefficientField(GRID, np.array([0.0, 0.1, 0.3, 0.35]), g)

    def test_margin_and_validation(self):
        prof = RadialProfile(GRID, 0.5 * np.exp(-GRID.r**2))
        coeff = CoefficientField.static(prof, np.linspace(0, 1, 5), delta0=0.25)
        assert coeff.hyperbolicity_margin == pytest.approx(0.75, rel=1e-12)
        coeff.validate_hyperbolic()
        tight = CoefficientField.static(prof, np.linspace(0, 1, 5), delta0=0.75)
        assert tight.hyperbolicity_margin < 0.0
        with pytest.raises(HyperbolicityError, match="outside"):
            tight.validate_hyperbolic()

    def test_flat_constructor(self):
        coeff = CoefficientField.flat(GRID, np.linspace(0, 1, 5))
        assert np.array_equal(coeff.g, np.zeros_like(coeff.g))
        assert coeff.hyperbolicity_margin == pytest.approx(0.75, rel=1e-12)


class TestRefinementRatio:
    def test_clean_ratio_stays_silent(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert refinement_ratio(4.0e-3, 1.0e-3) == 4.0

    def test_degraded_ratio_warns(self):
        coarse = building_block_residual(
            triangle_field(128, 32), "r", "r", r_window=R_WINDOW, t_window=T_WINDOW
        )
        fine = building_block_residual(
            triangle_field(256, 64), "r", "r", r_window=R_WINDOW, t_window=T_WINDOW
        )
        with pytest.warns(RuntimeWarning, match="order-2"):
            ratio = refinement_ratio(coarse, fine)
        assert ratio < 3.6

    def test_degenerate_inputs(self):
        assert refinement_ratio(1.0, 0.0) == np.inf
        assert np.isnan(refinement_ratio(0.0, 0.0))


class TestEnergyReport:
    def test_flat_solution_conserves(self):
        field = dalembert_field(512, 128)
        coeff = CoefficientField.flat(field.grid, field.times)
        report = energy_identity_report(field, coeff)
        assert isinstance(report, EnergyReport)
        assert report.max_bound == 0.0
        scale = float(np.mean(report.energies))
        assert report.max_rate <= 5e-5 * scale

    def test_drift_shrinks_at_second_order(self):
        rates = []
        for npts, steps in [(256, 64), (512, 128)]:
            field = dalembert_field(npts, steps)
            coeff = CoefficientField.flat(field.grid, field.times)
            rates.append(energy_identity_report(field, coeff).max_rate)
        assert 3.0 <= rates[0] / rates[1] <= 5.0

    def test_static_coefficients_produce_majorant(self):
        field = dalembert_field(256, 64)
        prof = RadialProfile(field.grid, 0.2 * np.exp(-((field.grid.r - 4.0) ** 2)))
        coeff = CoefficientField.static(prof, field.times, delta0=0.5)
        report = energy_identity_report(field, coeff)
        assert report.rates.shape == (len(field.times) - 2,)
        assert report.bounds.shape == (len(field.times) - 2,)
        assert report.max_bound > 0.0

    def test_rejects_mismatched_coefficients(self):
        field = dalembert_field(256, 64)
        coeff = CoefficientField.flat(RadialGrid(3, 16.0, 128), field.times)
        with pytest.raises(ValueError, match="different grid"):
            energy_identity_report(field, coeff)
