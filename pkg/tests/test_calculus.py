"""Left-point sum algebra: exact identities first (symbolic oracles),
refinement behavior second (seeded ensembles)."""

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from fractalmarket import (
    DomainError,
    GridMismatchError,
    InvariantError,
    Partition,
    SamplePath,
    function_of_z_integral,
    integral_qv_residual,
    integration_by_parts_residual,
    ito_formula_residual,
    quadratic_variation,
    stieltjes_integral,
)
from fractalmarket.calculus import (
    PHI_FUNCTIONS,
    SCALAR_FIELDS,
    abel_identity_gap,
    affine_phi,
    cross_quadratic_sum,
)

from conftest import make_fbm


def path_on_unit_grid(values):
    values = np.asarray(values, dtype=np.float64)
    return SamplePath(np.linspace(0.0, 1.0, len(values)), values)


finite_values = st.lists(
    st.floats(min_value=-10, max_value=10, allow_nan=False), min_size=2, max_size=40
)


class TestStieltjesIntegral:
    def test_telescoping(self):
        x = make_fbm(num_steps=128, seed=4)
        ones = x.with_values(np.ones(len(x)))
        integral = stieltjes_integral(ones, x)
        np.testing.assert_allclose(
            integral.values, x.values - x.values[0], rtol=0, atol=1e-13
        )

    def test_left_sum_of_t_dt(self):
        # oracle: sum t_i (t_{i+1} - t_i) over the uniform grid is (n-1)/(2n).
        n = 1000
        times = np.linspace(0.0, 1.0, n + 1)
        t_path = SamplePath(times, times)
        result = stieltjes_integral(t_path, t_path)
        assert result.terminal == pytest.approx((n - 1) / (2 * n), abs=1e-12)
        assert result.terminal == pytest.approx(0.4995, abs=1e-12)

    def test_self_integral_half_square_minus_half_qv(self):
        # sum Z_i dZ_i = (Z_T^2 - Z_0^2)/2 - QV/2 exactly (Abel); the
        # closed form Z_T^2/2 is approached as QV -> 0.
        z = make_fbm(num_steps=512, seed=8)
        lhs = stieltjes_integral(z, z).terminal
        rhs = 0.5 * (z.terminal**2 - z.values[0] ** 2) - 0.5 * quadratic_variation(z)
        assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_fixture_converges_to_half_square(self):
        # Rescale one frozen path so Z_T = 0.8; the self-integral must
        # approach 0.32 through dyadic refinement.
        fine = make_fbm(num_steps=2**14, seed=74)
        scale = 0.8 / fine.terminal
        fine = fine.with_values(fine.values * scale)
        errors = []
        for level in (6, 8, 10, 12, 14):
            z = fine.subsample(2 ** (14 - level))
            errors.append(abs(stieltjes_integral(z, z).terminal - 0.32))
        assert errors == sorted(errors, reverse=True)
        assert errors[-1] < 0.02

    def test_grid_mismatch(self):
        a = path_on_unit_grid([0.0, 1.0, 2.0])
        b = SamplePath(np.array([0.0, 0.4, 1.0]), np.zeros(3))
        with pytest.raises(GridMismatchError):
            stieltjes_integral(a, b)

    @given(finite_values, finite_values.filter(lambda v: len(v) >= 2),
           st.floats(-5, 5), st.floats(-5, 5))
    @settings(max_examples=60, deadline=None)
    def test_linearity(self, y1, y2, a, b):
        n = min(len(y1), len(y2))
        if n < 2:
            return
        y1, y2 = np.asarray(y1[:n]), np.asarray(y2[:n])
        x = path_on_unit_grid(np.linspace(0.0, 1.0, n) ** 2)
        p1, p2 = x.with_values(y1), x.with_values(y2)
        combined = stieltjes_integral(x.with_values(a * y1 + b * y2), x)
        split = a * stieltjes_integral(p1, x).values + b * stieltjes_integral(p2, x).values
        np.testing.assert_allclose(combined.values, split, rtol=0, atol=1e-12)


class TestQuadraticVariation:
    def test_linear_path(self):
        for n in (10, 100, 1000):
            times = np.linspace(0.0, 1.0, n + 1)
            assert quadratic_variation(SamplePath(times, times)) == pytest.approx(
                1.0 / n, rel=1e-12
            )

    def test_brownian_mean_is_horizon(self):
        qvs = [quadratic_variation(make_fbm(hurst=0.5, num_steps=1024, seed=s))
               for s in range(400)]
        assert np.mean(qvs) == pytest.approx(1.0, rel=0.02)

    def test_persistent_mean(self):
        qvs = [quadratic_variation(make_fbm(num_steps=1024, seed=s))
               for s in range(400)]
        assert np.mean(qvs) == pytest.approx(0.0625, rel=0.05)

    def test_needs_two_points(self):
        with pytest.raises(DomainError):
            quadratic_variation(SamplePath([0.0], [0.0]))


class TestItoResidual:
    @pytest.mark.parametrize("name", ["z", "t"])
    @pytest.mark.parametrize("n", [64, 1024, 4096])
    def test_exact_fields(self, name, n):
        z = make_fbm(num_steps=n, seed=17)
        assert ito_formula_residual(SCALAR_FIELDS[name], z) <= 1e-12

    def test_square_equals_qv(self):
        # residual of F = z^2 collapses to sum (dZ)^2; oracle is the QV op
        # plus a direct diff-square evaluation.
        z = make_fbm(num_steps=512, seed=23)
        residual = ito_formula_residual(SCALAR_FIELDS["z_squared"], z)
        direct = float(np.sum(np.diff(z.values) ** 2))
        assert residual == pytest.approx(quadratic_variation(z), abs=1e-12)
        assert residual == pytest.approx(direct, abs=1e-12)

    def test_tz_equals_dt_times_terminal(self):
        # uniform grid: residual = |sum dt dZ| = dt |Z_T - Z_0|.
        n = 256
        z = make_fbm(num_steps=n, seed=29)
        expected = abs(z.terminal - z.values[0]) / n
        assert ito_formula_residual(SCALAR_FIELDS["tz"], z) == pytest.approx(
            expected, abs=1e-13
        )

    @pytest.mark.parametrize("name", ["z_squared", "exp_z", "t2_plus_sin_z"])
    def test_refinement_decreases(self, name):
        field = SCALAR_FIELDS[name]
        levels = (6, 8, 10)
        means = []
        for level in levels:
            residuals = [
                ito_formula_residual(
                    field, make_fbm(num_steps=2**10, seed=s).subsample(2 ** (10 - level))
                )
                for s in range(200)
            ]
            means.append(np.mean(residuals))
        assert means[0] > means[1] > means[2]

    def test_non_finite_derivative_raises(self):
        from fractalmarket.calculus import ScalarField
        from fractalmarket import NumericDomainError

        bad = ScalarField(
            "bad",
            lambda t, z: z,
            lambda t, z: np.full_like(t, np.inf),
            lambda t, z: np.ones_like(z),
        )
        with pytest.raises(NumericDomainError):
            ito_formula_residual(bad, make_fbm(num_steps=16, seed=0))


class TestIntegrationByParts:
    def test_constant_w_collapses(self):
        z = make_fbm(num_steps=128, seed=31)
        w = z.with_values(np.full(len(z), 3.7))
        assert integration_by_parts_residual(w, z) <= 1e-12

    def test_w_equals_z_gives_qv(self):
        z = make_fbm(num_steps=256, seed=37)
        assert integration_by_parts_residual(z, z) == pytest.approx(
            quadratic_variation(z), abs=1e-12
        )

    def test_three_point_symbolic_expansion(self):
        # sympy oracle: the discrete identity
        # sum W dZ + sum Z dW + sum dW dZ = Z_T W_T - Z_0 W_0 is an exact
        # polynomial identity in the grid values.
        w0, w1, w2, z0, z1, z2 = sympy.symbols("w0 w1 w2 z0 z1 z2")
        w_dz = w0 * (z1 - z0) + w1 * (z2 - z1)
        z_dw = z0 * (w1 - w0) + z1 * (w2 - w1)
        cross = (w1 - w0) * (z1 - z0) + (w2 - w1) * (z2 - z1)
        assert sympy.simplify(w_dz + z_dw + cross - (z2 * w2 - z0 * w0)) == 0

    @given(finite_values, finite_values)
    @settings(max_examples=60, deadline=None)
    def test_abel_identity_exact(self, w_vals, z_vals):
        n = min(len(w_vals), len(z_vals))
        if n < 2:
            return
        w = path_on_unit_grid(w_vals[:n])
        z = path_on_unit_grid(z_vals[:n])
        assert abel_identity_gap(w, z) <= 1e-12 * max(
            1.0, np.max(np.abs(w.values)) * np.max(np.abs(z.values)) * n
        )

    def test_cross_term_decreases_for_brownian_vs_fbm(self):
        rng_levels = (6, 8, 10)
        means = []
        for level in rng_levels:
            values = []
            for s in range(300):
                z = make_fbm(num_steps=2**10, seed=s).subsample(2 ** (10 - level))
                w = make_fbm(hurst=0.5, num_steps=2**10, seed=10_000 + s).subsample(
                    2 ** (10 - level)
                )
                values.append(abs(cross_quadratic_sum(w, z)))
            means.append(np.mean(values))
        assert means[0] > means[1] > means[2]


class TestIntegralQv:
    def levels(self):
        return [Partition.dyadic(k) for k in (5, 7, 9)]

    def test_zero_integrand(self):
        z = make_fbm(num_steps=512, seed=41)
        sigma = z.with_values(np.zeros(len(z)))
        report = integral_qv_residual(sigma, z, self.levels())
        assert report.residuals == [0.0, 0.0, 0.0]

    def test_unit_integrand_reproduces_modulator_qv(self):
        z = make_fbm(num_steps=512, seed=43)
        sigma = z.with_values(np.ones(len(z)))
        report = integral_qv_residual(sigma, z, self.levels())
        for partition, got in zip(self.levels(), report.residuals):
            stride = 512 // partition.num_intervals
            assert got == pytest.approx(
                quadratic_variation(z.subsample(stride)), abs=1e-12
            )

    def test_unit_integrand_slope(self):
        slopes = []
        partitions = [Partition.dyadic(k) for k in (6, 8, 10)]
        mean_res = np.zeros(3)
        for s in range(300):
            z = make_fbm(num_steps=2**10, seed=s)
            sigma = z.with_values(np.ones(len(z)))
            mean_res += integral_qv_residual(sigma, z, partitions).residuals
        mean_res /= 300
        slope = np.polyfit(np.log([2.0**6, 2.0**8, 2.0**10]), np.log(mean_res), 1)[0]
        assert slope == pytest.approx(-0.4, abs=0.1)

    def test_requires_nested_refinements(self):
        z = make_fbm(num_steps=512, seed=47)
        sigma = z.with_values(np.ones(len(z)))
        bad = [Partition(np.array([0.0, 0.3, 1.0])), Partition.dyadic(3)]
        with pytest.raises(InvariantError):
            integral_qv_residual(sigma, z, bad)

    def test_requires_coarse_to_fine_order(self):
        z = make_fbm(num_steps=512, seed=47)
        sigma = z.with_values(np.ones(len(z)))
        with pytest.raises(InvariantError):
            integral_qv_residual(sigma, z, [Partition.dyadic(9), Partition.dyadic(5)])


class TestFunctionOfZIntegral:
    def test_constant_phi_telescopes(self):
        z = make_fbm(num_steps=128, seed=53)
        result = function_of_z_integral(affine_phi(0.0, 1.0), z)
        np.testing.assert_allclose(
            result.integral.values, z.values - z.values[0], rtol=0, atol=1e-13
        )

    def test_identity_residual_is_half_qv(self):
        z = make_fbm(num_steps=256, seed=59)
        result = function_of_z_integral(PHI_FUNCTIONS["identity"], z)
        gap = abs(result.integral.terminal - result.closed_form.terminal)
        assert gap == pytest.approx(0.5 * quadratic_variation(z), abs=1e-12)

    def test_cos_residual_decreases(self):
        means = []
        for level in (6, 8, 10):
            gaps = []
            for s in range(200):
                z = make_fbm(num_steps=2**10, seed=s).subsample(2 ** (10 - level))
                result = function_of_z_integral(PHI_FUNCTIONS["cos"], z)
                gaps.append(abs(result.integral.terminal - result.closed_form.terminal))
            means.append(np.mean(gaps))
        assert means[0] > means[1] > means[2]

    def test_cos_closed_form_is_sin(self):
        z = make_fbm(num_steps=64, seed=61)
        result = function_of_z_integral(PHI_FUNCTIONS["cos"], z)
        np.testing.assert_allclose(result.closed_form.values, np.sin(z.values), atol=1e-15)

    def test_exp_bounded_antiderivative_oracle(self):
        # oracle: sqrt(pi/2) erf(1/sqrt(2)) at 40 digits = 0.85562439189214880
        phi = PHI_FUNCTIONS["exp_bounded"]
        assert float(phi.antiderivative(1.0)) == pytest.approx(
            0.8556243918921488, abs=1e-14
        )
