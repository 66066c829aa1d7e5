"""Tests for the reaction-diffusion field solver."""

import math

import numpy as np
import pytest

from tissuesim.field import (
    ConcentrationField,
    FieldParams,
    SecretionProfile,
    gradient_at,
    gradient_profile,
    peak_position,
    sample_noise,
    secretion_at,
    step_field,
    total_mass,
    value_at,
    zero_field,
)


def heat_kernel_solution(x, x0, sigma0, diffusion, t):
    """Closed-form free-space evolution of a Gaussian under pure diffusion.

    A Gaussian with variance sigma0^2 stays Gaussian with variance
    sigma0^2 + 2*D*t and amplitude scaled to conserve mass.
    """
    var = sigma0**2 + 2.0 * diffusion * t
    return (sigma0 / math.sqrt(var)) * np.exp(-((x - x0) ** 2) / (2.0 * var))


def make_params(**kwargs):
    defaults = dict(diffusion=0.1, decay=0.01, noise=0.0)
    defaults.update(kwargs)
    return FieldParams(**defaults)


class TestStepField:
    def test_zero_field_is_fixed_point(self):
        params = make_params(noise=0.0)
        f = zero_field(params)
        rng = np.random.default_rng(0)
        f = step_field(f, params, np.zeros(params.num_cells), rng)
        assert np.all(f.values == 0.0)
        assert f.time == pytest.approx(params.dt)

    def test_pure_decay_matches_implicit_euler_formula(self):
        # C / (1 + decay*dt) per step, exactly
        params = make_params(diffusion=0.0, decay=0.01, dt=1.0)
        f = ConcentrationField(values=np.ones(params.num_cells))
        rng = np.random.default_rng(0)
        f = step_field(f, params, np.zeros(params.num_cells), rng)
        expected = 1.0 / (1.0 + 0.01 * 1.0)
        assert np.allclose(f.values, expected, rtol=0, atol=1e-14)
        assert expected == pytest.approx(0.990099, abs=1e-6)

    def test_heat_kernel_widening(self):
        # pure diffusion of a narrow Gaussian vs the analytic heat kernel
        params = make_params(diffusion=0.1, decay=0.0, dt=0.01)
        x = params.positions()
        x0, sigma0 = 5.0, 0.5
        f = ConcentrationField(values=heat_kernel_solution(x, x0, sigma0, 0.1, 0.0))
        rng = np.random.default_rng(0)
        zero_src = np.zeros(params.num_cells)
        for _ in range(100):
            f = step_field(f, params, zero_src, rng)
        exact = heat_kernel_solution(x, x0, sigma0, 0.1, 1.0)
        rel_l2 = np.linalg.norm(f.values - exact) / np.linalg.norm(exact)
        assert rel_l2 < 0.01

    def test_source_accumulates(self):
        params = make_params(diffusion=0.0, decay=0.0, dt=0.5)
        f = zero_field(params)
        rng = np.random.default_rng(0)
        src = np.full(params.num_cells, 2.0)
        f = step_field(f, params, src, rng)
        assert np.allclose(f.values, 1.0)  # dt * S

    def test_rejects_nonfinite_input(self):
        params = make_params()
        bad = zero_field(params)
        bad.values[3] = np.nan
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            step_field(bad, params, np.zeros(params.num_cells), rng)
        good = zero_field(params)
        src = np.zeros(params.num_cells)
        src[0] = np.inf
        with pytest.raises(ValueError):
            step_field(good, params, src, rng)

    def test_rejects_wrong_source_length(self):
        params = make_params()
        f = zero_field(params)
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            step_field(f, params, np.zeros(params.num_cells - 1), rng)


class TestFieldInvariants:
    def test_mass_conservation_per_step(self):
        params = make_params(diffusion=0.1, decay=0.0, noise=0.0, dt=0.05)
        rng = np.random.default_rng(7)
        values = rng.uniform(0.0, 3.0, params.num_cells)
        f = ConcentrationField(values=values)
        zero_src = np.zeros(params.num_cells)
        mass0 = total_mass(f, params)
        for _ in range(200):
            before = total_mass(f, params)
            f = step_field(f, params, zero_src, rng)
            after = total_mass(f, params)
            assert abs(after - before) / mass0 < 1e-10

    def test_max_principle_any_dt(self):
        # implicit treatment is unconditionally stable: sup norm never grows
        for dt in (0.01, 1.0, 50.0):
            params = make_params(diffusion=0.5, decay=0.0, noise=0.0, dt=dt)
            rng = np.random.default_rng(3)
            f = ConcentrationField(values=rng.uniform(0, 5, params.num_cells))
            zero_src = np.zeros(params.num_cells)
            for _ in range(20):
                peak = np.max(np.abs(f.values))
                f = step_field(f, params, zero_src, rng)
                assert np.max(np.abs(f.values)) <= peak + 1e-12

    def test_first_order_decay_convergence(self):
        # error against exp(-decay*t) at t=10 halves when dt halves
        decay, t_final = 0.1, 10.0
        errors = []
        for dt in (0.1, 0.05):
            params = make_params(diffusion=0.0, decay=decay, noise=0.0, dt=dt)
            f = ConcentrationField(values=np.ones(params.num_cells))
            rng = np.random.default_rng(0)
            zero_src = np.zeros(params.num_cells)
            for _ in range(round(t_final / dt)):
                f = step_field(f, params, zero_src, rng)
            errors.append(abs(f.values[0] - math.exp(-decay * t_final)))
        ratio = errors[0] / errors[1]
        assert 1.8 <= ratio <= 2.2

    def test_noise_reproducibility(self):
        params = make_params(noise=0.3)
        src = np.zeros(params.num_cells)
        trajectories = []
        for _ in range(2):
            rng = np.random.default_rng(42)
            f = zero_field(params)
            for _ in range(50):
                f = step_field(f, params, src, rng)
            trajectories.append(f.values.copy())
        assert np.array_equal(trajectories[0], trajectories[1])

    def test_non_negativity_after_clamping(self):
        params = make_params(noise=2.0)
        rng = np.random.default_rng(11)
        f = zero_field(params)
        src = np.zeros(params.num_cells)
        saw_clamp = False
        for _ in range(100):
            f = step_field(f, params, src, rng)
            assert np.all(f.values >= 0.0)
            saw_clamp = saw_clamp or f.clamp_count > 0
        assert saw_clamp  # strong noise on a zero field must clamp sometimes


class TestSecretion:
    def test_peak_value(self):
        p = SecretionProfile(peak_rate=1.0, center=4.0, width=1.0)
        assert secretion_at(p, 4.0) == pytest.approx(1.0)

    def test_zero_rate(self):
        p = SecretionProfile(peak_rate=0.0, center=4.0, width=1.0)
        for x in (-3.0, 0.0, 4.0, 9.5):
            assert secretion_at(p, x) == 0.0

    def test_one_sigma_away(self):
        p = SecretionProfile(peak_rate=1.0, center=4.0, width=1.0)
        assert secretion_at(p, 5.0) == pytest.approx(math.exp(-0.5), abs=1e-9)
        assert secretion_at(p, 5.0) == pytest.approx(0.60653, abs=1e-5)

    def test_vectorized_matches_scalar(self):
        p = SecretionProfile(peak_rate=2.0, center=3.5, width=0.5)
        xs = np.linspace(0, 10, 33)
        vec = secretion_at(p, xs)
        for x, v in zip(xs, vec):
            assert v == pytest.approx(secretion_at(p, float(x)))

    def test_invalid_width_rejected(self):
        with pytest.raises(ValueError):
            SecretionProfile(peak_rate=1.0, center=4.0, width=0.0)


class TestSampleNoise:
    def test_zero_amplitude(self):
        params = make_params(noise=0.0)
        rng = np.random.default_rng(0)
        assert np.all(sample_noise(params, rng) == 0.0)

    def test_single_cell_statistics(self):
        params = make_params(noise=1.0, dt=0.01)
        rng = np.random.default_rng(5)
        draws = np.array([sample_noise(params, rng)[0] for _ in range(100_000)])
        assert abs(draws.mean()) < 3e-2 * math.sqrt(params.dt)
        assert abs(draws.var() - params.dt) / params.dt < 0.05

    def test_cells_uncorrelated(self):
        params = make_params(noise=1.0, dt=0.01)
        rng = np.random.default_rng(6)
        samples = np.array([sample_noise(params, rng)[:2] for _ in range(100_000)])
        rho = np.corrcoef(samples[:, 0], samples[:, 1])[0, 1]
        assert abs(rho) < 0.02


class TestGradient:
    def test_uniform_field_zero_gradient(self):
        params = make_params()
        f = ConcentrationField(values=np.full(params.num_cells, 2.5))
        for i in (0, 1, params.num_cells // 2, params.num_cells - 1):
            assert gradient_at(f, params, i) == 0.0

    def test_linear_ramp(self):
        params = make_params()
        f = ConcentrationField(values=params.positions().copy())
        for i in range(params.num_cells):
            assert gradient_at(f, params, i) == pytest.approx(1.0, abs=1e-12)

    def test_quadratic_field(self):
        # d/dx x^2 = 4 at x = 2; central difference is exact on quadratics
        params = make_params()
        x = params.positions()
        f = ConcentrationField(values=x**2)
        i = int(np.argmin(np.abs(x - 2.0)))
        assert gradient_at(f, params, i) == pytest.approx(2.0 * x[i], abs=1e-9)
        assert gradient_at(f, params, i) == pytest.approx(4.0, abs=2 * params.dx)

    def test_out_of_range_rejected(self):
        params = make_params()
        f = zero_field(params)
        with pytest.raises(IndexError):
            gradient_at(f, params, params.num_cells)
        with pytest.raises(IndexError):
            gradient_at(f, params, -1)

    def test_profile_matches_pointwise(self):
        params = make_params()
        rng = np.random.default_rng(8)
        f = ConcentrationField(values=rng.uniform(0, 1, params.num_cells))
        prof = gradient_profile(f, params)
        for i in range(params.num_cells):
            assert prof[i] == pytest.approx(gradient_at(f, params, i), abs=1e-12)


class TestPeakPosition:
    def test_single_max(self):
        params = make_params()
        values = np.zeros(params.num_cells)
        values[7] = 3.0
        f = ConcentrationField(values=values)
        assert peak_position(f, params) == pytest.approx(params.positions()[7])

    def test_uniform_tie_break_lowest_index(self):
        params = make_params()
        f = ConcentrationField(values=np.ones(params.num_cells))
        assert peak_position(f, params) == params.grid_min

    def test_secretion_snapshot(self):
        params = make_params()
        profile = SecretionProfile(peak_rate=1.0, center=4.0, width=0.5)
        f = ConcentrationField(values=secretion_at(profile, params.positions()))
        assert abs(peak_position(f, params) - 4.0) <= params.dx

    def test_all_nan_rejected(self):
        params = make_params()
        f = ConcentrationField(values=np.full(params.num_cells, np.nan))
        with pytest.raises(ValueError):
            peak_position(f, params)


class TestParamValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(diffusion=-0.1),
            dict(decay=-1.0),
            dict(noise=-0.5),
            dict(num_cells=2),
            dict(grid_min=5.0, grid_max=5.0),
            dict(dt=0.0),
        ],
    )
    def test_invalid_params_rejected(self, kwargs):
        with pytest.raises(ValueError):
            make_params(**kwargs)

    def test_interpolated_value(self):
        params = make_params()
        f = ConcentrationField(values=params.positions().copy())
        assert value_at(f, params, 5.0) == pytest.approx(5.0, abs=1e-12)
        assert value_at(f, params, 0.123) == pytest.approx(0.123, abs=1e-12)
