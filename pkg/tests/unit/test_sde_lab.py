import numpy as np

from entrolab.exceptions import DivergenceException, ValidationException
from entrolab.model_core import GaussianDensity, Grid, HamiltonianSpec, relative_entropy
from entrolab.sde_lab import (
    PathEnsemble,
    PolymerSpec,
    bandwidth_rule,
    block_generator,
    default_escape_radius,
    estimate_density,
    gaussian_sampler,
    kinetic_temperature,
    point_sampler,
    simulate_overdamped,
    simulate_polymer,
)
from .base_test import OrnsteinUhlenbeckTest, UnitTest


class TestPathEnsemble(UnitTest):
    def test_rejects_non_finite_paths(self):
        paths = np.zeros((2, 3, 1))
        paths[1, 2, 0] = np.nan
        with self.assertRaises(ValidationException):
            PathEnsemble(paths, 0.1, 0)

    def test_shapes_and_pooling(self):
        ensemble = PathEnsemble(np.arange(12.0).reshape(3, 4), 0.5, 0, t0=1.0)
        self.assertEqual((ensemble.n_paths, ensemble.n_times, ensemble.ndim), (3, 4, 1))
        np.testing.assert_allclose(ensemble.times, [1.0, 1.5, 2.0, 2.5])
        self.assertEqual(ensemble.samples([1, 2]).shape, (6, 1))
        with self.assertRaises(ValidationException):
            ensemble.samples(4)

    def test_rows(self):
        ensemble = PathEnsemble(np.zeros((2, 3)), 0.1, 0)
        self.assertEqual(ensemble.row_header(), ['t', 'trajectory', 'x_0'])
        self.assertEqual(len(list(ensemble.rows())), 6)
        self.assertEqual(ensemble.summary_header(), ['t', 'mean_0', 'cov_00'])


class TestOverdamped(OrnsteinUhlenbeckTest):
    def simulate(self, seed, n_paths=200):
        return simulate_overdamped(self.ham, None, gaussian_sampler([1.0], [[2.0]]),
                                   n_paths, 0.01, 0.5, seed, record_every=10)

    def test_reproducible_by_seed(self):
        first = self.simulate(3)
        np.testing.assert_array_equal(first.paths, self.simulate(3).paths)
        self.assertFalse(np.array_equal(first.paths, self.simulate(4).paths))
        self.assertEqual(first.paths.shape, (200, 6, 1))
        self.assertAlmostEqual(first.dt, 0.1)

    def test_streams_are_counter_based(self):
        a = block_generator(5, 1).standard_normal(4)
        b = block_generator(5, 1).standard_normal(4)
        c = block_generator(5, 2).standard_normal(4)
        np.testing.assert_array_equal(a, b)
        self.assertFalse(np.array_equal(a, c))

    def test_moments_follow_ornstein_uhlenbeck(self):
        ensemble = simulate_overdamped(self.ham, None, gaussian_sampler([1.0], [[2.0]]),
                                       4000, 0.01, 1.0, 1, record_every=50)
        for k, t in enumerate(ensemble.times):
            mean, cov = ensemble.moments(k)
            mean_se, variance_se = ensemble.standard_errors(k)
            self.assertLess(abs(mean[0] - np.exp(-t)), 4 * mean_se[0] + 0.01)
            self.assertLess(abs(cov[0, 0] - (1.0 + np.exp(-2 * t))), 4 * variance_se[0] + 0.01)

    def test_deterministic_limit(self):
        ham = HamiltonianSpec.quadratic([[1.0]], kT=1.0, sigma2=0.0)
        ensemble = simulate_overdamped(ham, lambda x, t: -x, point_sampler([1.0]),
                                       3, 0.01, 1.0, 0, record_every=100)
        np.testing.assert_allclose(ensemble.paths[:, -1, 0], 0.99 ** 100)

    def test_divergence_is_reported(self):
        ham = HamiltonianSpec.quadratic([[1.0]], kT=1.0, sigma2=0.0)
        with self.assertRaisesRegex(DivergenceException, 'trajectory divergence') as context:
            simulate_overdamped(ham, lambda x, t: 50 * x, point_sampler([1.0]),
                                2, 0.01, 1.0, 0)
        self.assertEqual(context.exception.index, 0)

    def test_horizon_must_be_whole_steps(self):
        with self.assertRaises(ValidationException):
            simulate_overdamped(self.ham, None, point_sampler([0.0]), 2, 0.3, 1.0, 0)


class TestPolymer(UnitTest):
    def simulate(self, alpha_c, n_paths=1000):
        spec = PolymerSpec.harmonic([1.0], 1.0, 1.0, alpha_c, 1.0)
        ensemble = simulate_polymer(spec, n_paths, 0.01, 20.0, 7,
                                    q0_sampler=gaussian_sampler([0.0], [[1.0]]),
                                    p0_sampler=gaussian_sampler([0.0], [[1.0]]),
                                    record_every=10)
        return spec, ensemble

    def test_thermostat_temperature_without_control(self):
        spec, ensemble = self.simulate(0.0)
        measured = kinetic_temperature(ensemble, spec, window=(10.0, 20.0))
        self.assertAlmostEqual(measured.value, 1.0, delta=0.06)
        self.assertEqual(len(measured.per_block), 1)

    def test_control_cools_the_blocks(self):
        # effective temperature gamma T / (gamma + alpha_c)
        spec, ensemble = self.simulate(1.0)
        measured = kinetic_temperature(ensemble, spec, window=(10.0, 20.0))
        self.assertAlmostEqual(measured.value, 0.5, delta=0.04)
        self.assertGreater(measured.standard_error, 0.0)

    def test_summary_reports_kinetic_temperature(self):
        spec, ensemble = self.simulate(0.0, n_paths=50)
        header = ensemble.summary_header(spec.mass_vector)
        rows = ensemble.summary(spec.mass_vector)
        self.assertEqual(header[-1], 'kinetic_temperature')
        self.assertEqual(len(rows[0]), len(header))

    def test_window_outside_horizon(self):
        spec, ensemble = self.simulate(0.0, n_paths=10)
        with self.assertRaises(ValidationException):
            kinetic_temperature(ensemble, spec, window=(10.0, 30.0))

    def test_kinetic_temperature_needs_momenta(self):
        spec = PolymerSpec.harmonic([1.0], 1.0, 1.0, 0.0, 1.0)
        with self.assertRaises(ValidationException):
            kinetic_temperature(PathEnsemble(np.zeros((2, 3)), 0.1, 0), spec)

    def test_noise_must_match_friction(self):
        with self.assertRaisesRegex(ValidationException, 'fluctuation-dissipation'):
            PolymerSpec([1.0], lambda q: 0.0 * q[:, 0], lambda q: 0.0 * q,
                        gamma=1.0, alpha_c=0.0, temperature=1.0, noise=np.eye(1))

    def test_rejects_negative_gain(self):
        with self.assertRaises(ValidationException):
            PolymerSpec.harmonic([1.0], 1.0, 1.0, -0.1, 1.0)


class TestDensityEstimate(UnitTest):
    def setUp(self):
        super().setUp()
        rng = np.random.default_rng(2)
        self.ensemble = PathEnsemble(rng.standard_normal((20000, 2)), 0.1, 2)

    def test_bandwidth_rules(self):
        samples = np.random.default_rng(0).standard_normal((10000, 1))
        self.assertAlmostEqual(bandwidth_rule(samples, 'silverman')[0],
                               0.9 * 10000 ** -0.2, delta=0.01)
        self.assertAlmostEqual(bandwidth_rule(samples, 'scott')[0], 10000 ** -0.2, delta=0.02)
        with self.assertRaises(ValidationException):
            bandwidth_rule(samples, 'nearest')

    def test_estimate_recovers_moments(self):
        grid = Grid([-6.0], [6.0], [120])
        density = estimate_density(self.ensemble, [0, 1], grid)
        self.assertAlmostEqual(density.total_mass(), 1.0, places=10)
        self.assertAlmostEqual(float(density.mean()[0]), 0.0, delta=0.03)
        self.assertAlmostEqual(float(density.covariance()[0, 0]), 1.0, delta=0.1)

    def test_grid_must_cover_samples(self):
        with self.assertRaisesRegex(ValidationException, 'does not cover'):
            estimate_density(self.ensemble, 0, Grid([-1.0], [1.0], [20]))

    def test_estimate_close_to_sampled_density(self):
        samples = np.random.default_rng(4).standard_normal((100000, 1))
        grid = Grid([-6.0], [6.0], [240])
        estimate = estimate_density(PathEnsemble(samples, 0.1, 4), 0, grid)
        exact = GaussianDensity([0.0], [[1.0]]).on_grid(grid)
        self.assertLess(relative_entropy(estimate, exact), 0.05)


class TestEscapeRadius(UnitTest):
    def test_follows_equilibrium_spread(self):
        ham = HamiltonianSpec.quadratic([[4.0]], kT=1.0, sigma2=2.0)
        states = np.random.default_rng(1).normal(0.0, 0.1, size=(500, 1))
        self.assertAlmostEqual(default_escape_radius(ham, states), 25.0)

        stiff = HamiltonianSpec.quadratic([[1.0, 0.0], [0.0, 100.0]], kT=4.0, sigma2=2.0)
        self.assertAlmostEqual(default_escape_radius(stiff, np.zeros((1, 2))), 100.0)

    def test_wide_start_widens_radius(self):
        ham = HamiltonianSpec.quadratic([[4.0]], kT=1.0, sigma2=2.0)
        states = np.random.default_rng(1).normal(0.0, 3.0, size=(2000, 1))
        spread = float(states.std())
        self.assertAlmostEqual(default_escape_radius(ham, states), 50.0 * spread)

    def test_falls_back_to_initial_spread(self):
        ham = HamiltonianSpec.double_well(1.0, 1.0, kT=1.0, sigma2=2.0)
        self.assertAlmostEqual(default_escape_radius(ham, np.zeros((3, 1))), 50.0)
