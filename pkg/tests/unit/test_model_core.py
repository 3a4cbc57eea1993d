from unittest import mock
import os
import tempfile

import numpy as np

from entrolab.entropy_production import free_energy_decay_rate
from entrolab.exceptions import GridMismatchException, NumericalException, ValidationException
from entrolab.model_core import (
    GaussianDensity,
    Grid,
    GridDensity,
    HamiltonianSpec,
    VectorFieldGrid,
    check_same_grid,
    differential_entropy,
    flux_and_force,
    free_energy,
    gibbs_density,
    relative_entropy,
    require_positive_interior,
)
from .base_test import OrnsteinUhlenbeckTest, UnitTest
from ..mocks import empty_fn


class TestGrid(UnitTest):
    def test_rejects_inverted_bounds(self):
        with self.assertRaises(ValidationException):
            Grid([1.0], [0.0], [10])

    def test_rejects_single_cell(self):
        with self.assertRaises(ValidationException):
            Grid([0.0], [1.0], [1])

    def test_geometry(self):
        grid = Grid([0.0, -1.0], [1.0, 1.0], [4, 8])
        self.assertEqual(grid.ndim, 2)
        self.assertEqual(grid.size, 32)
        self.assertEqual(grid.spacing, (0.25, 0.25))
        self.assertAlmostEqual(grid.cell_volume, 0.0625)
        self.assertEqual(grid.points.shape, (32, 2))
        self.assertEqual(int(grid.boundary_mask.sum()), 32 - 2 * 6)

    def test_cell_index(self):
        grid = Grid([0.0], [1.0], [4])
        cells = grid.cell_index([[0.1], [0.9], [1.5], [-0.1]])
        self.assertEqual(cells.tolist(), [0, 3, -1, -1])

    def test_grid_mismatch(self):
        a = GridDensity.normalized(Grid([0.0], [1.0], [4]), np.ones(4))
        b = GridDensity.normalized(Grid([0.0], [1.0], [8]), np.ones(8))
        with self.assertRaises(GridMismatchException):
            check_same_grid(a, b)


class TestGridDensity(UnitTest):
    def test_rejects_negative_values(self):
        with self.assertRaises(ValidationException):
            GridDensity(Grid([0.0], [1.0], [4]), [1.0, -1.0, 1.0, 1.0])

    def test_rejects_wrong_declared_mass(self):
        with self.assertRaises(ValidationException):
            GridDensity(Grid([0.0], [1.0], [4]), np.ones(4), mass=2.0)

    def test_csv_keeps_grid_and_values(self):
        grid = Grid([-2.0], [3.0], [7])
        density = GridDensity.normalized(grid, np.arange(1.0, 8.0))
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'density.csv')
            density.to_csv(path)
            loaded = GridDensity.from_csv(path)

        self.assertEqual(loaded.grid, grid)
        np.testing.assert_array_equal(loaded.values, density.values)

    def test_positive_interior(self):
        grid = Grid([0.0], [1.0], [4])
        self.assertTrue(GridDensity.normalized(grid, [0.0, 1.0, 1.0, 0.0]).positive_interior())
        hole = GridDensity.normalized(grid, [1.0, 0.0, 1.0, 1.0])
        self.assertFalse(hole.positive_interior())
        with self.assertRaisesRegex(NumericalException, 'log-density undefined'):
            require_positive_interior(hole)


class TestHamiltonian(UnitTest):
    def test_rejects_inconsistent_gradient(self):
        with self.assertRaises(ValidationException):
            HamiltonianSpec(lambda x: 0.5 * x[:, 0] ** 2, lambda x: 2 * x, kT=1.0, sigma2=2.0)

    def test_rejects_nonpositive_temperature(self):
        with self.assertRaises(ValidationException):
            HamiltonianSpec.quadratic([[1.0]], kT=0.0, sigma2=2.0)

    def test_drift(self):
        ham = HamiltonianSpec.quadratic([[2.0]], kT=1.0, sigma2=2.0)
        np.testing.assert_allclose(ham.drift(np.array([1.0, -0.5])), [[-2.0], [1.0]])

    def test_double_well(self):
        ham = HamiltonianSpec.double_well(1.0, 2.0, kT=1.0, sigma2=2.0)
        self.assertAlmostEqual(float(ham.energy(np.array([[1.0]]))[0]), -1.0)


class TestGibbsAndDivergence(OrnsteinUhlenbeckTest):
    def test_gibbs_moments(self):
        equilibrium = gibbs_density(self.ham, self.grid)
        self.assertAlmostEqual(equilibrium.total_mass(), 1.0, places=12)
        self.assertAlmostEqual(float(equilibrium.mean()[0]), 0.0, places=10)
        self.assertAlmostEqual(float(equilibrium.covariance()[0, 0]), 1.0, places=6)
        self.assertNotIn('boundary-mass', equilibrium.warnings)

    @mock.patch('entrolab.model_core.logger.warning', side_effect=empty_fn)
    def test_gibbs_boundary_mass(self, mock_warning):
        equilibrium = gibbs_density(self.ham, Grid([-1.0], [1.0], [50]))
        self.assertIn('boundary-mass', equilibrium.warnings)
        mock_warning.assert_called_once()

    def test_gibbs_rejects_infinite_energy(self):
        ham = HamiltonianSpec(lambda x: -np.log(x[:, 0] + 2.0),
                              lambda x: -1.0 / (x + 2.0), kT=1.0, sigma2=2.0)
        with np.errstate(invalid='ignore', divide='ignore'):
            with self.assertRaisesRegex(NumericalException, 'hamiltonian not finite'):
                gibbs_density(ham, Grid([-3.0], [3.0], [60]))

    def test_relative_entropy_matches_closed_form(self):
        equilibrium = gibbs_density(self.ham, self.grid)
        expected = self.initial.kl_divergence(GaussianDensity([0.0], [[1.0]]))
        self.assertAlmostEqual(expected, 0.5 * (2.0 - np.log(2.0)), places=12)
        self.assertAlmostEqual(relative_entropy(self.rho0, equilibrium), expected, places=6)

    def test_relative_entropy_of_identical_densities(self):
        self.assertEqual(relative_entropy(self.rho0, self.rho0), 0.0)

    def test_relative_entropy_infinite_outside_support(self):
        grid = Grid([0.0], [1.0], [4])
        rho = GridDensity.normalized(grid, [1.0, 1.0, 1.0, 1.0])
        sigma = GridDensity.normalized(grid, [0.0, 1.0, 1.0, 1.0])
        self.assertEqual(relative_entropy(rho, sigma), np.inf)

    @mock.patch('entrolab.model_core.logger.warning', side_effect=empty_fn)
    def test_relative_entropy_unequal_mass(self, mock_warning):
        grid = Grid([0.0], [1.0], [4])
        rho = GridDensity(grid, 2 * np.ones(4))
        sigma = GridDensity(grid, np.ones(4))
        self.assertAlmostEqual(relative_entropy(rho, sigma), 2 * np.log(2.0))
        mock_warning.assert_called_once()

    def test_free_energy_scales_with_temperature(self):
        equilibrium = gibbs_density(self.ham, self.grid)
        self.assertAlmostEqual(free_energy(self.rho0, equilibrium, 2.5),
                               2.5 * relative_entropy(self.rho0, equilibrium))

    def test_differential_entropy_of_gaussian(self):
        density = GaussianDensity([0.0], [[1.0]]).on_grid(self.grid)
        self.assertAlmostEqual(differential_entropy(density),
                               0.5 * np.log(2 * np.pi * np.e), places=6)

    def test_gaussian_on_grid_moments(self):
        self.assertAlmostEqual(float(self.rho0.mean()[0]), 1.0, places=8)
        self.assertAlmostEqual(float(self.rho0.covariance()[0, 0]), 2.0, places=6)


class TestFluxAndForce(OrnsteinUhlenbeckTest):
    def test_constitutive_relation(self):
        flux, force = flux_and_force(self.rho0, self.ham)
        scale = self.ham.sigma2 / (2 * self.ham.kT)
        residual = flux.values - scale * force.values * self.rho0.values
        self.assertLess(np.max(np.abs(residual)), 1e-8)

    def test_free_energy_identity_on_random_densities(self):
        rng = np.random.default_rng(17)
        x = self.grid.axes[0]
        for _ in range(20):
            ham = HamiltonianSpec.quadratic([[rng.uniform(0.5, 2.0)]],
                                            kT=rng.uniform(0.5, 2.0),
                                            sigma2=rng.uniform(0.5, 3.0))
            width = rng.uniform(0.5, 3.0)
            wiggles = sum(rng.uniform(-0.5, 0.5) * np.cos(k * x + rng.uniform(0, 2 * np.pi))
                          for k in range(1, 5))
            rho = GridDensity.normalized(self.grid, np.exp(-x ** 2 / (2 * width) + wiggles))

            rate = free_energy_decay_rate(rho, ham)
            flux, force = flux_and_force(rho, ham)
            dissipation = -float(np.sum(flux.values * force.values) * self.grid.cell_volume)
            self.assertLess(rate, 0.0)
            self.assertLess(abs(rate - dissipation), 1e-6 * abs(dissipation))

            scale = ham.sigma2 / (2 * ham.kT)
            residual = flux.values - scale * force.values * rho.values
            self.assertLess(np.max(np.abs(residual)), 1e-8)

    def test_equilibrium_has_no_flux(self):
        equilibrium = gibbs_density(self.ham, self.grid)
        flux, force = flux_and_force(equilibrium, self.ham)
        self.assertLess(np.max(np.abs(flux.values)), 1e-10)
        self.assertLess(np.max(np.abs(force.values)), 1e-8)


class TestVectorField(UnitTest):
    def test_arithmetic(self):
        grid = Grid([0.0], [1.0], [4])
        field = VectorFieldGrid.from_function(grid, lambda p: p)
        doubled = 2 * field
        np.testing.assert_allclose((doubled - field).values, field.values)
        np.testing.assert_allclose((-field).norm(), grid.axes[0])
        np.testing.assert_allclose(field.at_points(), grid.points)
