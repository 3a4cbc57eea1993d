from unittest import mock

import numpy as np

from entrolab.control import feedback_control
from entrolab.entropy_production import (
    DECOMPOSITION_HEADER,
    ProductionReport,
    controlled_relative_entropy_rate,
    current_velocity,
    decompose_trajectory,
    entropy_rate,
    fisher_divergence,
    free_energy_decay_rate,
    production_decomposition,
    relative_entropy_rate,
)
from entrolab.exceptions import IdentityViolation, NumericalException
from entrolab.fokker_planck import BoundaryReport, DriftSpec, evolve
from entrolab.model_core import (
    GaussianDensity,
    Grid,
    GridDensity,
    VectorFieldGrid,
    gibbs_density,
    relative_entropy,
)
from .base_test import OrnsteinUhlenbeckTest
from ..mocks import empty_fn


class TestProductionReport(OrnsteinUhlenbeckTest):
    def test_rejects_inconsistent_split(self):
        certificate = BoundaryReport(0.0, 0.0, 0.0)
        with self.assertRaises(IdentityViolation):
            ProductionReport(total_rate=1.0, pepr=0.0, epur=0.0, certificate=certificate)

    def test_entropy_production_is_negative_rate(self):
        report = ProductionReport(total_rate=-1.5, pepr=1.5, epur=0.0,
                                  certificate=BoundaryReport(0.0, 0.0, 0.0))
        self.assertEqual(report.entropy_production, 1.5)
        self.assertFalse(report.boundary_suspect)


class TestRates(OrnsteinUhlenbeckTest):
    def setUp(self):
        super().setUp()
        self.equilibrium = gibbs_density(self.ham, self.grid)

    def test_fisher_divergence(self):
        # N(1, 2) against N(0, 1): E[((x + 1) / 2)^2] = 1.5
        self.assertAlmostEqual(fisher_divergence(self.rho0, self.equilibrium), 1.5, places=5)

    def test_uncontrolled_rate(self):
        u = VectorFieldGrid.zeros(self.grid)
        report = production_decomposition(self.rho0, self.equilibrium, u, self.ham.sigma2)
        self.assertAlmostEqual(report.total_rate, -1.5, places=5)
        self.assertAlmostEqual(report.pepr, 1.5, places=5)
        self.assertEqual(report.epur, 0.0)
        self.assertTrue(report.certificate.passed)

    def test_feedback_doubles_the_decay(self):
        u = feedback_control(self.rho0, self.equilibrium, 1.0, self.ham.sigma2)
        report = controlled_relative_entropy_rate(self.rho0, self.equilibrium, u,
                                                  self.ham.sigma2)
        self.assertAlmostEqual(report.total_rate, -3.0, places=5)
        self.assertAlmostEqual(report.total_rate, report.epur - report.pepr, places=12)
        self.assertLess(report.epur, 0.0)

    def test_free_energy_decay(self):
        self.assertAlmostEqual(free_energy_decay_rate(self.rho0, self.ham), -1.5, places=5)

    def test_general_rate_matches_decomposition(self):
        f = VectorFieldGrid.from_function(self.grid, lambda p: -p)
        drift_tilde = f + feedback_control(self.rho0, self.equilibrium, 0.5)
        f_tilde = current_velocity(drift_tilde, self.rho0, self.ham.sigma2)
        f_eq = current_velocity(f, self.equilibrium, self.ham.sigma2)
        rate = relative_entropy_rate(self.rho0, self.equilibrium, f_tilde, f_eq)
        self.assertAlmostEqual(rate, -(1.0 + 0.5) * 1.5, places=4)

    def test_entropy_rate_of_spreading_gaussian(self):
        # pure diffusion of N(0, 1): dS/dt = sigma2 / (2 var) = 1
        rho = GaussianDensity([0.0], [[1.0]]).on_grid(self.grid)
        f = current_velocity(VectorFieldGrid.zeros(self.grid), rho, 2.0)
        self.assertAlmostEqual(entropy_rate(rho, f), 1.0, places=4)

    def test_vanishing_density_is_rejected(self):
        grid = Grid([0.0], [1.0], [8])
        values = np.ones(8)
        values[3] = 0.0
        hole = GridDensity.normalized(grid, values)
        uniform = GridDensity.normalized(grid, np.ones(8))
        with self.assertRaises(NumericalException):
            fisher_divergence(hole, uniform)

    @mock.patch('entrolab.entropy_production.logger.warning', side_effect=empty_fn)
    def test_truncated_box_is_boundary_suspect(self, mock_warning):
        grid = Grid([-2.0], [2.0], [80])
        rho = GaussianDensity([0.5], [[1.0]]).on_grid(grid)
        equilibrium = gibbs_density(self.ham, grid)
        report = production_decomposition(rho, equilibrium, VectorFieldGrid.zeros(grid), 2.0)
        self.assertTrue(report.boundary_suspect)
        mock_warning.assert_called()


class TestDecomposeTrajectory(OrnsteinUhlenbeckTest):
    def test_rates_match_finite_differences(self):
        equilibrium = gibbs_density(self.ham, self.grid)
        trajectory = evolve(DriftSpec.from_hamiltonian(self.ham), self.rho0, 0.0, 0.5, 0.002,
                            record_every=5)
        rows = decompose_trajectory(trajectory, equilibrium, self.ham.sigma2)

        self.assertEqual(len(rows[0]), len(DECOMPOSITION_HEADER))
        self.assertEqual(len(rows), len(trajectory))
        self.assertAlmostEqual(rows[0][2], -1.5, places=5)
        divergences = [row[1] for row in rows]
        self.assertTrue(np.all(np.diff(divergences) < 0))

        residuals = np.array([row[5] for row in rows])
        self.assertLess(np.max(np.abs(residuals[1:-1])), 2e-2)
        self.assertLess(np.max(np.abs(residuals)), 5e-2)

    def test_controlled_columns(self):
        equilibrium = gibbs_density(self.ham, self.grid)
        trajectory = evolve(DriftSpec.from_hamiltonian(self.ham), self.rho0, 0.0, 0.1, 0.01,
                            record_every=5)

        def control(t, rho):
            return feedback_control(rho, equilibrium, 1.0)

        rows = decompose_trajectory(trajectory, equilibrium, self.ham.sigma2, control)
        for _, _, total, pepr, epur, _ in rows:
            self.assertAlmostEqual(total, 2 * (-pepr), places=8)
            self.assertAlmostEqual(epur, -pepr, places=8)


class TestRateAlongTrajectories(OrnsteinUhlenbeckTest):
    def setUp(self):
        super().setUp()
        self.grid = Grid([-8.0], [8.0], [2048])
        self.drift = DriftSpec.from_hamiltonian(self.ham)
        self.field = VectorFieldGrid.from_function(self.grid, lambda p: -p)

    def advance(self, rho, t1):
        if t1 == 0.0:
            return rho
        steps = int(round(t1 / 1e-3))
        return evolve(self.drift, rho, 0.0, t1, 1e-3, record_every=steps).final

    def check_rate_at(self, start):
        rho_tilde = self.advance(GaussianDensity([1.0], [[2.0]]).on_grid(self.grid), start)
        rho = self.advance(GaussianDensity([-0.5], [[1.5]]).on_grid(self.grid), start)

        dt = 1e-5
        tilde_path = list(evolve(self.drift, rho_tilde, start, start + 2 * dt, dt))
        path = list(evolve(self.drift, rho, start, start + 2 * dt, dt))
        divergences = [relative_entropy(a, b) for a, b in zip(tilde_path, path)]
        slope = (divergences[2] - divergences[0]) / (2 * dt)

        middle_tilde, middle = tilde_path[1], path[1]
        rate = relative_entropy_rate(
            middle_tilde, middle,
            current_velocity(self.field, middle_tilde, self.ham.sigma2),
            current_velocity(self.field, middle, self.ham.sigma2))

        self.assertLess(rate, 0.0)
        self.assertLess(abs(slope - rate), 1e-3 * abs(rate))

    @mock.patch('entrolab.entropy_production.logger.warning', side_effect=empty_fn)
    def test_initial_rate(self, mock_warning):
        self.check_rate_at(0.0)

    @mock.patch('entrolab.entropy_production.logger.warning', side_effect=empty_fn)
    def test_rate_after_relaxing(self, mock_warning):
        self.check_rate_at(0.2)
