import os
import tempfile

import numpy as np

from entrolab.control import (
    GainSchedule,
    GaussMarkovState,
    evolve_feedback,
    evolve_modulated,
    feedback_control,
    gauss_markov_propagate,
    gauss_markov_rows,
    modulated_decay_rate,
    precompute_feedback,
    replay_feedback,
    stationary_covariance,
)
from entrolab.exceptions import (
    FileNotFoundException,
    IllPosedGainException,
    ValidationException,
)
from entrolab.model_core import GaussianDensity, HamiltonianSpec, gibbs_density
from .base_test import OrnsteinUhlenbeckTest, UnitTest


class TestGainSchedule(UnitTest):
    def test_constant(self):
        schedule = GainSchedule.constant(0.5)
        self.assertTrue(schedule.is_constant)
        self.assertEqual(schedule(3.0), 0.5)

    def test_table_interpolates(self):
        schedule = GainSchedule.from_table([0.0, 1.0], [0.0, 2.0])
        self.assertFalse(schedule.is_constant)
        self.assertAlmostEqual(schedule(0.25), 0.5)
        self.assertEqual(schedule(5.0), 2.0)

    def test_table_needs_increasing_times(self):
        with self.assertRaises(ValidationException):
            GainSchedule.from_table([0.0, 0.0], [1.0, 2.0])

    def test_csv(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'alpha.csv')
            with open(path, 'w', encoding='UTF-8') as f:
                f.write('t,alpha\n0,0\n1,1\n')
            schedule = GainSchedule.from_csv(path)

            with open(path, 'w', encoding='UTF-8') as f:
                f.write('time,gain\n0,0\n')
            with self.assertRaises(ValidationException):
                GainSchedule.from_csv(path)

        self.assertAlmostEqual(schedule(0.5), 0.5)
        with self.assertRaises(FileNotFoundException):
            GainSchedule.from_csv(os.path.join(directory, 'missing.csv'))

    def test_ill_posed_gain(self):
        GainSchedule.constant(-0.5).validate(2.0, 0.0, 1.0, 0.1)
        with self.assertRaisesRegex(IllPosedGainException, 'ill-posed gain'):
            GainSchedule.constant(-1.0).validate(2.0, 0.0, 1.0, 0.1)

    def test_ill_posed_table_node(self):
        # the dip to -2 at t = 0.52 falls between step midpoints
        schedule = GainSchedule.from_table([0.0, 0.52, 0.54, 1.0], [0.0, -2.0, 0.0, 0.0])
        with self.assertRaises(IllPosedGainException):
            schedule.validate(2.0, 0.0, 1.0, 0.1)


class TestFeedback(OrnsteinUhlenbeckTest):
    def setUp(self):
        super().setUp()
        self.equilibrium = gibbs_density(self.ham, self.grid)

    def test_feedback_control_rejects_ill_posed_gain(self):
        with self.assertRaises(IllPosedGainException):
            feedback_control(self.rho0, self.equilibrium, -1.0, self.ham.sigma2)

    def test_feedback_vanishes_at_equilibrium(self):
        u = feedback_control(self.equilibrium, self.equilibrium, 3.0)
        self.assertEqual(np.max(np.abs(u.values)), 0.0)

    def test_feedback_matches_modulated_equation(self):
        modulated = evolve_modulated(self.ham, 1.0, self.rho0, 0.2, 0.005, record_every=8)
        feedback = evolve_feedback(self.ham, 1.0, self.rho0, 0.2, 0.005, record_every=8)
        for a, b in zip(modulated, feedback):
            np.testing.assert_allclose(a.values, b.values, atol=1e-10)

    def test_replay_reproduces_feedback_run(self):
        online = evolve_feedback(self.ham, 1.0, self.rho0, 0.2, 0.005)
        table = precompute_feedback(online, self.equilibrium, 1.0)
        replayed = replay_feedback(self.ham, table, self.rho0, 0.2, 0.005)
        difference = np.max(np.abs(replayed.final.values - online.final.values))
        self.assertLess(difference, 1e-3)

    def test_replay_needs_covering_table(self):
        online = evolve_feedback(self.ham, 1.0, self.rho0, 0.1, 0.005)
        table = precompute_feedback(online, self.equilibrium, 1.0)
        with self.assertRaises(ValidationException):
            replay_feedback(self.ham, table, self.rho0, 0.2, 0.005)

    def test_modulated_decay_rate(self):
        self.assertAlmostEqual(modulated_decay_rate(self.rho0, self.ham, 1.0), -3.0, places=5)
        self.assertAlmostEqual(modulated_decay_rate(self.rho0, self.ham, -0.5), -0.75, places=5)
        with self.assertRaises(IllPosedGainException):
            modulated_decay_rate(self.rho0, self.ham, -1.0)

    def test_modulated_evolution_rejects_ill_posed_gain(self):
        with self.assertRaises(IllPosedGainException):
            evolve_modulated(self.ham, -2.0, self.rho0, 0.1, 0.01)


class TestGaussMarkov(OrnsteinUhlenbeckTest):
    def test_stationary_covariance(self):
        q_matrix = np.array([[2.0, 0.5], [0.5, 1.0]])
        ham = HamiltonianSpec.quadratic(q_matrix, kT=1.5, sigma2=2.0)
        for alpha in (0.0, 0.7, -0.5):
            np.testing.assert_allclose(stationary_covariance(ham, alpha),
                                       1.5 * np.linalg.inv(q_matrix), atol=1e-10)

    def test_ornstein_uhlenbeck_moments(self):
        state0 = GaussMarkovState(np.array([1.0]), np.array([[2.0]]), 0.0)
        states = gauss_markov_propagate(self.ham, 0.0, state0, 1.0, 0.1)
        self.assertEqual(len(states), 11)
        self.assertAlmostEqual(states[0].divergence, 0.5 * (2.0 - np.log(2.0)), places=10)
        for state in states:
            self.assertAlmostEqual(state.mean[0], np.exp(-state.time), places=8)
            self.assertAlmostEqual(state.covariance[0, 0], 1.0 + np.exp(-2 * state.time),
                                   places=8)

    def test_agrees_with_grid_solution(self):
        state0 = GaussMarkovState(np.array([1.0]), np.array([[2.0]]), 0.0)
        states = gauss_markov_propagate(self.ham, 1.0, state0, 1.0, 0.1)
        trajectory = evolve_modulated(self.ham, 1.0, self.rho0, 1.0, 0.002, record_every=50)
        self.assertEqual(len(states), len(trajectory))
        for state, t, rho in zip(states, trajectory.times, trajectory):
            self.assertAlmostEqual(state.time, t, places=12)
            self.assertAlmostEqual(state.mean[0], np.exp(-2 * t), places=8)
            self.assertAlmostEqual(float(rho.mean()[0]), state.mean[0], delta=3e-3)
            self.assertAlmostEqual(float(rho.covariance()[0, 0]), state.covariance[0, 0],
                                   delta=3e-3)

    def test_needs_quadratic_hamiltonian(self):
        ham = HamiltonianSpec.double_well(1.0, 2.0, kT=1.0, sigma2=2.0)
        state0 = GaussMarkovState(np.array([0.0]), np.array([[1.0]]), 0.0)
        with self.assertRaises(ValidationException):
            gauss_markov_propagate(ham, 0.0, state0, 1.0, 0.1)

    def test_rows(self):
        state0 = GaussMarkovState(np.array([1.0]), np.array([[2.0]]), 0.0)
        header, rows = gauss_markov_rows(gauss_markov_propagate(self.ham, 0.0, state0, 0.2, 0.1))
        self.assertEqual(header, ['t', 'mean_0', 'cov_00', 'D'])
        self.assertEqual(len(rows), 3)
        self.assertEqual(rows[0][:3], [0.0, 1.0, 2.0])

    def test_state_rejects_indefinite_covariance(self):
        with self.assertRaises(ValidationException):
            GaussMarkovState(np.array([0.0]), np.array([[-1.0]]), 0.0)

    def test_state_as_density(self):
        state = GaussMarkovState(np.array([0.0]), np.array([[1.0]]), 0.0)
        self.assertIsInstance(state.as_density(), GaussianDensity)
