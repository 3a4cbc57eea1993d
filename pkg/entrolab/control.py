"""Log-ratio feedback control and the modulated Fokker-Planck equation.

The feedback u = -alpha(t) grad log(rho^u / rho_eq) turns the controlled
equation into a linear one with diffusion sigma2 + 2 alpha and drift
-(sigma2 / 2 + alpha) grad H / kT. Both routes are available here: solving the
linear equation directly, simulating the feedback self-consistently, and
replaying a feedback field computed off-line.
"""
import csv
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import solve_continuous_lyapunov

from entrolab.config.constants import Constants
from entrolab.entropy_production import fisher_divergence, production_decomposition
from entrolab.exceptions import (
    FileNotFoundException,
    IdentityViolation,
    IllPosedGainException,
    NumericalException,
    ValidationException,
)
from entrolab.fokker_planck import DriftSpec, FeedbackTerm, evolve
from entrolab.logger import logger
from entrolab.model_core import (
    GaussianDensity,
    VectorFieldGrid,
    check_same_grid,
    gibbs_density,
    log_ratio_gradient,
    require_positive_interior,
)


@dataclass(frozen=True, eq=False)
class GainSchedule:
    """Feedback gain alpha(t), either a constant, a piecewise-linear table or a callable."""
    function: Callable
    constant_value: Optional[float] = None
    nodes: Optional[np.ndarray] = None

    @classmethod
    def constant(cls, value):
        value = float(value)
        return cls(lambda t: value, constant_value=value)

    @classmethod
    def from_table(cls, times, values):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or len(times) < 1:
            raise ValidationException('Gain table needs matching 1-D time and alpha columns')
        if np.any(np.diff(times) <= 0):
            raise ValidationException('Gain table times must be strictly increasing')
        if len(times) == 1:
            return cls.constant(values[0])
        return cls(lambda t: float(np.interp(t, times, values)), nodes=times)

    @classmethod
    def from_csv(cls, path):
        try:
            with open(path, 'r', encoding='UTF-8') as f:
                rows = list(csv.DictReader(f))
        except FileNotFoundError as err:
            raise FileNotFoundException(f'Gain table "{path}" does not exist.') from err

        try:
            times = [float(row['t']) for row in rows]
            values = [float(row['alpha']) for row in rows]
        except (KeyError, TypeError, ValueError) as err:
            raise ValidationException(
                f'Gain table "{path}" needs numeric "t" and "alpha" columns') from err
        return cls.from_table(times, values)

    def __call__(self, t):
        return float(self.function(t))

    @property
    def is_constant(self):
        return self.constant_value is not None

    def validate(self, sigma2, t0, t1, dt):
        """Reject gains at or below -sigma2/2 at any step midpoint, endpoint or table node."""
        steps = max(int(round((t1 - t0) / dt)), 1)
        samples = np.concatenate([
            [t0, t1],
            t0 + (np.arange(steps) + 0.5) * dt,
            [] if self.nodes is None else self.nodes[(self.nodes >= t0) & (self.nodes <= t1)],
        ])
        for t in samples:
            alpha = self(t)
            if not alpha > -0.5 * sigma2:
                raise IllPosedGainException(
                    f'ill-posed gain: alpha({t:g}) = {alpha:g} must exceed -sigma2/2 = '
                    f'{-0.5 * sigma2:g}')


def as_schedule(alpha):
    return alpha if isinstance(alpha, GainSchedule) else GainSchedule.constant(alpha)


def feedback_control(rho_u, equilibrium, alpha, sigma2=None):
    """u = -alpha grad log(rho^u / equilibrium) with the shared discrete gradient."""
    if sigma2 is not None and not alpha > -0.5 * sigma2:
        raise IllPosedGainException(
            f'ill-posed gain: alpha = {alpha:g} must exceed -sigma2/2 = {-0.5 * sigma2:g}')
    grid = check_same_grid(rho_u, equilibrium)
    require_positive_interior(rho_u, equilibrium)
    return VectorFieldGrid(grid, -alpha * log_ratio_gradient(rho_u, equilibrium))


def modulated_drift(ham, alpha):
    schedule = as_schedule(alpha)
    if schedule.is_constant:
        sigma2 = ham.sigma2 + 2 * schedule.constant_value
    else:
        def sigma2(t):
            return ham.sigma2 + 2 * schedule(t)
    return DriftSpec(sigma2=sigma2, potential=ham)


def evolve_modulated(ham, alpha, rho0, t1, dt, t0=0.0, record_every=1,
                     courant_limit=Constants.default_courant_limit):
    """Solve the linear modulated equation directly."""
    schedule = as_schedule(alpha)
    schedule.validate(ham.sigma2, t0, t1, dt)
    logger.debug('Modulated evolution with %s gain', 'constant' if schedule.is_constant
                 else 'time-dependent')
    return evolve(modulated_drift(ham, schedule), rho0, t0, t1, dt,
                  record_every=record_every, courant_limit=courant_limit)


def evolve_feedback(ham, alpha, rho0, t1, dt, t0=0.0, equilibrium=None, record_every=1,
                    courant_limit=Constants.default_courant_limit):
    """Simulate the controlled equation with the feedback law evaluated on each new iterate."""
    schedule = as_schedule(alpha)
    schedule.validate(ham.sigma2, t0, t1, dt)
    if equilibrium is None:
        equilibrium = gibbs_density(ham, rho0.grid)

    gain = schedule.constant_value if schedule.is_constant else schedule
    drift = DriftSpec(sigma2=ham.sigma2, potential=ham,
                      feedback=FeedbackTerm(gain=gain, equilibrium=equilibrium))
    return evolve(drift, rho0, t0, t1, dt, record_every=record_every,
                  courant_limit=courant_limit)


@dataclass(frozen=True, eq=False)
class FeedbackTable:
    """Log-ratio gradients stored on a time grid, replayed as u(x, t) = -alpha(t) g(x, t)."""
    times: np.ndarray
    gradients: tuple
    alpha: GainSchedule

    def field_at(self, t):
        # a step ending at t_{n+1} uses the gradient stored there
        index = int(np.searchsorted(self.times, t - 1e-12 * max(1.0, abs(t)), side='left'))
        index = min(index, len(self.times) - 1)
        gradient = self.gradients[index]
        return VectorFieldGrid(gradient.grid, -self.alpha(t) * gradient.values)


def precompute_feedback(trajectory, equilibrium, alpha):
    """First pass of the off-line mode: store grad log(rho^u_t / equilibrium) per time."""
    gradients = []
    for rho in trajectory:
        require_positive_interior(rho, equilibrium)
        gradients.append(VectorFieldGrid(rho.grid, log_ratio_gradient(rho, equilibrium)))
    return FeedbackTable(trajectory.times, tuple(gradients), as_schedule(alpha))


def replay_feedback(ham, table, rho0, t1, dt, t0=0.0,
                    courant_limit=Constants.default_courant_limit):
    """Second pass: feed the stored feedback into the generic controlled solver."""
    if table.times[0] > t0 + 1e-12 or table.times[-1] < t1 - 1e-12:
        raise ValidationException(
            f'Feedback table covers [{table.times[0]}, {table.times[-1]}], not [{t0}, {t1}]')
    drift = DriftSpec(sigma2=ham.sigma2, potential=ham, field=table.field_at)
    return evolve(drift, rho0, t0, t1, dt, courant_limit=courant_limit)


def modulated_decay_rate(rho_u, ham, alpha, equilibrium=None):
    """d/dt D(rho^u || rho_eq) = -(sigma2/2 + alpha) * Fisher divergence."""
    if not alpha > -0.5 * ham.sigma2:
        raise IllPosedGainException(
            f'ill-posed gain: alpha = {alpha:g} must exceed -sigma2/2 = {-0.5 * ham.sigma2:g}')
    if equilibrium is None:
        equilibrium = gibbs_density(ham, rho_u.grid)

    rate = -(0.5 * ham.sigma2 + alpha) * fisher_divergence(rho_u, equilibrium)

    u = feedback_control(rho_u, equilibrium, alpha)
    total = production_decomposition(rho_u, equilibrium, u, ham.sigma2).total_rate
    if abs(rate - total) > Constants.identity_tolerance * max(1.0, abs(rate)):
        raise IdentityViolation(
            f'Modulated rate {rate!r} disagrees with the decomposition total {total!r}')
    return rate


@dataclass(frozen=True, eq=False)
class GaussMarkovState:
    mean: np.ndarray
    covariance: np.ndarray
    time: float
    divergence: float = field(default=np.nan)

    def __post_init__(self):
        density = GaussianDensity(self.mean, self.covariance)
        object.__setattr__(self, 'mean', density.mean)
        object.__setattr__(self, 'covariance', density.covariance)

    def as_density(self):
        return GaussianDensity(self.mean, self.covariance)


def _require_quadratic(ham):
    if ham.quadratic_form is None:
        raise ValidationException('The Gauss-Markov propagator needs a quadratic Hamiltonian')
    q_matrix = ham.quadratic_form
    if np.linalg.eigvalsh(q_matrix).min() <= 0:
        raise ValidationException('Quadratic form Q must be positive definite')
    return q_matrix


def induced_drift_matrix(ham, alpha):
    return -(0.5 * ham.sigma2 + alpha) / ham.kT * _require_quadratic(ham)


def stationary_covariance(ham, alpha=0.0):
    """Solves A P + P A^T + (sigma2 + 2 alpha) I = 0; equals kT Q^-1 for admissible alpha."""
    drift_matrix = induced_drift_matrix(ham, alpha)
    noise = (ham.sigma2 + 2 * alpha) * np.eye(len(drift_matrix))
    return solve_continuous_lyapunov(drift_matrix, -noise)


def gauss_markov_propagate(ham, alpha, state0, t1, dt, drift_matrix=None):
    """Mean and covariance of the linear modulated process on the grid t0, t0+dt, ..., t1.

    dm/dt = A(t) m and dP/dt = A P + P A^T + (sigma2 + 2 alpha(t)) I with
    A(t) = -(sigma2/2 + alpha(t)) Q / kT unless ``drift_matrix`` overrides it.
    Each state carries D(N(m, P) || N(0, kT Q^-1)).
    """
    q_matrix = _require_quadratic(ham)
    schedule = as_schedule(alpha)
    t0 = float(state0.time)
    schedule.validate(ham.sigma2, t0, t1, dt)
    ndim = len(q_matrix)
    equilibrium = GaussianDensity(np.zeros(ndim), ham.kT * np.linalg.inv(q_matrix))

    def rhs(t, y):
        a_t = schedule(t)
        matrix = (np.asarray(drift_matrix, dtype=float) if drift_matrix is not None
                  else -(0.5 * ham.sigma2 + a_t) / ham.kT * q_matrix)
        mean = y[:ndim]
        cov = y[ndim:].reshape(ndim, ndim)
        dcov = matrix @ cov + cov @ matrix.T + (ham.sigma2 + 2 * a_t) * np.eye(ndim)
        return np.concatenate([matrix @ mean, dcov.ravel()])

    steps = int(round((t1 - t0) / dt))
    times = t0 + dt * np.arange(steps + 1)
    y0 = np.concatenate([state0.mean, state0.covariance.ravel()])
    solution = solve_ivp(rhs, (t0, times[-1]), y0, t_eval=times, method='DOP853',
                         rtol=1e-10, atol=1e-12)
    if not solution.success:
        raise NumericalException(f'Gauss-Markov integration failed: {solution.message}')

    states = []
    for k, t in enumerate(solution.t):
        cov = solution.y[ndim:, k].reshape(ndim, ndim)
        cov = 0.5 * (cov + cov.T)
        if np.linalg.eigvalsh(cov).min() <= 0:
            raise NumericalException(f'Covariance lost positive definiteness at t={t}')
        mean = solution.y[:ndim, k]
        divergence = GaussianDensity(mean, cov).kl_divergence(equilibrium)
        states.append(GaussMarkovState(mean, cov, float(t), divergence))
    return states


def gauss_markov_rows(states):
    ndim = len(states[0].mean)
    upper = np.triu_indices(ndim)
    header = (['t'] + [f'mean_{i}' for i in range(ndim)]
              + [f'cov_{i}{j}' for i, j in zip(*upper)] + ['D'])
    rows = [[s.time, *s.mean, *s.covariance[upper], s.divergence] for s in states]
    return header, rows
