"""Forward, backward and current drifts estimated from path ensembles.

Conditional expectations are estimated by binning the state at the reference
time into grid cells. Cells with fewer than ``min_count`` samples are flagged
as empty and left out of every norm.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np

from entrolab.config.constants import Constants
from entrolab.entropy_production import relative_entropy_rate
from entrolab.exceptions import ValidationException
from entrolab.logger import logger
from entrolab.model_core import VectorFieldGrid, check_same_grid, gradient


@dataclass(frozen=True, eq=False)
class DriftEstimate:
    grid: object
    values: np.ndarray
    counts: np.ndarray
    standard_errors: np.ndarray
    min_count: int = Constants.default_min_count

    @property
    def populated(self):
        return self.counts >= self.min_count

    def to_field(self, fill=0.0):
        values = np.where(self.populated[np.newaxis], self.values, fill)
        return VectorFieldGrid(self.grid, values)

    def at(self, points, fill=0.0):
        """Field values at arbitrary points; empty cells and points outside the grid get ``fill``."""
        cells = self.grid.cell_index(points)
        flat = self.to_field(fill).values.reshape(self.grid.ndim, -1)
        result = np.full((len(cells), self.grid.ndim), float(fill))
        inside = cells >= 0
        result[inside] = flat[:, cells[inside]].T
        return result


def _indices(ensemble, t_index, offset):
    indices = np.atleast_1d(np.asarray(t_index, dtype=int))
    target = indices + offset
    if np.any(indices < 0) or np.any(target < 0) or np.any(target >= ensemble.n_times) \
            or np.any(indices >= ensemble.n_times):
        raise ValidationException(
            f'Time index {t_index} with offset {offset} outside 0..{ensemble.n_times - 1}')
    return indices


def _binned_average(grid, positions, increments, min_count):
    cells = grid.cell_index(positions)
    inside = cells >= 0
    cells = cells[inside]
    increments = increments[inside]

    counts = np.bincount(cells, minlength=grid.size).astype(float)
    safe = np.maximum(counts, 1.0)
    means = np.empty((grid.ndim, grid.size))
    errors = np.empty((grid.ndim, grid.size))
    for axis in range(grid.ndim):
        sums = np.bincount(cells, weights=increments[:, axis], minlength=grid.size)
        squares = np.bincount(cells, weights=increments[:, axis] ** 2, minlength=grid.size)
        mean = sums / safe
        variance = np.maximum(squares / safe - mean ** 2, 0.0) * safe / np.maximum(safe - 1, 1.0)
        means[axis] = np.where(counts > 0, mean, np.nan)
        errors[axis] = np.where(counts > 1, np.sqrt(variance / safe), np.inf)

    shape = (grid.ndim,) + grid.shape
    return DriftEstimate(grid, means.reshape(shape), counts.reshape(grid.shape).astype(int),
                         errors.reshape(shape), min_count)


def estimate_forward_drift(ensemble, t_index, grid, min_count=Constants.default_min_count):
    """E[(x(t + dt) - x(t)) / dt | x(t) in cell]; t_index may be a sequence to pool times."""
    indices = _indices(ensemble, t_index, 1)
    positions = ensemble.paths[:, indices, :].reshape(-1, ensemble.ndim)
    increments = ((ensemble.paths[:, indices + 1, :] - ensemble.paths[:, indices, :])
                  / ensemble.dt).reshape(-1, ensemble.ndim)
    return _binned_average(grid, positions, increments, min_count)


def estimate_backward_drift(ensemble, t_index, grid, min_count=Constants.default_min_count):
    """E[(x(t) - x(t - dt)) / dt | x(t) in cell]."""
    indices = _indices(ensemble, t_index, -1)
    positions = ensemble.paths[:, indices, :].reshape(-1, ensemble.ndim)
    increments = ((ensemble.paths[:, indices, :] - ensemble.paths[:, indices - 1, :])
                  / ensemble.dt).reshape(-1, ensemble.ndim)
    return _binned_average(grid, positions, increments, min_count)


def osmotic_residual(beta, gamma, density, sigma2):
    """Weighted RMS of beta - gamma - sigma2 grad log p over well-populated cells."""
    grid = check_same_grid(beta, gamma, density)
    mask = beta.populated & gamma.populated & (density.values > 0)
    if not np.any(mask):
        logger.warning('No well-populated cells for the osmotic residual')
        return np.nan

    osmotic = sigma2 * gradient(grid, density.log_values())
    residual = beta.values - gamma.values - osmotic
    weights = density.values * np.minimum(beta.counts, gamma.counts)
    squares = np.sum(np.where(mask[np.newaxis], residual, 0.0) ** 2, axis=0)
    return float(np.sqrt(np.sum(weights[mask] * squares[mask]) / np.sum(weights[mask])))


def current_drift(beta, gamma):
    """v = (beta + gamma) / 2 cell-wise; counts combine as the minimum."""
    grid = check_same_grid(beta, gamma)
    return DriftEstimate(
        grid,
        0.5 * (beta.values + gamma.values),
        np.minimum(beta.counts, gamma.counts),
        0.5 * np.sqrt(beta.standard_errors ** 2 + gamma.standard_errors ** 2),
        max(beta.min_count, gamma.min_count),
    )


def _evaluator(drift_field):
    if isinstance(drift_field, DriftEstimate):
        return lambda points, t: drift_field.at(points)
    return drift_field


@dataclass(frozen=True)
class MonteCarloValue:
    value: float
    standard_error: float


def finite_energy_estimate(ensemble, drift_field):
    """E of the integral of |beta(x(t), t)|^2 dt over the horizon (left Riemann sum per path)."""
    evaluate = _evaluator(drift_field)
    totals = np.zeros(ensemble.n_paths)
    for k, t in enumerate(ensemble.times[:-1]):
        values = np.asarray(evaluate(ensemble.paths[:, k, :], t), dtype=float)
        totals += np.sum(values.reshape(ensemble.n_paths, -1) ** 2, axis=1) * ensemble.dt

    error = totals.std(ddof=1) / np.sqrt(ensemble.n_paths) if ensemble.n_paths > 1 else 0.0
    return MonteCarloValue(float(totals.mean()), float(error))


@dataclass(frozen=True)
class ProbeFunction:
    name: str
    value: Callable
    gradient: Callable


def _first_axis(function):
    def gradient_of(points):
        result = np.zeros_like(points)
        result[:, 0] = function(points[:, 0])
        return result
    return gradient_of


STANDARD_TEST_FUNCTIONS = (
    ProbeFunction('x', lambda p: p[:, 0], _first_axis(np.ones_like)),
    ProbeFunction('x^2', lambda p: p[:, 0] ** 2, _first_axis(lambda x: 2 * x)),
    ProbeFunction('cos x', lambda p: np.cos(p[:, 0]), _first_axis(lambda x: -np.sin(x))),
)


@dataclass(frozen=True)
class ContinuityResult:
    name: str
    time_derivative: float
    transport: float
    standard_error: float

    @property
    def discrepancy(self):
        scale = max(abs(self.time_derivative), abs(self.transport), 1e-300)
        return abs(self.time_derivative - self.transport) / scale

    @property
    def passed(self):
        gap = abs(self.time_derivative - self.transport)
        return gap <= 3 * self.standard_error + 1e-12 * max(1.0, abs(self.transport))


def weak_continuity_check(ensemble, v, t_index, test_functions=STANDARD_TEST_FUNCTIONS):
    """Compare d/dt <phi> (central difference) with <grad phi . v> at an interior time index."""
    if ensemble.n_times < 3 or not 0 < t_index < ensemble.n_times - 1:
        raise ValidationException(
            f'Weak continuity needs an interior time index, got {t_index} of {ensemble.n_times}')

    evaluate = _evaluator(v)
    t = ensemble.times[t_index]
    before = ensemble.paths[:, t_index - 1, :]
    now = ensemble.paths[:, t_index, :]
    after = ensemble.paths[:, t_index + 1, :]
    velocity = np.asarray(evaluate(now, t), dtype=float).reshape(now.shape)

    results = []
    for phi in test_functions:
        derivative = (phi.value(after) - phi.value(before)) / (2 * ensemble.dt)
        transport = np.sum(phi.gradient(now) * velocity, axis=1)
        gap = derivative - transport
        error = gap.std(ddof=1) / np.sqrt(len(gap)) if len(gap) > 1 else 0.0
        results.append(ContinuityResult(phi.name, float(derivative.mean()),
                                        float(transport.mean()), float(error)))
    return results


def current_drift_entropy_rate(v_tilde, p_tilde, v, p):
    """d/dt D(p~ || p) with current-drift fields in place of the continuity velocities."""
    return relative_entropy_rate(p_tilde, p, v_tilde.to_field(), v.to_field())


def drift_table(beta, gamma):
    """Header and rows x..., beta, gamma, v, count, se per grid cell."""
    grid = check_same_grid(beta, gamma)
    current = current_drift(beta, gamma)
    ndim = grid.ndim
    header = ([f'x_{i}' for i in range(ndim)] + [f'beta_{i}' for i in range(ndim)]
              + [f'gamma_{i}' for i in range(ndim)] + [f'v_{i}' for i in range(ndim)]
              + ['count'] + [f'se_{i}' for i in range(ndim)])
    flat = [field.reshape(ndim, -1) for field in
            (beta.values, gamma.values, current.values, current.standard_errors)]
    counts = current.counts.ravel()
    rows = []
    for cell, point in enumerate(grid.points):
        rows.append([*point, *flat[0][:, cell], *flat[1][:, cell], *flat[2][:, cell],
                     int(counts[cell]), *flat[3][:, cell]])
    return header, rows
