"""Conservative finite-volume solver for continuity-form Fokker-Planck evolutions.

Face fluxes are exponentially fitted (Scharfetter-Gummel / Chang-Cooper type):

    F = (D / h) * (B(-P) rho_L - B(P) rho_R),   B(z) = z / (exp(z) - 1)

with D = sigma2_eff / 2 and P the cell Peclet number of the face velocity. The
potential part of the drift enters through P = -(H_R - H_L) / kT, so the
discrete Gibbs density is an exact stationary point. Time stepping is backward
Euler; the system matrix is an M-matrix, which keeps densities nonnegative.
"""
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from entrolab.config.constants import Constants
from entrolab.exceptions import (
    NumericalException,
    PositivityException,
    StabilityException,
    ValidationException,
)
from entrolab.logger import logger
from entrolab.model_core import (
    GridDensity,
    HamiltonianSpec,
    VectorFieldGrid,
    check_same_grid,
    relative_entropy,
    safe_log,
)


def bernoulli(z):
    z = np.asarray(z, dtype=float)
    result = np.ones_like(z)
    small = np.abs(z) < 1e-8
    with np.errstate(over='ignore'):
        result[~small] = z[~small] / np.expm1(z[~small])
    result[small] = 1.0 - 0.5 * z[small]
    return result


@dataclass(frozen=True, eq=False)
class FeedbackTerm:
    """Feedback u = -gain(t) grad log(rho / equilibrium) evaluated on the new iterate.

    The resulting flux -gain grad(rho) + gain rho grad(log equilibrium) is linear in
    rho and is fitted with its own Peclet number log(eq_R) - log(eq_L).
    """
    gain: Union[float, Callable]
    equilibrium: GridDensity

    def gain_at(self, t):
        return float(self.gain(t)) if callable(self.gain) else float(self.gain)


@dataclass(frozen=True, eq=False)
class DriftSpec:
    """Drift and diffusion of one continuity-form evolution.

    The velocity is the sum of
      * the Einstein-paired potential drift -(sigma2_eff / 2kT) grad H when
        ``potential`` is set,
      * ``drift(points, t)``, a closed-form velocity sampled at face midpoints,
      * ``field`` (a VectorFieldGrid or a callable t -> VectorFieldGrid),
        averaged from cells to faces,
      * the self-consistent ``feedback`` term.
    ``sigma2`` is sigma2_eff, a number or a callable of time.
    """
    sigma2: Union[float, Callable]
    potential: Optional[HamiltonianSpec] = None
    drift: Optional[Callable] = None
    field: Optional[Union[VectorFieldGrid, Callable]] = None
    feedback: Optional[FeedbackTerm] = None
    time_dependent: bool = False

    def __post_init__(self):
        if not callable(self.sigma2) and not self.sigma2 >= 0:
            raise ValidationException(f'Diffusion coefficient must be nonnegative, got {self.sigma2}')

    @classmethod
    def from_hamiltonian(cls, ham, control=None, feedback=None):
        """Drift of the controlled Fokker-Planck equation with control field u."""
        return cls(sigma2=ham.sigma2, potential=ham, field=control, feedback=feedback)

    @property
    def autonomous(self):
        return not (self.time_dependent
                    or callable(self.sigma2)
                    or callable(self.field)
                    or (self.feedback is not None and callable(self.feedback.gain)))

    def sigma2_at(self, t):
        value = float(self.sigma2(t)) if callable(self.sigma2) else float(self.sigma2)
        if value < 0:
            raise ValidationException(f'Diffusion coefficient became negative ({value}) at t={t}')
        return value

    def field_at(self, t):
        if callable(self.field):
            return self.field(t)
        return self.field


@dataclass(frozen=True, eq=False)
class DensityTrajectory:
    times: np.ndarray
    densities: tuple

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if len(times) != len(self.densities) or not len(times):
            raise ValidationException('Trajectory needs one density per time point')
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'densities', tuple(self.densities))

    def __len__(self):
        return len(self.densities)

    def __getitem__(self, index):
        return self.densities[index]

    def __iter__(self):
        return iter(self.densities)

    @property
    def grid(self):
        return self.densities[0].grid

    @property
    def dt(self):
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @property
    def final(self):
        return self.densities[-1]

    def rows(self):
        """Rows t, cell indices..., density."""
        indices = np.array(np.unravel_index(np.arange(self.grid.size), self.grid.shape)).T
        for t, density in zip(self.times, self.densities):
            for index, value in zip(indices, density.values.ravel()):
                yield [t, *index.tolist(), value]

    def row_header(self):
        return ['t'] + [f'cell_{axis}' for axis in range(self.grid.ndim)] + ['density']

    def summary_header(self):
        ndim = self.grid.ndim
        header = ['t', 'mass'] + [f'mean_{i}' for i in range(ndim)]
        header += [f'cov_{i}{j}' for i in range(ndim) for j in range(i, ndim)]
        return header + ['D_to_equilibrium']

    def summary(self, equilibrium=None):
        upper = np.triu_indices(self.grid.ndim)
        rows = []
        for t, density in zip(self.times, self.densities):
            divergence = (relative_entropy(density, equilibrium)
                          if equilibrium is not None else np.nan)
            rows.append([t, density.total_mass(), *density.mean(),
                         *density.covariance()[upper], divergence])
        return rows


def _face_slices(ndim, axis):
    left = [slice(None)] * ndim
    right = [slice(None)] * ndim
    left[axis] = slice(None, -1)
    right[axis] = slice(1, None)
    return tuple(left), tuple(right)


def _face_points(grid, axis):
    axes = list(grid.axes)
    axes[axis] = grid.lower[axis] + grid.spacing[axis] * np.arange(1, grid.cells[axis])
    mesh = np.meshgrid(*axes, indexing='ij')
    return np.stack([m.ravel() for m in mesh], axis=-1), mesh[0].shape


def _check_compatible(drift, grid):
    field = drift.field
    if isinstance(field, VectorFieldGrid) and field.grid != grid:
        raise ValidationException('Drift field lives on a different grid than the density')
    if drift.feedback is not None and drift.feedback.equilibrium.grid != grid:
        raise ValidationException('Feedback equilibrium lives on a different grid than the density')


def _assemble(drift, grid, t):
    diffusion = 0.5 * drift.sigma2_at(t)
    energy = drift.potential.energy_on(grid) if drift.potential is not None else None
    if energy is not None and not np.all(np.isfinite(energy)):
        raise NumericalException('hamiltonian not finite on the grid')
    field = drift.field_at(t)
    log_equilibrium = drift.feedback.equilibrium.log_values() if drift.feedback else None
    gain = drift.feedback.gain_at(t) if drift.feedback else 0.0

    index = np.arange(grid.size).reshape(grid.shape)
    rows, cols, data = [], [], []
    rate = 0.0

    for axis, h in enumerate(grid.spacing):
        left, right = _face_slices(grid.ndim, axis)
        velocity = np.zeros(index[left].shape)
        peclet = np.zeros(index[left].shape)

        if energy is not None:
            peclet = -(energy[right] - energy[left]) / drift.potential.kT
        if drift.drift is not None:
            points, shape = _face_points(grid, axis)
            sampled = np.asarray(drift.drift(points, t), dtype=float).reshape(-1, grid.ndim)
            velocity = velocity + sampled[:, axis].reshape(shape)
        if field is not None:
            velocity = velocity + 0.5 * (field.values[axis][left] + field.values[axis][right])

        face_velocity = diffusion * peclet / h + velocity
        if diffusion > 0:
            total = peclet + velocity * h / diffusion
            forward = diffusion / h * bernoulli(-total)
            backward = diffusion / h * bernoulli(total)
        else:
            forward = np.maximum(velocity, 0.0)
            backward = np.maximum(-velocity, 0.0)

        if log_equilibrium is not None and gain != 0.0:
            feedback_peclet = log_equilibrium[right] - log_equilibrium[left]
            forward = forward + gain / h * bernoulli(-feedback_peclet)
            backward = backward + gain / h * bernoulli(feedback_peclet)
            face_velocity = face_velocity + gain * feedback_peclet / h

        if face_velocity.size:
            rate = max(rate, float(np.abs(face_velocity).max()) / h)

        lo = index[left].ravel()
        hi = index[right].ravel()
        forward = forward.ravel() / h
        backward = backward.ravel() / h
        rows += [lo, lo, hi, hi]
        cols += [lo, hi, lo, hi]
        data += [-forward, backward, forward, -backward]

    operator = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(grid.size, grid.size),
    ).tocsc()
    return operator, rate


def assemble_operator(drift, grid, t=0.0):
    """Sparse generator A with d rho / dt = A rho on the flattened grid."""
    _check_compatible(drift, grid)
    operator, _ = _assemble(drift, grid, t)
    return operator


def _step_count(t0, t1, dt):
    if not dt > 0:
        raise ValidationException(f'Time step must be positive, got {dt}')
    if not t1 > t0:
        raise ValidationException(f'End time {t1} must be after start time {t0}')
    steps = int(round((t1 - t0) / dt))
    if steps < 1 or abs(steps * dt - (t1 - t0)) > 1e-9 * max(1.0, abs(t1 - t0)):
        raise ValidationException(f'Horizon {t1 - t0} is not a whole number of steps dt={dt}')
    return steps


def evolve(drift, rho0, t0, t1, dt, record_every=1,
           courant_limit=Constants.default_courant_limit):
    """Evolve rho0 from t0 to t1 with fixed step dt, keeping every record_every-th state."""
    grid = rho0.grid
    steps = _step_count(t0, t1, dt)
    if record_every < 1 or steps % record_every:
        raise ValidationException(
            f'record_every={record_every} does not divide the {steps} steps of the run')
    _check_compatible(drift, grid)

    logger.debug('Evolving %d steps of dt=%g on grid [%s] (autonomous: %s)',
                 steps, dt, grid.header(), drift.autonomous)

    identity = sparse.identity(grid.size, format='csc')
    initial_mass = rho0.total_mass()
    values = rho0.values.ravel().copy()
    times = [t0]
    densities = [rho0]
    solve = None

    for step in range(steps):
        if solve is None or not drift.autonomous:
            operator, rate = _assemble(drift, grid, t0 + (step + 0.5) * dt)
            if dt * rate > courant_limit:
                suggested = courant_limit / rate
                raise StabilityException(
                    f'Time step {dt} exceeds the Courant limit {courant_limit} '
                    f'(dt * max|f| / h = {dt * rate:.3e}), use dt <= {suggested:.3e}',
                    suggested_dt=suggested)
            solve = splu((identity - dt * operator).tocsc()).solve

        values = solve(values)

        if values.min() < Constants.positivity_floor:
            raise PositivityException(
                f'positivity lost at t={t0 + (step + 1) * dt} (min {values.min():.3e})',
                suggested_dt=dt / 2)
        values = np.maximum(values, 0.0)

        mass = values.sum() * grid.cell_volume
        if abs(mass - initial_mass) > Constants.conservation_tolerance * max(1.0, initial_mass):
            raise NumericalException(
                f'Mass not conserved at t={t0 + (step + 1) * dt}: {mass!r} vs {initial_mass!r}')

        if (step + 1) % record_every == 0:
            times.append(t0 + (step + 1) * dt)
            densities.append(GridDensity(grid, values.reshape(grid.shape)))

    return DensityTrajectory(np.array(times), tuple(densities))


@dataclass(frozen=True)
class BoundaryReport:
    flux_term: float
    tilde_flux_term: float
    log_ratio_term: float
    threshold: float = Constants.boundary_decay_threshold

    @property
    def passed(self):
        return max(self.flux_term, self.tilde_flux_term, self.log_ratio_term) < self.threshold

    def as_dict(self):
        return {
            'flux_term': self.flux_term,
            'tilde_flux_term': self.tilde_flux_term,
            'log_ratio_term': self.log_ratio_term,
            'passed': self.passed,
        }


def check_assumption_a2(rho, f, rho_ref, f_tilde=None):
    """Boundary-decay certificate for integrating by parts on the truncated box.

    ``rho`` is the compared density rho~ with velocity ``f_tilde`` (defaults to
    ``f``); ``rho_ref`` is the reference density with velocity ``f``. Reports the
    boundary maxima of |f rho~|, |f~ rho~| and |f~ rho~ log(rho~ / rho)|.
    """
    grid = check_same_grid(rho, rho_ref, f)
    f_tilde = f if f_tilde is None else f_tilde
    check_same_grid(rho, f_tilde)

    boundary = grid.boundary_mask
    density = rho.values[boundary]
    log_ratio = np.abs(safe_log(rho.values) - safe_log(rho_ref.values))[boundary]
    log_ratio = np.where(density > 0, log_ratio, 0.0)
    speed = f.norm()[boundary]
    tilde_speed = f_tilde.norm()[boundary]

    return BoundaryReport(
        flux_term=float(np.max(speed * density)),
        tilde_flux_term=float(np.max(tilde_speed * density)),
        log_ratio_term=float(np.max(tilde_speed * density * log_ratio)),
    )
