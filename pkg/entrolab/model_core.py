"""Grid densities, Hamiltonians and the equilibrium functionals built on them.

Everything here is immutable once constructed. Densities live on uniform
rectangular grids and are integrated with the midpoint rule; every gradient is
taken with the same discrete operator (central differences inside, one-sided
at the box boundary) so that identities between fluxes, forces and entropy
integrands hold in the discrete algebra.
"""
import csv
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Tuple

import numpy as np

from entrolab.config.constants import Constants
from entrolab.exceptions import (
    GridMismatchException,
    NumericalException,
    ValidationException,
)
from entrolab.logger import logger
from entrolab.utils import format_float


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular grid of cells. Cell centers are the quadrature nodes."""
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    cells: Tuple[int, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        cells = tuple(int(v) for v in np.atleast_1d(self.cells))

        if not len(lower) == len(upper) == len(cells) or not lower:
            raise ValidationException(
                'Grid bounds and cell counts need one entry per dimension')
        for lo, hi, count in zip(lower, upper, cells):
            if not hi > lo:
                raise ValidationException(f'Grid upper bound {hi} is not above lower bound {lo}')
            if count < 2:
                raise ValidationException(f'Grid needs at least 2 cells per dimension, got {count}')

        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)
        object.__setattr__(self, 'cells', cells)

    @property
    def ndim(self):
        return len(self.cells)

    @property
    def shape(self):
        return self.cells

    @property
    def size(self):
        return int(np.prod(self.cells))

    @cached_property
    def spacing(self):
        return tuple((hi - lo) / count
                     for lo, hi, count in zip(self.lower, self.upper, self.cells))

    @cached_property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def box_volume(self):
        return float(np.prod([hi - lo for lo, hi in zip(self.lower, self.upper)]))

    @cached_property
    def axes(self):
        return [lo + (np.arange(count) + 0.5) * h
                for lo, count, h in zip(self.lower, self.cells, self.spacing)]

    def mesh(self):
        return np.meshgrid(*self.axes, indexing='ij')

    @cached_property
    def points(self):
        """Cell centers as an array of shape (size, ndim), C order."""
        return np.stack([m.ravel() for m in self.mesh()], axis=-1)

    @cached_property
    def boundary_mask(self):
        mask = np.zeros(self.shape, dtype=bool)
        for axis in range(self.ndim):
            index = [slice(None)] * self.ndim
            index[axis] = 0
            mask[tuple(index)] = True
            index[axis] = -1
            mask[tuple(index)] = True
        return mask

    def cell_index(self, positions):
        """Flat cell index for each row of positions, -1 outside the box."""
        positions = np.asarray(positions, dtype=float).reshape(-1, self.ndim)
        flat = np.zeros(len(positions), dtype=np.int64)
        inside = np.ones(len(positions), dtype=bool)
        for axis, (lo, h, count) in enumerate(zip(self.lower, self.spacing, self.cells)):
            index = np.floor((positions[:, axis] - lo) / h).astype(np.int64)
            inside &= (index >= 0) & (index < count)
            flat = flat * count + np.clip(index, 0, count - 1)
        flat[~inside] = -1
        return flat

    def header(self):
        return ' '.join(f'{format_float(lo)} {format_float(hi)} {count}'
                        for lo, hi, count in zip(self.lower, self.upper, self.cells))


def as_points(x, ndim):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return x.reshape(1, 1)
    if x.ndim == 1:
        return x.reshape(-1, 1) if ndim == 1 else x.reshape(1, -1)
    return x


def gradient(grid, values):
    """Shared discrete gradient, returned with shape (ndim, *grid.shape)."""
    values = np.asarray(values, dtype=float)
    if grid.ndim == 1:
        return np.gradient(values, grid.spacing[0], edge_order=1)[np.newaxis]
    return np.stack(np.gradient(values, *grid.spacing, edge_order=1))


def safe_log(values):
    return np.log(np.maximum(values, Constants.density_floor))


def check_same_grid(*items):
    grid = items[0].grid
    for item in items[1:]:
        if item.grid != grid:
            raise GridMismatchException(
                f'Objects live on different grids: [{grid.header()}] and [{item.grid.header()}]')
    return grid


@dataclass(frozen=True, eq=False)
class GridDensity:
    grid: Grid
    values: np.ndarray
    mass: Optional[float] = None
    warnings: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise ValidationException('Density values must be finite')
        if np.any(values < 0):
            raise ValidationException(f'Density has negative values (min {values.min():.3e})')
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)

        measured = float(values.sum() * self.grid.cell_volume)
        if self.mass is None:
            object.__setattr__(self, 'mass', measured)
        elif abs(measured - self.mass) > Constants.mass_tolerance * max(1.0, abs(self.mass)):
            raise ValidationException(
                f'Density mass {measured!r} differs from its declared mass {self.mass!r}')
        object.__setattr__(self, 'warnings', frozenset(self.warnings))

    @classmethod
    def normalized(cls, grid, values, warnings=frozenset()):
        values = np.asarray(values, dtype=float)
        total = values.sum() * grid.cell_volume
        if not total > 0:
            raise ValidationException('Cannot normalize a density with zero mass')
        return cls(grid, values / total, mass=1.0, warnings=warnings)

    @classmethod
    def from_function(cls, grid, function):
        values = np.asarray(function(grid.points), dtype=float).reshape(grid.shape)
        return cls.normalized(grid, values)

    def total_mass(self):
        return float(self.values.sum() * self.grid.cell_volume)

    def log_values(self):
        return safe_log(self.values)

    def positive_interior(self):
        return bool(np.all(self.values[~self.grid.boundary_mask] > 0))

    def mean(self):
        weights = self.values.ravel() * self.grid.cell_volume
        return weights @ self.grid.points / weights.sum()

    def covariance(self):
        weights = self.values.ravel() * self.grid.cell_volume
        centered = self.grid.points - self.mean()
        return (centered * weights[:, np.newaxis]).T @ centered / weights.sum()

    def to_csv(self, path):
        with open(path, 'w', encoding='UTF-8', newline='') as f:
            f.write(f'# grid: {self.grid.header()}\n')
            writer = csv.writer(f)
            for point, value in zip(self.grid.points, self.values.ravel()):
                writer.writerow([format_float(x) for x in point] + [format_float(value)])

    @classmethod
    def from_csv(cls, path):
        with open(path, 'r', encoding='UTF-8') as f:
            header = f.readline()
            if not header.startswith('# grid:'):
                raise ValidationException(f'"{path}" does not start with a "# grid:" header')
            numbers = header[len('# grid:'):].split()
            if not numbers or len(numbers) % 3:
                raise ValidationException(f'Malformed grid header in "{path}"')
            lower = [float(v) for v in numbers[0::3]]
            upper = [float(v) for v in numbers[1::3]]
            cells = [int(v) for v in numbers[2::3]]
            rows = [row for row in csv.reader(f) if row]

        grid = Grid(lower, upper, cells)
        if len(rows) != grid.size:
            raise ValidationException(
                f'"{path}" holds {len(rows)} rows but its grid has {grid.size} cells')
        values = np.array([float(row[-1]) for row in rows])
        return cls(grid, values)


@dataclass(frozen=True, eq=False)
class GaussianDensity:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        covariance = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if covariance.shape != (len(mean), len(mean)):
            raise ValidationException('Covariance shape does not match the mean')
        if not np.allclose(covariance, covariance.T, rtol=0, atol=1e-12):
            raise ValidationException('Covariance is not symmetric')
        if np.linalg.eigvalsh(covariance).min() <= 0:
            raise ValidationException('Covariance is not positive definite')
        object.__setattr__(self, 'mean', mean)
        object.__setattr__(self, 'covariance', covariance)

    @property
    def ndim(self):
        return len(self.mean)

    @cached_property
    def precision(self):
        return np.linalg.inv(self.covariance)

    def log_pdf(self, points):
        points = as_points(points, self.ndim)
        centered = points - self.mean
        _, logdet = np.linalg.slogdet(self.covariance)
        quadratic = np.einsum('mi,ij,mj->m', centered, self.precision, centered)
        return -0.5 * (quadratic + logdet + self.ndim * np.log(2 * np.pi))

    def pdf(self, points):
        return np.exp(self.log_pdf(points))

    def log_density_gradient(self, points):
        points = as_points(points, self.ndim)
        return -(points - self.mean) @ self.precision.T

    def on_grid(self, grid):
        return GridDensity.normalized(grid, self.pdf(grid.points).reshape(grid.shape))

    def kl_divergence(self, other):
        """Closed-form D(self || other) in nats."""
        _, logdet_self = np.linalg.slogdet(self.covariance)
        _, logdet_other = np.linalg.slogdet(other.covariance)
        delta = other.mean - self.mean
        return float(0.5 * (np.trace(other.precision @ self.covariance)
                            + delta @ other.precision @ delta
                            - self.ndim + logdet_other - logdet_self))


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """Energy H with gradient, temperature kT and noise level sigma2 (Sigma Sigma^T = sigma2 I).

    ``energy`` maps points of shape (m, ndim) to (m,), ``gradient`` to (m, ndim).
    """
    energy: Callable
    gradient: Callable
    kT: float
    sigma2: float
    ndim: int = 1
    quadratic_form: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.kT > 0:
            raise ValidationException(f'kT must be positive, got {self.kT}')
        if not self.sigma2 >= 0:
            raise ValidationException(f'sigma2 must be nonnegative, got {self.sigma2}')
        self.check_gradient()

    def check_gradient(self, probes=None, rtol=1e-5):
        if probes is None:
            probes = np.random.default_rng(0).uniform(-1.0, 1.0, size=(8, self.ndim))
        probes = as_points(probes, self.ndim)
        analytic = np.asarray(self.gradient(probes), dtype=float).reshape(probes.shape)

        for axis in range(self.ndim):
            step = 1e-5 * np.maximum(1.0, np.abs(probes[:, axis]))
            shift = np.zeros_like(probes)
            shift[:, axis] = step
            numeric = (self.energy(probes + shift) - self.energy(probes - shift)) / (2 * step)
            error = np.abs(numeric - analytic[:, axis])
            if np.any(error > rtol * np.maximum(1.0, np.abs(analytic[:, axis]))):
                raise ValidationException(
                    'Hamiltonian gradient does not match finite differences of the energy '
                    f'(axis {axis}, max error {error.max():.3e})')

    @classmethod
    def quadratic(cls, q_matrix, kT, sigma2):
        """H(x) = x^T Q x / 2 with Q symmetric positive definite."""
        q_matrix = np.atleast_2d(np.asarray(q_matrix, dtype=float))
        if not np.allclose(q_matrix, q_matrix.T, rtol=0, atol=1e-12):
            raise ValidationException('Quadratic form Q must be symmetric')
        if np.linalg.eigvalsh(q_matrix).min() <= 0:
            raise ValidationException('Quadratic form Q must be positive definite')

        def energy(x):
            return 0.5 * np.einsum('mi,ij,mj->m', x, q_matrix, x)

        def grad(x):
            return x @ q_matrix

        return cls(energy, grad, kT, sigma2, ndim=len(q_matrix), quadratic_form=q_matrix)

    @classmethod
    def double_well(cls, a, b, kT, sigma2):
        """H(x) = a x^4 - b x^2 in one dimension."""
        if not a > 0:
            raise ValidationException('Double-well quartic coefficient must be positive')

        def energy(x):
            return a * x[:, 0] ** 4 - b * x[:, 0] ** 2

        def grad(x):
            return 4 * a * x ** 3 - 2 * b * x

        return cls(energy, grad, kT, sigma2)

    def energy_on(self, grid):
        return np.asarray(self.energy(grid.points), dtype=float).reshape(grid.shape)

    def drift(self, points):
        """Uncontrolled drift -(sigma2 / 2kT) grad H."""
        points = as_points(points, self.ndim)
        return -self.sigma2 / (2 * self.kT) * np.asarray(self.gradient(points), dtype=float)


@dataclass(frozen=True, eq=False)
class VectorFieldGrid:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape((self.grid.ndim,) + self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise ValidationException('Vector field has non-finite entries')
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.ndim,) + grid.shape))

    @classmethod
    def from_function(cls, grid, function):
        sampled = np.asarray(function(grid.points), dtype=float).reshape(grid.size, grid.ndim)
        return cls(grid, sampled.T.reshape((grid.ndim,) + grid.shape))

    def norm(self):
        return np.sqrt(np.sum(self.values ** 2, axis=0))

    def dot(self, other):
        check_same_grid(self, other)
        return np.sum(self.values * other.values, axis=0)

    def at_points(self):
        """Field values as (size, ndim) rows matching grid.points."""
        return self.values.reshape(self.grid.ndim, -1).T

    def __add__(self, other):
        check_same_grid(self, other)
        return VectorFieldGrid(self.grid, self.values + other.values)

    def __sub__(self, other):
        check_same_grid(self, other)
        return VectorFieldGrid(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return VectorFieldGrid(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return VectorFieldGrid(self.grid, -self.values)


def log_gradient(density):
    return gradient(density.grid, density.log_values())


def log_ratio_gradient(rho, reference):
    """Discrete gradient of log(rho / reference)."""
    grid = check_same_grid(rho, reference)
    return gradient(grid, rho.log_values() - reference.log_values())


def require_positive_interior(*densities):
    for density in densities:
        if not density.positive_interior():
            raise NumericalException(
                'log-density undefined: density vanishes on interior cells')


def gibbs_density(ham, grid):
    """Maxwell-Boltzmann density exp(-H/kT)/Z, Z by grid quadrature."""
    energy = ham.energy_on(grid)
    if not np.all(np.isfinite(energy)):
        raise NumericalException('hamiltonian not finite on the grid')

    weights = np.exp(-(energy - energy.min()) / ham.kT)
    values = weights / (weights.sum() * grid.cell_volume)

    warnings = set()
    if values[grid.boundary_mask].max() >= Constants.boundary_mass_ratio * values.max():
        warnings.add('boundary-mass')
        logger.warning('Gibbs density does not decay at the grid boundary '
                       '(boundary/max ratio %.3e)',
                       values[grid.boundary_mask].max() / values.max())

    return GridDensity(grid, values, mass=1.0, warnings=frozenset(warnings))


def relative_entropy(rho, sigma):
    """D(rho || sigma) in nats; +inf when rho charges cells where sigma vanishes."""
    grid = check_same_grid(rho, sigma)
    if abs(rho.mass - sigma.mass) > Constants.mass_warning_tolerance:
        logger.warning('Relative entropy between densities of unequal mass (%.9g vs %.9g), '
                       'the result may be negative', rho.mass, sigma.mass)

    support = rho.values > 0
    if np.any(support & (sigma.values <= 0)):
        return np.inf

    r = rho.values[support]
    log_ratio = np.log(r) - np.log(sigma.values[support])
    return float(np.sum(r * log_ratio) * grid.cell_volume)


def free_energy(rho, equilibrium, kT):
    return kT * relative_entropy(rho, equilibrium)


def differential_entropy(rho):
    support = rho.values > 0
    r = rho.values[support]
    return float(-np.sum(r * np.log(r)) * rho.grid.cell_volume)


def flux_and_force(rho, ham):
    """Fluxes J and forces Phi = -grad(H + kT log rho).

    The density gradient inside J is taken as rho * grad(log rho) so that the
    constitutive relation J = (sigma2 / 2kT) Phi rho holds with the same
    discrete gradient on both sides.
    """
    require_positive_interior(rho)
    grid = rho.grid
    energy = ham.energy_on(grid)
    log_rho = rho.log_values()

    force = -gradient(grid, energy + ham.kT * log_rho)
    flux = (-0.5 * ham.sigma2 * rho.values * gradient(grid, log_rho)
            - ham.sigma2 / (2 * ham.kT) * gradient(grid, energy) * rho.values)

    return VectorFieldGrid(grid, flux), VectorFieldGrid(grid, force)
