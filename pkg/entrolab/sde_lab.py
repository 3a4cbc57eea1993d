"""Monte Carlo ensembles of the controlled diffusion and of the underdamped polymer model."""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.ndimage import gaussian_filter

from entrolab.config.constants import Constants
from entrolab.exceptions import DivergenceException, ValidationException
from entrolab.logger import logger
from entrolab.model_core import GaussianDensity, GridDensity


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """Trajectories of shape (N, T + 1, n) recorded every ``dt`` time units from ``t0``.

    Underdamped ensembles also carry ``momenta`` with the same shape.
    """
    paths: np.ndarray
    dt: float
    seed: int
    t0: float = 0.0
    momenta: Optional[np.ndarray] = None

    def __post_init__(self):
        paths = np.asarray(self.paths, dtype=float)
        if paths.ndim == 2:
            paths = paths[:, :, np.newaxis]
        if paths.ndim != 3 or paths.shape[0] < 1:
            raise ValidationException('Ensemble paths need shape (N, T + 1, n) with N >= 1')
        if not np.all(np.isfinite(paths)):
            raise ValidationException('Ensemble paths have non-finite entries')
        if not self.dt > 0:
            raise ValidationException(f'Ensemble time step must be positive, got {self.dt}')
        object.__setattr__(self, 'paths', paths)

        if self.momenta is not None:
            momenta = np.asarray(self.momenta, dtype=float).reshape(paths.shape)
            object.__setattr__(self, 'momenta', momenta)

    @property
    def n_paths(self):
        return self.paths.shape[0]

    @property
    def n_times(self):
        return self.paths.shape[1]

    @property
    def ndim(self):
        return self.paths.shape[2]

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.n_times)

    def samples(self, t_index):
        """States at one time index, or pooled over a sequence of indices."""
        indices = np.atleast_1d(t_index)
        if np.any(indices < 0) or np.any(indices >= self.n_times):
            raise ValidationException(f'Time index {t_index} outside 0..{self.n_times - 1}')
        return self.paths[:, indices, :].reshape(-1, self.ndim)

    def moments(self, t_index):
        samples = self.samples(t_index)
        mean = samples.mean(axis=0)
        cov = np.atleast_2d(np.cov(samples, rowvar=False)) if len(samples) > 1 \
            else np.zeros((self.ndim, self.ndim))
        return mean, cov

    def standard_errors(self, t_index):
        """Standard errors of the sample mean and of the sample variance per component."""
        samples = self.samples(t_index)
        n = len(samples)
        centered = samples - samples.mean(axis=0)
        variance = centered.var(axis=0, ddof=1)
        mean_se = np.sqrt(variance / n)
        variance_se = np.sqrt(np.maximum((centered ** 4).mean(axis=0) - variance ** 2, 0.0) / n)
        return mean_se, variance_se

    def rows(self):
        for k, t in enumerate(self.times):
            for path in range(self.n_paths):
                yield [t, path, *self.paths[path, k]]

    def row_header(self):
        return ['t', 'trajectory'] + [f'x_{i}' for i in range(self.ndim)]

    def summary_header(self, masses=None):
        upper = np.triu_indices(self.ndim)
        header = ['t'] + [f'mean_{i}' for i in range(self.ndim)]
        header += [f'cov_{i}{j}' for i, j in zip(*upper)]
        return header + (['kinetic_temperature'] if masses is not None else [])

    def summary(self, masses=None):
        """Rows t, mean, covariance entries and, with masses, the instantaneous kinetic temperature."""
        upper = np.triu_indices(self.ndim)
        rows = []
        for k, t in enumerate(self.times):
            mean, cov = self.moments(k)
            row = [t, *mean, *cov[upper]]
            if masses is not None and self.momenta is not None:
                velocity = self.momenta[:, k, :] / masses
                row.append(float(np.mean(np.sum(masses * velocity ** 2, axis=1)) / self.ndim))
            rows.append(row)
        return rows


def block_generator(seed, block):
    """Counter-based stream for one block of trajectories."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(sequence))


def gaussian_sampler(mean, covariance):
    density = GaussianDensity(mean, covariance)

    def sample(rng, count):
        return rng.multivariate_normal(density.mean, density.covariance, size=count)

    return sample


def point_sampler(x0):
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))

    def sample(rng, count):
        return np.tile(x0, (count, 1))

    return sample


def _blocks(n_paths):
    size = Constants.noise_block_size
    return [(start, min(start + size, n_paths)) for start in range(0, n_paths, size)]


def _steps(dt, t1, record_every):
    if not dt > 0 or not t1 > 0:
        raise ValidationException(f'dt and t1 must be positive, got dt={dt}, t1={t1}')
    steps = int(round(t1 / dt))
    if steps < 1 or abs(steps * dt - t1) > 1e-9 * max(1.0, t1):
        raise ValidationException(f'Horizon {t1} is not a whole number of steps dt={dt}')
    if record_every < 1 or steps % record_every:
        raise ValidationException(f'record_every={record_every} does not divide {steps} steps')
    return steps


def _initial_states(sampler, n_paths, ndim, seed):
    generators = []
    states = np.empty((n_paths, ndim))
    for block, (start, stop) in enumerate(_blocks(n_paths)):
        rng = block_generator(seed, block)
        states[start:stop] = np.asarray(sampler(rng, stop - start), dtype=float).reshape(-1, ndim)
        generators.append(rng)
    return states, generators


def _check_escape(states, radius, start, t):
    norms = np.linalg.norm(states, axis=1)
    escaped = ~np.isfinite(norms) | (norms > radius)
    if np.any(escaped):
        index = start + int(np.argmax(escaped))
        raise DivergenceException(
            f'trajectory divergence: path {index} left the escape radius {radius:g} at t={t:g}',
            index=index)


def default_escape_radius(ham, states):
    """Escape factor times the equilibrium spread sqrt(kT / kappa), or the initial spread."""
    spread = float(np.max(states.std(axis=0))) if len(states) > 1 else 0.0
    if ham.quadratic_form is None:
        return Constants.default_escape_factor * max(spread, 1.0)
    stiffness = float(np.linalg.eigvalsh(ham.quadratic_form).min())
    equilibrium = np.sqrt(ham.kT / stiffness)
    return Constants.default_escape_factor * max(equilibrium, spread)


def simulate_overdamped(ham, u, x0_sampler, n_paths, dt, t1, seed, record_every=1,
                        escape_radius=None):
    """Euler-Maruyama paths of dx = [-(sigma2 / 2kT) grad H + u(x, t)] dt + sigma dW.

    ``u`` maps (points, t) to a control velocity of the same shape, or is None.
    """
    if n_paths < 1:
        raise ValidationException('Ensemble needs at least one path')
    steps = _steps(dt, t1, record_every)
    ndim = ham.ndim
    states, generators = _initial_states(x0_sampler, n_paths, ndim, seed)
    if escape_radius is None:
        escape_radius = default_escape_radius(ham, states)

    logger.debug('Simulating %d overdamped paths, %d steps of dt=%g, escape radius %g',
                 n_paths, steps, dt, escape_radius)

    paths = np.empty((n_paths, steps // record_every + 1, ndim))
    noise_scale = np.sqrt(ham.sigma2 * dt)

    for (start, stop), rng in zip(_blocks(n_paths), generators):
        x = states[start:stop].copy()
        paths[start:stop, 0] = x
        for step in range(steps):
            t = step * dt
            velocity = ham.drift(x)
            if u is not None:
                velocity = velocity + np.asarray(u(x, t), dtype=float).reshape(x.shape)
            x = x + velocity * dt + noise_scale * rng.standard_normal(x.shape)
            _check_escape(x, escape_radius, start, t + dt)
            if (step + 1) % record_every == 0:
                paths[start:stop, (step + 1) // record_every] = x

    return PathEnsemble(paths, dt * record_every, seed)


@dataclass(frozen=True, eq=False)
class PolymerSpec:
    """Underdamped blocks with positions q, momenta p and velocities V = p / m.

    ``potential`` and ``gradient`` act on positions of shape (m, n_blocks * dim).
    The noise matrix acts on momenta only and must satisfy noise noise^T = 2 gamma kT I.
    """
    masses: np.ndarray
    potential: Callable
    gradient: Callable
    gamma: float
    alpha_c: float
    temperature: float
    dim: int = 1
    noise: Optional[np.ndarray] = None

    def __post_init__(self):
        masses = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if np.any(masses <= 0):
            raise ValidationException('Block masses must be positive')
        if self.gamma < 0 or self.alpha_c < 0:
            raise ValidationException('Friction and control gain must be nonnegative')
        if not self.temperature > 0:
            raise ValidationException('Thermostat temperature must be positive')
        object.__setattr__(self, 'masses', masses)

        size = len(masses) * self.dim
        noise = (np.sqrt(2 * self.gamma * self.temperature) * np.eye(size)
                 if self.noise is None else np.asarray(self.noise, dtype=float))
        if noise.shape != (size, size):
            raise ValidationException(f'Noise matrix must be {size}x{size}')
        expected = 2 * self.gamma * self.temperature * np.eye(size)
        if np.max(np.abs(noise @ noise.T - expected)) > 1e-12 * max(1.0, np.max(expected)):
            raise ValidationException(
                'Noise matrix violates fluctuation-dissipation: noise noise^T != 2 gamma kT I')
        object.__setattr__(self, 'noise', noise)

    @classmethod
    def harmonic(cls, masses, spring, gamma, alpha_c, temperature, dim=1):
        """Independent blocks in the potential K |q|^2 / 2."""
        def potential(q):
            return 0.5 * spring * np.sum(q ** 2, axis=1)

        def gradient(q):
            return spring * q

        return cls(masses, potential, gradient, gamma, alpha_c, temperature, dim)

    @property
    def size(self):
        return len(self.masses) * self.dim

    @property
    def mass_vector(self):
        return np.repeat(self.masses, self.dim)

    def energy(self, q, p):
        return self.potential(q) + 0.5 * np.sum(p ** 2 / self.mass_vector, axis=1)


def simulate_polymer(spec, n_paths, dt, t1, seed, q0_sampler=None, p0_sampler=None,
                     record_every=1, escape_radius=None):
    """Symplectic Euler: momenta first (force, friction, control, noise), then positions."""
    if n_paths < 1:
        raise ValidationException('Ensemble needs at least one path')
    steps = _steps(dt, t1, record_every)
    size = spec.size
    zero = point_sampler(np.zeros(size))
    q0_sampler = q0_sampler or zero
    p0_sampler = p0_sampler or zero

    generators = []
    q_states = np.empty((n_paths, size))
    p_states = np.empty((n_paths, size))
    for block, (start, stop) in enumerate(_blocks(n_paths)):
        rng = block_generator(seed, block)
        q_states[start:stop] = np.asarray(q0_sampler(rng, stop - start)).reshape(-1, size)
        p_states[start:stop] = np.asarray(p0_sampler(rng, stop - start)).reshape(-1, size)
        generators.append(rng)

    if escape_radius is None:
        spread = np.sqrt(spec.temperature * np.max(spec.mass_vector))
        escape_radius = Constants.default_escape_factor * max(spread, 1.0)

    masses = spec.mass_vector
    damping = spec.gamma + spec.alpha_c
    noise = spec.noise * np.sqrt(dt)
    logger.debug('Simulating %d polymer paths, %d steps of dt=%g, friction %g + control %g',
                 n_paths, steps, dt, spec.gamma, spec.alpha_c)

    frames = steps // record_every + 1
    positions = np.empty((n_paths, frames, size))
    momenta = np.empty((n_paths, frames, size))

    for (start, stop), rng in zip(_blocks(n_paths), generators):
        q = q_states[start:stop].copy()
        p = p_states[start:stop].copy()
        positions[start:stop, 0] = q
        momenta[start:stop, 0] = p
        for step in range(steps):
            force = -spec.gradient(q) - damping * p / masses
            p = p + force * dt + rng.standard_normal(p.shape) @ noise.T
            q = q + dt * p / masses
            _check_escape(np.hstack([q, p]), escape_radius, start, (step + 1) * dt)
            if (step + 1) % record_every == 0:
                positions[start:stop, (step + 1) // record_every] = q
                momenta[start:stop, (step + 1) // record_every] = p

    return PathEnsemble(positions, dt * record_every, seed, momenta=momenta)


@dataclass(frozen=True)
class KineticTemperature:
    value: float
    standard_error: float
    per_block: tuple


def kinetic_temperature(ensemble, spec, window=None):
    """Equipartition temperature m <|V|^2> / dim averaged over a time window (t_start, t_end)."""
    if ensemble.momenta is None:
        raise ValidationException('Kinetic temperature needs an ensemble with momenta')
    times = ensemble.times
    start, stop = (times[0], times[-1]) if window is None else window
    tolerance = 1e-9 * max(1.0, abs(times[-1]))
    if start < times[0] - tolerance or stop > times[-1] + tolerance or stop < start:
        raise ValidationException(
            f'Window [{start}, {stop}] outside the ensemble horizon [{times[0]}, {times[-1]}]')

    selected = (times >= start - tolerance) & (times <= stop + tolerance)
    momenta = ensemble.momenta[:, selected, :]
    masses = spec.mass_vector
    # energy per component, then grouped by block
    kinetic = momenta ** 2 / masses
    blocks = kinetic.reshape(kinetic.shape[0], kinetic.shape[1], len(spec.masses), spec.dim)
    per_path = blocks.mean(axis=(1, 3))
    per_block = tuple(float(v) for v in per_path.mean(axis=0))
    path_values = per_path.mean(axis=1)

    value = float(path_values.mean())
    error = float(path_values.std(ddof=1) / np.sqrt(len(path_values))) \
        if len(path_values) > 1 else 0.0
    return KineticTemperature(value, error, per_block)


def bandwidth_rule(samples, rule='silverman'):
    """Per-axis Gaussian kernel bandwidth."""
    n, ndim = samples.shape
    if n < 2:
        return np.zeros(ndim)
    spread = samples.std(axis=0, ddof=1)
    if rule == 'scott':
        return spread * n ** (-1.0 / (ndim + 4))
    if rule == 'silverman':
        if ndim == 1:
            q75, q25 = np.percentile(samples[:, 0], [75, 25])
            robust = min(spread[0], (q75 - q25) / 1.34) if q75 > q25 else spread[0]
            return np.array([0.9 * robust * n ** (-0.2)])
        return spread * (4.0 / (ndim + 2)) ** (1.0 / (ndim + 4)) * n ** (-1.0 / (ndim + 4))
    raise ValidationException(f'Unknown bandwidth rule "{rule}"')


def estimate_density(ensemble, t_index, grid, bandwidth='auto'):
    """Gaussian kernel density estimate on the grid, normalized to mass 1."""
    samples = ensemble.samples(t_index)
    if samples.shape[1] != grid.ndim:
        raise ValidationException('Ensemble and grid dimensions differ')

    inside = np.all((samples >= np.array(grid.lower)) & (samples < np.array(grid.upper)), axis=1)
    escaped = 1.0 - inside.mean()
    if escaped > 1e-3:
        raise ValidationException(
            f'Grid does not cover the ensemble: {100 * escaped:.3f}% of samples escaped')
    if escaped > 5e-4:
        logger.warning('%.3f%% of samples lie outside the density grid', 100 * escaped)

    if bandwidth == 'auto':
        bandwidth = 'silverman'
    if isinstance(bandwidth, str):
        widths = bandwidth_rule(samples[inside], bandwidth)
    else:
        widths = np.full(grid.ndim, float(bandwidth))
    widths = np.maximum(widths, 0.5 * np.array(grid.spacing))
    logger.debug('Density estimate from %d samples, bandwidth %s', inside.sum(), widths)

    counts, _ = np.histogramdd(samples[inside], bins=grid.cells,
                               range=list(zip(grid.lower, grid.upper)))
    smoothed = gaussian_filter(counts, sigma=widths / np.array(grid.spacing), mode='constant')
    return GridDensity.normalized(grid, smoothed)
