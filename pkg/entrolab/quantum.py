"""Closed and open n-level quantum dynamics and quantum relative entropy production.

Matrix functions of Hermitian operators are evaluated by eigendecomposition.
Lindblad trajectories are integrated with classical RK4 on the vectorized
generator and projected back to density operators after every step.
"""
import csv
import os
from dataclasses import dataclass, field

import numpy as np

from entrolab.config.constants import Constants
from entrolab.exceptions import (
    FileNotFoundException,
    IdentityViolation,
    NumericalException,
    PositivityException,
    ValidationException,
)
from entrolab.logger import logger
from entrolab.utils import format_float

PAULI = {
    'identity': np.eye(2, dtype=complex),
    'sigma_x': np.array([[0, 1], [1, 0]], dtype=complex),
    'sigma_y': np.array([[0, -1j], [1j, 0]], dtype=complex),
    'sigma_z': np.array([[1, 0], [0, -1]], dtype=complex),
}

BUILTIN_OPERATORS = dict(PAULI, **{
    'zero': np.array([[1, 0], [0, 0]], dtype=complex),
    'one': np.array([[0, 0], [0, 1]], dtype=complex),
    'plus': 0.5 * np.ones((2, 2), dtype=complex),
    'mixed': 0.5 * np.eye(2, dtype=complex),
})


def _square(matrix, name):
    matrix = np.array(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or not matrix.size:
        raise ValidationException(f'{name} must be a square matrix')
    if not np.all(np.isfinite(matrix)):
        raise ValidationException(f'{name} has non-finite entries')
    return matrix


def hermitian_error(matrix):
    return float(np.max(np.abs(matrix - matrix.conj().T)))


def hermitize(matrix):
    return 0.5 * (matrix + matrix.conj().T)


def commutator(a, b):
    return a @ b - b @ a


def matrix_function(matrix, function):
    """f(A) for Hermitian A."""
    values, vectors = np.linalg.eigh(hermitize(matrix))
    return (vectors * function(values)) @ vectors.conj().T


@dataclass(frozen=True, eq=False)
class DensityOperator:
    matrix: np.ndarray

    def __post_init__(self):
        matrix = _square(self.matrix, 'Density operator')
        if hermitian_error(matrix) > Constants.hermitian_tolerance:
            raise ValidationException('Density operator is not Hermitian')
        matrix = hermitize(matrix)
        values, vectors = np.linalg.eigh(matrix)
        if values.min() < -Constants.hermitian_tolerance:
            raise ValidationException(
                f'Density operator has a negative eigenvalue {values.min():.3e}')
        if values.min() < 0:
            values = np.maximum(values, 0.0)
            matrix = (vectors * values) @ vectors.conj().T
        trace = np.trace(matrix).real
        if abs(trace - 1.0) > Constants.hermitian_tolerance:
            raise ValidationException(f'Density operator trace is {trace!r}, not 1')
        matrix.flags.writeable = False
        object.__setattr__(self, 'matrix', matrix)

    @classmethod
    def pure(cls, state):
        state = np.asarray(state, dtype=complex).ravel()
        state = state / np.linalg.norm(state)
        return cls(np.outer(state, state.conj()))

    @classmethod
    def maximally_mixed(cls, dim):
        return cls(np.eye(dim, dtype=complex) / dim)

    @classmethod
    def from_bloch(cls, vector):
        x, y, z = vector
        return cls(0.5 * (PAULI['identity'] + x * PAULI['sigma_x']
                          + y * PAULI['sigma_y'] + z * PAULI['sigma_z']))

    @property
    def dim(self):
        return self.matrix.shape[0]

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)

    def bloch_vector(self):
        return np.array([expectation(self, PAULI[name])
                         for name in ('sigma_x', 'sigma_y', 'sigma_z')])


@dataclass(frozen=True, eq=False)
class HamiltonianOperator:
    matrix: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        matrix = _square(self.matrix, 'Hamiltonian')
        if hermitian_error(matrix) > Constants.hermitian_tolerance:
            raise ValidationException('Hamiltonian is not Hermitian')
        if not self.hbar > 0:
            raise ValidationException(f'hbar must be positive, got {self.hbar}')
        matrix = hermitize(matrix)
        matrix.flags.writeable = False
        object.__setattr__(self, 'matrix', matrix)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def __add__(self, other):
        return HamiltonianOperator(self.matrix + other.matrix, self.hbar)


@dataclass(frozen=True, eq=False)
class LindbladSpec:
    hamiltonian: HamiltonianOperator
    jump_operators: tuple = field(default_factory=tuple)

    def __post_init__(self):
        dim = self.hamiltonian.dim
        jumps = tuple(_square(op, 'Jump operator') for op in self.jump_operators)
        for op in jumps:
            if op.shape != (dim, dim):
                raise ValidationException(f'Jump operators must be {dim}x{dim}')
        object.__setattr__(self, 'jump_operators', jumps)

    def perturbed(self, delta_h):
        return LindbladSpec(self.hamiltonian + delta_h, self.jump_operators)

    def superoperator(self):
        """Generator acting on row-major vectorized matrices."""
        dim = self.hamiltonian.dim
        eye = np.eye(dim)
        ham = self.hamiltonian.matrix
        generator = -1j / self.hamiltonian.hbar * (np.kron(ham, eye) - np.kron(eye, ham.T))
        for op in self.jump_operators:
            product = op.conj().T @ op
            generator = generator + (np.kron(op, op.conj())
                                     - 0.5 * np.kron(product, eye)
                                     - 0.5 * np.kron(eye, product.T))
        return generator


def log_operator(rho):
    values = np.linalg.eigvalsh(rho.matrix)
    if values.min() <= Constants.full_rank_threshold:
        raise NumericalException(
            f'log of singular state: smallest eigenvalue {values.min():.3e}')
    return matrix_function(rho.matrix, np.log)


def _real(value, name):
    if abs(value.imag) > Constants.imaginary_tolerance:
        raise IdentityViolation(f'{name} has an imaginary residue {value.imag:.3e}')
    return float(value.real)


def expectation(rho, operator):
    return float(np.trace(rho.matrix @ operator).real)


def variance(rho, operator):
    mean = expectation(rho, operator)
    return expectation(rho, operator @ operator) - mean ** 2


def purity(rho):
    return float(np.trace(rho.matrix @ rho.matrix).real)


def von_neumann_entropy(rho):
    values = rho.eigenvalues()
    values = values[values > 0]
    return float(-np.sum(values * np.log(values)))


def evolve_closed(ham, rho0, t):
    """rho_t = U rho0 U^dagger with U = exp(-i H t / hbar)."""
    if ham.dim != rho0.dim:
        raise ValidationException('Hamiltonian and state dimensions differ')
    unitary = matrix_function(ham.matrix, lambda w: np.exp(-1j * w * t / ham.hbar))
    return DensityOperator(hermitize(unitary @ rho0.matrix @ unitary.conj().T))


def quantum_relative_entropy(rho, sigma):
    """trace(rho (log rho - log sigma)) with 0 log 0 = 0; +inf when supports are not nested."""
    p, u = np.linalg.eigh(rho.matrix)
    q, w = np.linalg.eigh(sigma.matrix)
    threshold = Constants.full_rank_threshold

    support = p > threshold
    kernel = q <= threshold
    overlaps = np.abs(u[:, support].conj().T @ w) ** 2
    if np.any(kernel) and np.any(overlaps[:, kernel] * p[support, np.newaxis] > threshold):
        return np.inf

    p_support = p[support]
    log_q = np.where(kernel, 0.0, np.log(np.where(kernel, 1.0, q)))
    cross = np.sum(p_support[:, np.newaxis] * overlaps * log_q[np.newaxis, :])
    return float(np.sum(p_support * np.log(p_support)) - cross)


def qrec_rate(rho, delta_h, rho_tilde):
    """d/dt D(rho || rho~) = (i / hbar) <[dH, log rho~]>_rho, rho~ evolving under H + dH."""
    value = 1j / delta_h.hbar * np.trace(
        rho.matrix @ commutator(delta_h.matrix, log_operator(rho_tilde)))
    return _real(value, 'qrec_rate')


def qrec_rate_reversed(rho_tilde, delta_h, rho):
    """d/dt D(rho~ || rho) = -(i / hbar) <[dH, log rho]>_rho~."""
    value = -1j / delta_h.hbar * np.trace(
        rho_tilde.matrix @ commutator(delta_h.matrix, log_operator(rho)))
    return _real(value, 'qrec_rate_reversed')


def gibbs_state(ham, beta):
    if beta < 0:
        raise ValidationException(f'Inverse temperature must be nonnegative, got {beta}')
    values, vectors = np.linalg.eigh(ham.matrix)
    weights = np.exp(-beta * (values - values.min()))
    weights = weights / weights.sum()
    return DensityOperator(hermitize((vectors * weights) @ vectors.conj().T))


def dissipator(spec, matrix):
    result = np.zeros_like(matrix, dtype=complex)
    for op in spec.jump_operators:
        adjoint = op.conj().T
        result += op @ matrix @ adjoint - 0.5 * (adjoint @ op @ matrix + matrix @ adjoint @ op)
    return result


def lindblad_generator(spec, rho):
    matrix = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    ham = spec.hamiltonian
    return -1j / ham.hbar * commutator(ham.matrix, matrix) + dissipator(spec, matrix)


def lindblad_residual(spec, rho):
    return float(np.linalg.norm(lindblad_generator(spec, rho)))


def thermal_jump_operators(ham, beta, gamma):
    """Jumps |j><k| between energy levels with detailed-balance rates.

    The rate from k to j is gamma * exp(-beta (E_j - E_k) / 2), so
    gibbs_state(ham, beta) is stationary.
    """
    if gamma < 0:
        raise ValidationException('Jump rate must be nonnegative')
    energies, vectors = np.linalg.eigh(ham.matrix)
    jumps = []
    for j in range(ham.dim):
        for k in range(ham.dim):
            if j == k:
                continue
            rate = gamma * np.exp(-0.5 * beta * (energies[j] - energies[k]))
            jumps.append(np.sqrt(rate) * np.outer(vectors[:, j], vectors[:, k].conj()))
    return tuple(jumps)


@dataclass(frozen=True, eq=False)
class LindbladTrajectory:
    times: np.ndarray
    states: tuple
    residues: np.ndarray

    def __len__(self):
        return len(self.states)

    def __getitem__(self, index):
        return self.states[index]

    def __iter__(self):
        return iter(self.states)

    @property
    def final(self):
        return self.states[-1]


def _project(matrix, dt, t):
    """Hermitize, clamp small negative eigenvalues and renormalize the trace."""
    projected = hermitize(matrix)
    values, vectors = np.linalg.eigh(projected)
    if values.min() < Constants.lindblad_floor:
        raise PositivityException(
            f'Lindblad state lost positivity at t={t:g} (eigenvalue {values.min():.3e})',
            suggested_dt=dt / 2)
    if values.min() < 0:
        values = np.maximum(values, 0.0)
        projected = (vectors * values) @ vectors.conj().T
    projected = projected / np.trace(projected).real
    return projected, float(np.linalg.norm(projected - matrix))


def lindblad_evolve(spec, rho0, t1, dt, t0=0.0, record_every=1):
    """Fixed-step RK4 on the vectorized generator from t0 to t1."""
    if spec.hamiltonian.dim != rho0.dim:
        raise ValidationException('Generator and state dimensions differ')
    if not dt > 0 or not t1 > t0:
        raise ValidationException(f'Need dt > 0 and t1 > t0, got dt={dt}, [{t0}, {t1}]')
    steps = int(round((t1 - t0) / dt))
    if steps < 1 or abs(steps * dt - (t1 - t0)) > 1e-9 * max(1.0, t1 - t0):
        raise ValidationException(f'Horizon {t1 - t0} is not a whole number of steps dt={dt}')
    if record_every < 1 or steps % record_every:
        raise ValidationException(f'record_every={record_every} does not divide {steps} steps')

    dim = rho0.dim
    generator = spec.superoperator()
    vector = rho0.matrix.ravel().astype(complex)
    times, states, residues = [t0], [rho0], [0.0]

    for step in range(steps):
        k1 = generator @ vector
        k2 = generator @ (vector + 0.5 * dt * k1)
        k3 = generator @ (vector + 0.5 * dt * k2)
        k4 = generator @ (vector + dt * k3)
        raw = (vector + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)).reshape(dim, dim)
        t = t0 + (step + 1) * dt
        projected, residue = _project(raw, dt, t)
        vector = projected.ravel()

        if (step + 1) % record_every == 0:
            times.append(t)
            states.append(DensityOperator(projected))
            residues.append(residue)

    residues = np.array(residues)
    if residues.max() > 1e-12:
        logger.warning('Lindblad projection residue reached %.3e', residues.max())
    logger.debug('Lindblad evolution: %d steps of dt=%g, max residue %.3e',
                 steps, dt, residues.max())
    return LindbladTrajectory(np.array(times), tuple(states), residues)


def _require_commuting(rho_bar, ham):
    residue = float(np.linalg.norm(commutator(rho_bar.matrix, ham.matrix)))
    if residue > 1e-10:
        raise ValidationException(
            f'Target state does not commute with the Hamiltonian (|[rho, H]| = {residue:.3e})')


def dissipative_production_rate(rho, spec, rho_bar):
    """trace(L[rho] (log rho - log rho_bar)) for a target commuting with H."""
    _require_commuting(rho_bar, spec.hamiltonian)
    log_ratio = log_operator(rho) - log_operator(rho_bar)
    value = np.trace(dissipator(spec, rho.matrix) @ log_ratio)
    return _real(value, 'dissipative_production_rate')


@dataclass(frozen=True)
class QrecdReport:
    total: float
    hamiltonian_term: float
    dissipative_term: float


def qrecd_rate(rho, delta_h, spec, rho_bar):
    """d/dt D(rho || rho_bar) under the generator with H + dH, split into its two terms."""
    _require_commuting(rho_bar, spec.hamiltonian)
    value = -1j / delta_h.hbar * np.trace(
        rho.matrix @ commutator(delta_h.matrix, log_operator(rho_bar)))
    hamiltonian_term = _real(value, 'qrecd hamiltonian term')
    dissipative_term = dissipative_production_rate(rho, spec, rho_bar)
    return QrecdReport(hamiltonian_term + dissipative_term, hamiltonian_term, dissipative_term)


def _parse_complex(token):
    token = str(token).strip().replace(' ', '')
    if token.endswith('i'):
        token = token[:-1] + 'j'
    try:
        return complex(token)
    except ValueError as err:
        raise ValidationException(f'"{token}" is not a complex number') from err


def format_complex(value):
    imaginary = format_float(value.imag)
    sign = '' if imaginary.startswith('-') else '+'
    return f'{format_float(value.real)}{sign}{imaginary}i'


def read_operator_text(path):
    """Text format: n, then n^2 entries a+bi in row-major order."""
    if not os.path.exists(path):
        raise FileNotFoundException(f'Operator file "{path}" does not exist.')
    with open(path, 'r', encoding='UTF-8') as f:
        tokens = f.read().split()
    try:
        dim = int(tokens[0])
    except (IndexError, ValueError) as err:
        raise ValidationException(f'"{path}" must start with the dimension') from err
    if len(tokens) != dim * dim + 1:
        raise ValidationException(f'"{path}" needs {dim * dim} entries, found {len(tokens) - 1}')
    return np.array([_parse_complex(t) for t in tokens[1:]]).reshape(dim, dim)


def write_operator_text(matrix, path):
    matrix = np.asarray(matrix, dtype=complex)
    with open(path, 'w', encoding='UTF-8') as f:
        f.write(f'{matrix.shape[0]}\n')
        for row in matrix:
            f.write(' '.join(format_complex(v) for v in row) + '\n')


def read_operator_csv(real_path, imag_path=None):
    def read(path):
        if not os.path.exists(path):
            raise FileNotFoundException(f'Operator file "{path}" does not exist.')
        with open(path, 'r', encoding='UTF-8') as f:
            try:
                return np.array([[float(v) for v in row] for row in csv.reader(f) if row])
            except ValueError as err:
                raise ValidationException(f'"{path}" holds non-numeric entries') from err

    real = read(real_path)
    if imag_path is None:
        return real.astype(complex)
    imaginary = read(imag_path)
    if imaginary.shape != real.shape:
        raise ValidationException('Real and imaginary operator parts differ in shape')
    return real + 1j * imaginary


def write_operator_csv(matrix, real_path, imag_path):
    matrix = np.asarray(matrix, dtype=complex)
    for path, part in ((real_path, matrix.real), (imag_path, matrix.imag)):
        with open(path, 'w', encoding='UTF-8', newline='') as f:
            writer = csv.writer(f)
            for row in part:
                writer.writerow([format_float(v) for v in row])


def resolve_operator(value, base_dir=None):
    """Operator from a builtin name, an inline nested list, a text file or a CSV pair."""
    if isinstance(value, (list, tuple)) and value and isinstance(value[0], (list, tuple)):
        return np.array([[_parse_complex(v) for v in row] for row in value])
    if isinstance(value, (list, tuple)) and len(value) == 2:
        real, imaginary = (os.path.join(base_dir or '', v) for v in value)
        return read_operator_csv(real, imaginary)
    if isinstance(value, str):
        if value in BUILTIN_OPERATORS:
            return BUILTIN_OPERATORS[value].copy()
        path = os.path.join(base_dir or '', value)
        if path.endswith('.csv'):
            return read_operator_csv(path)
        return read_operator_text(path)
    raise ValidationException(f'Cannot interpret {value!r} as an operator')
